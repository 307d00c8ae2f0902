use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Lines gathered per batch when transforming a strided axis.
const BATCH: usize = 32;

/// Unnormalized multidimensional inverse DFT,
/// `x[j] = sum_m X[m] exp(+2 pi i <m, j> / n)`, over a row-major array whose
/// last axis is contiguous.
pub fn inverse_fft_nd(data: &mut [Complex<f64>], dims: &[usize]) {
    debug_assert_eq!(data.len(), dims.iter().product::<usize>());
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..dims.len() {
        let n = dims[axis];
        if n <= 1 {
            continue;
        }
        let fft = planner.plan_fft_inverse(n);
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        if inner == 1 {
            fft.process(data);
            continue;
        }
        let mut buf = vec![Complex::new(0.0, 0.0); BATCH * n];
        for o in 0..outer {
            let base = o * n * inner;
            let mut i0 = 0;
            while i0 < inner {
                let width = BATCH.min(inner - i0);
                for t in 0..n {
                    let src = base + t * inner + i0;
                    for b in 0..width {
                        buf[b * n + t] = data[src + b];
                    }
                }
                fft.process(&mut buf[..width * n]);
                for t in 0..n {
                    let dst = base + t * inner + i0;
                    for b in 0..width {
                        data[dst + b] = buf[b * n + t];
                    }
                }
                i0 += width;
            }
        }
    }
}

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5}.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
