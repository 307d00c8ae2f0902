//! Bessel functions of the first kind (orders 0 and 1), `sinc`, and the
//! radial Fourier transforms of a uniform annulus / spherical shell.
//!
//! Absolute error is below 1e-10 on `|x| <= 1e3`; the unit tests compare
//! against trapezoidal quadrature of the Bessel integral representation.

/// Power series inside this radius; cancellation stays below ~1e-12 there.
const SERIES_LIMIT: f64 = 12.0;
/// Hankel asymptotic expansion beyond this radius (smallest term ~ e^{-2x}).
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series_j0(ax)
    } else if ax < ASYMPTOTIC_LIMIT {
        miller(ax).0
    } else {
        hankel(0.0, ax)
    }
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        0.5 * ax * series_j1_over_x(ax)
    } else if ax < ASYMPTOTIC_LIMIT {
        miller(ax).1
    } else {
        hankel(1.0, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

fn series_j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// `2 J1(x) / x` as a power series.
fn series_j1_over_x(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Miller backward recurrence normalized by `J0 + 2 sum J_{2k} = 1`.
fn miller(x: f64) -> (f64, f64) {
    let start = x as usize + 20 + (40.0 * x).sqrt() as usize;
    let start = start + (start & 1);
    let two_over_x = 2.0 / x;
    let mut j_next = 0.0;
    let mut j_cur = 1e-30;
    let mut norm = 0.0;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let j_prev = (k as f64) * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds J_{k-1}
        let order = k - 1;
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * j_cur;
        }
        if order == 1 {
            j1 = j_cur;
        }
        if order == 0 {
            j0 = j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let mag = term.abs();
        if mag > prev || mag < 1e-17 {
            break;
        }
        prev = mag;
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    let chi = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Normalized Fourier transform of the uniform measure on the planar annulus
/// `alpha <= |k| <= 1`, evaluated at radius `s`. Equals 1 at `s = 0`.
pub fn annulus_transform_2d(alpha: f64, s: f64) -> f64 {
    if alpha >= 1.0 {
        return bessel_j0(s);
    }
    let s = s.abs();
    if s <= SERIES_LIMIT {
        // sum_k (-1)^k (s^2/4)^k (1 - a^{2k+2}) / ((1 - a^2) k! (k+1)!)
        let q = 0.25 * s * s;
        let a2 = alpha * alpha;
        let mut coeff = 1.0;
        let mut geom = 1.0;
        let mut a_pow = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            let kf = k as f64;
            coeff *= -q / (kf * (kf + 1.0));
            a_pow *= a2;
            geom += a_pow;
            let term = coeff * geom;
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    } else {
        2.0 * (bessel_j1(s) - alpha * bessel_j1(alpha * s)) / ((1.0 - alpha * alpha) * s)
    }
}

/// Normalized Fourier transform of the uniform measure on the spherical
/// shell `alpha <= |k| <= 1` in three dimensions.
pub fn shell_transform_3d(alpha: f64, s: f64) -> f64 {
    if alpha >= 1.0 {
        return sinc(s);
    }
    let s = s.abs();
    if s <= SERIES_LIMIT {
        // 3 sum_{k>=1} (-1)^{k+1} s^{2k-2} 2k/(2k+1)! (1-a^{2k+1})/(1-a^3)
        let denom = 1.0 + alpha + alpha * alpha;
        let s2 = s * s;
        let mut fact_term = 2.0 / 6.0; // 2k/(2k+1)! at k = 1
        let mut s_pow = 1.0;
        let mut a_pow = alpha * alpha * alpha;
        let mut geom = denom; // sum_{j<2k+1} a^j at k = 1
        let mut sum = 0.0;
        for k in 1..80 {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let term = 3.0 * sign * s_pow * fact_term * geom / denom;
            sum += term;
            if term.abs() < 1e-18 && k > 1 {
                break;
            }
            let kf = k as f64;
            // advance to k + 1
            s_pow *= s2;
            fact_term *= (2.0 * kf + 2.0) / (2.0 * kf)
                / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            geom += a_pow + a_pow * alpha;
            a_pow *= alpha * alpha;
        }
        sum
    } else {
        let g = |z: f64| z.sin() - z * z.cos();
        3.0 * (g(s) - g(alpha * s)) / ((1.0 - alpha.powi(3)) * s * s * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt; the integrand is smooth
    /// and periodic so the trapezoid rule converges geometrically.
    fn quad_jn(n: f64, x: f64) -> f64 {
        let m = 8192;
        let h = PI / m as f64;
        let mut s = 0.5 * ((0.0f64).cos() + (n * PI - x * PI.sin()).cos());
        for i in 1..m {
            let t = i as f64 * h;
            s += (n * t - x * t.sin()).cos();
        }
        s * h / PI
    }

    /// Midpoint-rule radial quadrature of the annulus transform.
    fn quad_annulus_2d(alpha: f64, s: f64) -> f64 {
        let m = 4000;
        let h = (1.0 - alpha) / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let r = alpha + (i as f64 + 0.5) * h;
            acc += quad_jn(0.0, r * s) * r;
        }
        acc * h * 2.0 / (1.0 - alpha * alpha)
    }

    fn quad_shell_3d(alpha: f64, s: f64) -> f64 {
        let m = 20000;
        let h = (1.0 - alpha) / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let r = alpha + (i as f64 + 0.5) * h;
            let z = r * s;
            let sc = if z == 0.0 { 1.0 } else { z.sin() / z };
            acc += sc * r * r;
        }
        acc * h * 3.0 / (1.0 - alpha.powi(3))
    }

    #[test]
    fn j0_j1_match_quadrature_over_range() {
        let mut x = -3.0;
        while x < 400.0 {
            let e0 = (bessel_j0(x) - quad_jn(0.0, x)).abs();
            let e1 = (bessel_j1(x) - quad_jn(1.0, x)).abs();
            assert!(e0 < 1e-10, "J0({x}) err {e0}");
            assert!(e1 < 1e-10, "J1({x}) err {e1}");
            x += if x < 40.0 { 0.173 } else { 3.71 };
        }
        for &x in &[11.99, 12.0, 12.01, 24.99, 25.0, 25.01, 600.0, 999.0] {
            assert!((bessel_j0(x) - quad_jn(0.0, x)).abs() < 1e-10, "J0({x})");
            assert!((bessel_j1(x) - quad_jn(1.0, x)).abs() < 1e-10, "J1({x})");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let z = 2.404_825_557_695_773;
        assert!(bessel_j0(z).abs() < 1e-9);
        assert!(quad_jn(0.0, z).abs() < 1e-9);
    }

    #[test]
    fn annulus_and_shell_match_radial_quadrature() {
        for &alpha in &[0.0, 0.3, 0.7, 0.95] {
            for &s in &[0.0, 0.5, 2.0, 7.5, 11.9, 12.1, 20.0, 45.0] {
                let a = annulus_transform_2d(alpha, s);
                let q = quad_annulus_2d(alpha, s);
                assert!((a - q).abs() < 1e-7, "annulus a={alpha} s={s}: {a} vs {q}");
                let b = shell_transform_3d(alpha, s);
                let qb = quad_shell_3d(alpha, s);
                assert!((b - qb).abs() < 1e-8, "shell a={alpha} s={s}: {b} vs {qb}");
            }
        }
    }

    #[test]
    fn series_and_closed_forms_agree_at_switch() {
        for &alpha in &[0.0, 0.5] {
            let s = SERIES_LIMIT;
            let closed2 = 2.0 * (bessel_j1(s) - alpha * bessel_j1(alpha * s))
                / ((1.0 - alpha * alpha) * s);
            assert!((annulus_transform_2d(alpha, s) - closed2).abs() < 1e-11);
            let g = |z: f64| z.sin() - z * z.cos();
            let closed3 = 3.0 * (g(s) - g(alpha * s)) / ((1.0 - alpha.powi(3)) * s.powi(3));
            assert!((shell_transform_3d(alpha, s) - closed3).abs() < 1e-11);
        }
        assert_eq!(annulus_transform_2d(0.4, 0.0), 1.0);
        assert!((shell_transform_3d(0.4, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(annulus_transform_2d(1.0, 3.0), bessel_j0(3.0));
    }

    #[test]
    fn sinc_small_argument() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(1e-5) - (1e-5f64).sin() / 1e-5).abs() < 1e-15);
        assert!((sinc(PI)).abs() < 1e-15);
    }
}
