//! Spectral synthesis of Gaussian fields on regular grids.
//!
//! * Arithmetic random waves: exact finite trigonometric sum.
//! * Random plane waves / band-limited fields: Gaussian superposition of
//!   `M` plane waves, `F(x) = M^{-1/2} sum_j a_j cos(k_j x) + b_j sin(k_j x)`.
//! * Bargmann-Fock: white noise weighted by the square root of the Gaussian
//!   spectral density on a torus padded past the sampling cube, inverse DFT,
//!   crop. Mode coefficients are keyed by their integer frequency, so the same
//!   seed evaluated on a refined grid reproduces the same continuous field.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::ensembles::{
    arithmetic_wavevectors, draw_wavevectors, enumerate_lattice_points, EnsembleKind, EnsembleSpec,
    Wavevector,
};
use crate::error::{Error, Result};
use crate::fft::{inverse_fft_nd, next_smooth};
use crate::rng::{keyed_normal_pair, mix_seed};

/// Wraparound gap of the Bargmann-Fock torus, in correlation lengths.
/// Periodization error of the covariance is below `exp(-PAD^2 / 2)`.
pub const BARGMANN_FOCK_PAD: f64 = 8.0;

/// Modes with `|k|^2 / 2` above this carry spectral weight below e^{-50}.
const BARGMANN_FOCK_LOG_WEIGHT_CUT: f64 = 50.0;

const INTEGER_TOL: f64 = 1e-9;

fn as_integer(x: f64) -> Option<usize> {
    let r = x.round();
    if r >= 0.0 && (x - r).abs() <= INTEGER_TOL * r.max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

/// Regular grid on the cube `[-R, R]^d` with vertices at `-R + i h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub half_width: f64,
    pub spacing: f64,
    pub periodic: bool,
    /// Skip the `h <= h_max` resolution check.
    #[serde(default)]
    pub allow_coarse: bool,
}

impl GridSpec {
    pub fn new(dimension: usize, half_width: f64, spacing: f64, periodic: bool) -> Result<Self> {
        if dimension != 2 && dimension != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dimension}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) || !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidGrid(format!("R = {half_width}, h = {spacing}")));
        }
        match as_integer(2.0 * half_width / spacing) {
            Some(n) if n >= 2 && n % 2 == 0 => {}
            _ => {
                return Err(Error::InvalidGrid(format!(
                    "R / h = {} must be a positive integer so the origin is a vertex",
                    half_width / spacing
                )))
            }
        }
        Ok(GridSpec {
            dimension,
            half_width,
            spacing,
            periodic,
            allow_coarse: false,
        })
    }

    /// Largest spacing `h <= h_max` with `R / h` integral.
    pub fn auto(spec: &EnsembleSpec, half_width: f64, periodic: bool) -> Result<Self> {
        let h_max = spec.max_spacing();
        let mut cells = (2.0 * half_width / h_max - INTEGER_TOL).ceil().max(2.0) as usize;
        cells += cells % 2;
        Self::new(spec.dimension, half_width, 2.0 * half_width / cells as f64, periodic)
    }

    pub fn with_allow_coarse(mut self, allow: bool) -> Self {
        self.allow_coarse = allow;
        self
    }

    /// Same cube at spacing `h / factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let mut g = Self::new(self.dimension, self.half_width, self.spacing / factor as f64, self.periodic)?;
        g.allow_coarse = self.allow_coarse;
        Ok(g)
    }

    /// Number of `h`-cells per axis, `2R / h`.
    pub fn cells_per_axis(&self) -> usize {
        as_integer(2.0 * self.half_width / self.spacing).expect("validated grid")
    }

    pub fn vertices_per_axis(&self) -> usize {
        self.cells_per_axis() + usize::from(!self.periodic)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices_per_axis().pow(self.dimension as u32)
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_axis().pow(self.dimension as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    /// `Vol B(R) = (2R)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dimension as i32)
    }

    /// Per-axis index of the origin vertex.
    pub fn origin_index(&self) -> usize {
        self.cells_per_axis() / 2
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing
    }

    /// Rejects grids the ensemble cannot be sampled on.
    pub fn check_against(&self, spec: &EnsembleSpec) -> Result<()> {
        if self.dimension != spec.dimension {
            return Err(Error::InvalidGrid(format!(
                "grid dimension {} vs ensemble dimension {}",
                self.dimension, spec.dimension
            )));
        }
        let limit = spec.max_spacing();
        if !self.allow_coarse && self.spacing > limit * (1.0 + 1e-12) {
            return Err(Error::GridTooCoarse {
                spacing: self.spacing,
                limit,
            });
        }
        if self.periodic {
            if spec.kind != EnsembleKind::ArithmeticRandomWave {
                return Err(Error::IncompatiblePeriodicity(format!(
                    "{} fields are not sampled on a torus",
                    spec.kind.name()
                )));
            }
            if as_integer(2.0 * self.half_width).is_none() {
                return Err(Error::IncompatiblePeriodicity(format!(
                    "torus side {} is not an integer",
                    2.0 * self.half_width
                )));
            }
        }
        Ok(())
    }
}

/// One realization on the grid vertices (row-major, last axis fastest).
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub spec: EnsembleSpec,
    pub grid: GridSpec,
    pub seed: u64,
    pub values: Vec<f64>,
    pub zero_perturbations: usize,
}

impl FieldSample {
    pub fn vertices_per_axis(&self) -> usize {
        self.grid.vertices_per_axis()
    }

    /// Value-wise negation (the law of a centred Gaussian field is symmetric).
    pub fn negated(&self) -> FieldSample {
        FieldSample {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn value_at(&self, index: &[usize]) -> f64 {
        let n = self.vertices_per_axis();
        let flat = index.iter().fold(0, |acc, &i| acc * n + i);
        self.values[flat]
    }

    /// Writes `<prefix>.bin` (little-endian f64, row-major) and `<prefix>.toml`.
    pub fn dump(&self, prefix: &Path) -> Result<()> {
        let mut bin = std::io::BufWriter::new(std::fs::File::create(prefix.with_extension("bin"))?);
        for v in &self.values {
            bin.write_all(&v.to_le_bytes())?;
        }
        bin.flush()?;
        let meta = SampleMetadata {
            ensemble: self.spec.kind.name().to_string(),
            dimension: self.grid.dimension,
            shape: vec![self.vertices_per_axis(); self.grid.dimension],
            spacing: self.grid.spacing,
            half_width: self.grid.half_width,
            periodic: self.grid.periodic,
            seed: self.seed,
            zero_perturbations: self.zero_perturbations,
        };
        let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(prefix.with_extension("toml"), text)?;
        Ok(())
    }
}

/// Sidecar record describing a binary field dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub ensemble: String,
    pub dimension: usize,
    pub shape: Vec<usize>,
    pub spacing: f64,
    pub half_width: f64,
    pub periodic: bool,
    pub seed: u64,
    pub zero_perturbations: usize,
}

/// Samples one realization; identical inputs give bit-identical output.
pub fn sample_field(spec: &EnsembleSpec, grid: &GridSpec, seed: u64) -> Result<FieldSample> {
    spec.validate()?;
    grid.check_against(spec)?;
    synthesize(spec, grid, seed, None)
}

/// Evaluates the continuous realization of `(spec, coarse, seed)` on the grid
/// refined by `factor` (same waves, same spectral coefficients).
pub fn sample_field_refined(
    spec: &EnsembleSpec,
    coarse: &GridSpec,
    seed: u64,
    factor: usize,
) -> Result<FieldSample> {
    spec.validate()?;
    coarse.check_against(spec)?;
    let fine = coarse.refined(factor)?;
    let torus = bargmann_fock_torus_cells(coarse) * factor;
    synthesize(spec, &fine, seed, Some(torus))
}

fn bargmann_fock_torus_cells(grid: &GridSpec) -> usize {
    let span = 2.0 * grid.half_width + BARGMANN_FOCK_PAD;
    next_smooth((span / grid.spacing - INTEGER_TOL).ceil() as usize)
}

fn synthesize(spec: &EnsembleSpec, grid: &GridSpec, seed: u64, torus_cells: Option<usize>) -> Result<FieldSample> {
    let mut values = match spec.kind {
        EnsembleKind::BargmannFock => {
            let cells = torus_cells.unwrap_or_else(|| bargmann_fock_torus_cells(grid));
            bargmann_fock_values(grid, seed, cells)
        }
        EnsembleKind::RandomPlaneWave | EnsembleKind::BandLimited => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let waves = draw_wavevectors(spec, &mut rng)?;
            let scale = 1.0 / (waves.len() as f64).sqrt();
            superposition_values(grid, &waves, &mut rng, scale)
        }
        EnsembleKind::ArithmeticRandomWave => {
            let set = enumerate_lattice_points(spec.arithmetic_n, spec.dimension)?;
            let waves = arithmetic_wavevectors(&set);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = (2.0 / set.multiplicity() as f64).sqrt();
            superposition_values(grid, &waves, &mut rng, scale)
        }
    };
    let mut zero_perturbations = 0;
    for v in values.iter_mut() {
        if *v == 0.0 {
            *v = f64::EPSILON;
            zero_perturbations += 1;
        }
    }
    Ok(FieldSample {
        spec: spec.clone(),
        grid: grid.clone(),
        seed,
        values,
        zero_perturbations,
    })
}

/// `scale * sum_j Re[(a_j - i b_j) e^{i k_j x}]` evaluated separably.
fn superposition_values<R: Rng>(grid: &GridSpec, waves: &[Wavevector], rng: &mut R, scale: f64) -> Vec<f64> {
    let d = grid.dimension;
    let n = grid.vertices_per_axis();
    let coords: Vec<f64> = (0..n).map(|i| grid.coordinate(i)).collect();
    let coeffs: Vec<Complex<f64>> = waves
        .iter()
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex::new(a, -b) * scale
        })
        .collect();
    let phases = |k: f64| -> Vec<Complex<f64>> {
        coords
            .iter()
            .map(|&x| {
                let (s, c) = (k * x).sin_cos();
                Complex::new(c, s)
            })
            .collect()
    };
    let mut out = vec![0.0; n.pow(d as u32)];
    for (k, c) in waves.iter().zip(&coeffs) {
        let ex = phases(k[0]);
        let ey = phases(k[1]);
        if d == 2 {
            for (ix, exv) in ex.iter().enumerate() {
                let t = c * exv;
                let row = &mut out[ix * n..(ix + 1) * n];
                for (o, e) in row.iter_mut().zip(&ey) {
                    *o += t.re * e.re - t.im * e.im;
                }
            }
        } else {
            let ez = phases(k[2]);
            for (ix, exv) in ex.iter().enumerate() {
                let tx = c * exv;
                for (iy, eyv) in ey.iter().enumerate() {
                    let t = tx * eyv;
                    let base = (ix * n + iy) * n;
                    for (o, e) in out[base..base + n].iter_mut().zip(&ez) {
                        *o += t.re * e.re - t.im * e.im;
                    }
                }
            }
        }
    }
    out
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn bargmann_fock_values(grid: &GridSpec, seed: u64, torus: usize) -> Vec<f64> {
    let d = grid.dimension;
    let length = torus as f64 * grid.spacing;
    let dk = TAU / length;
    // weight = (2 pi)^{d/2} exp(-|k|^2 / 2) / L^d
    let norm = (TAU.powf(d as f64 / 2.0) / length.powi(d as i32)).sqrt();
    let modes: Vec<i64> = (0..torus).map(|i| signed_mode(i, torus)).collect();
    let total = torus.pow(d as u32);
    let mut spectrum = vec![Complex::new(0.0, 0.0); total];
    let coeff = |m: &[i64]| -> Complex<f64> {
        let k2: f64 = m.iter().map(|&c| (c as f64 * dk).powi(2)).sum();
        if 0.5 * k2 > BARGMANN_FOCK_LOG_WEIGHT_CUT {
            return Complex::new(0.0, 0.0);
        }
        let amp = norm * (-0.25 * k2).exp();
        let (g1, g2) = keyed_normal_pair(seed, m);
        Complex::new(amp * g1, amp * g2)
    };
    if d == 2 {
        spectrum.par_chunks_mut(torus).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = coeff(&[modes[i], modes[j]]);
            }
        });
    } else {
        spectrum.par_chunks_mut(torus * torus).enumerate().for_each(|(i, slab)| {
            for j in 0..torus {
                for l in 0..torus {
                    slab[j * torus + l] = coeff(&[modes[i], modes[j], modes[l]]);
                }
            }
        });
    }
    inverse_fft_nd(&mut spectrum, &vec![torus; d]);
    let n = grid.vertices_per_axis();
    let mut out = Vec::with_capacity(n.pow(d as u32));
    if d == 2 {
        for i in 0..n {
            out.extend(spectrum[i * torus..i * torus + n].iter().map(|c| c.re));
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                let base = (i * torus + j) * torus;
                out.extend(spectrum[base..base + n].iter().map(|c| c.re));
            }
        }
    }
    out
}

/// One lag of a covariance validation.
#[derive(Clone, Debug, Serialize)]
pub struct LagCheck {
    /// Requested lag.
    pub lag: Vec<f64>,
    /// Lag actually tested (snapped to whole grid steps).
    pub grid_lag: Vec<f64>,
    pub empirical: f64,
    pub analytic: f64,
    pub standard_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CovarianceReport {
    pub ensemble: String,
    pub replicates: usize,
    pub tolerance: f64,
    pub checks: Vec<LagCheck>,
    pub pass: bool,
}

/// Spatially averaged `F(x) F(x + lag)` of one sample.
fn spatial_lag_product(sample: &FieldSample, offset: &[i64]) -> f64 {
    let d = sample.grid.dimension;
    let n = sample.vertices_per_axis() as i64;
    let periodic = sample.grid.periodic;
    let range = |o: i64| -> (i64, i64) {
        if periodic {
            (0, n)
        } else if o >= 0 {
            (0, n - o)
        } else {
            (-o, n)
        }
    };
    let wrap = |i: i64| -> usize { i.rem_euclid(n) as usize };
    let v = &sample.values;
    let nu = n as usize;
    let mut acc = 0.0;
    let mut count = 0usize;
    let (x0, x1) = range(offset[0]);
    let (y0, y1) = range(offset[1]);
    if d == 2 {
        for x in x0..x1 {
            let xs = wrap(x + offset[0]);
            for y in y0..y1 {
                let ys = wrap(y + offset[1]);
                acc += v[x as usize * nu + y as usize] * v[xs * nu + ys];
                count += 1;
            }
        }
    } else {
        let (z0, z1) = range(offset[2]);
        for x in x0..x1 {
            let xs = wrap(x + offset[0]);
            for y in y0..y1 {
                let ys = wrap(y + offset[1]);
                for z in z0..z1 {
                    let zs = wrap(z + offset[2]);
                    acc += v[(x as usize * nu + y as usize) * nu + z as usize] * v[(xs * nu + ys) * nu + zs];
                    count += 1;
                }
            }
        }
    }
    acc / count as f64
}

/// Empirical covariance gate: fails if `|empirical - analytic| > tolerance + 3 SE`
/// at any lag.
pub fn validate_covariance(
    spec: &EnsembleSpec,
    grid: &GridSpec,
    replicates: usize,
    lags: &[Vec<f64>],
    tolerance: f64,
    base_seed: u64,
) -> Result<CovarianceReport> {
    let model = spec.covariance_model()?;
    grid.check_against(spec)?;
    let offsets: Vec<Vec<i64>> = lags
        .iter()
        .map(|lag| lag.iter().map(|&x| (x / grid.spacing).round() as i64).collect())
        .collect();
    for (lag, off) in lags.iter().zip(&offsets) {
        if lag.len() != spec.dimension {
            return Err(Error::UnsupportedParameter(format!("lag {lag:?} has wrong dimension")));
        }
        let n = grid.vertices_per_axis() as i64;
        if !grid.periodic && off.iter().any(|o| o.abs() >= n) {
            return Err(Error::UnsupportedParameter(format!("lag {lag:?} exceeds the grid")));
        }
    }
    let per_rep: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let s = sample_field(spec, grid, mix_seed(base_seed, 0, i as u64))?;
            Ok(offsets.iter().map(|o| spatial_lag_product(&s, o)).collect())
        })
        .collect::<Result<_>>()?;
    let reps = replicates as f64;
    let checks: Vec<LagCheck> = lags
        .iter()
        .zip(&offsets)
        .enumerate()
        .map(|(li, (lag, off))| {
            let mean = per_rep.iter().map(|r| r[li]).sum::<f64>() / reps;
            let var = per_rep.iter().map(|r| (r[li] - mean).powi(2)).sum::<f64>() / (reps - 1.0).max(1.0);
            let se = (var / reps).sqrt();
            let grid_lag: Vec<f64> = off.iter().map(|&o| o as f64 * grid.spacing).collect();
            let analytic = model.eval(&grid_lag);
            LagCheck {
                lag: lag.clone(),
                grid_lag,
                empirical: mean,
                analytic,
                standard_error: se,
                pass: (mean - analytic).abs() <= tolerance + 3.0 * se,
            }
        })
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(CovarianceReport {
        ensemble: spec.kind.name().to_string(),
        replicates,
        tolerance,
        checks,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(2, 16.0, 0.25, false).is_ok());
        assert!(matches!(GridSpec::new(2, 1.0, 0.3, false), Err(Error::InvalidGrid(_))));
        // 2R/h = 5 is integral but the origin is not a vertex
        assert!(GridSpec::new(2, 1.25, 0.5, false).is_err());
        let g = GridSpec::new(2, 2.0, 0.5, false).unwrap();
        assert_eq!(g.cells_per_axis(), 8);
        assert_eq!(g.vertices_per_axis(), 9);
        assert_eq!(g.origin_index(), 4);
        assert_eq!(g.coordinate(4), 0.0);
        let p = GridSpec::new(2, 0.5, 1.0 / 128.0, true).unwrap();
        assert_eq!(p.vertices_per_axis(), 128);
    }

    #[test]
    fn auto_spacing_respects_limit() {
        let spec = EnsembleSpec::bargmann_fock(2);
        let g = GridSpec::auto(&spec, 16.0, false).unwrap();
        assert!(g.spacing <= spec.max_spacing());
        assert_eq!(g.cells_per_axis() % 2, 0);
        let arw = EnsembleSpec::arithmetic(2, 1105);
        let g = GridSpec::auto(&arw, 0.5, true).unwrap();
        assert!(g.spacing <= arw.max_spacing());
    }

    #[test]
    fn coarse_and_periodic_errors() {
        let spec = EnsembleSpec::bargmann_fock(2);
        let g = GridSpec::new(2, 4.0, 0.5, false).unwrap();
        assert!(matches!(sample_field(&spec, &g, 1), Err(Error::GridTooCoarse { .. })));
        assert!(sample_field(&spec, &g.clone().with_allow_coarse(true), 1).is_ok());
        let torus = GridSpec::new(2, 4.0, 0.25, true).unwrap();
        assert!(matches!(sample_field(&spec, &torus, 1), Err(Error::IncompatiblePeriodicity(_))));
        let arw = EnsembleSpec::arithmetic(2, 1);
        let odd_side = GridSpec::new(2, 0.75, 0.015625, true).unwrap();
        assert!(matches!(sample_field(&arw, &odd_side, 1), Err(Error::IncompatiblePeriodicity(_))));
    }

    #[test]
    fn deterministic_per_seed() {
        for spec in [
            EnsembleSpec::bargmann_fock(2),
            EnsembleSpec::random_plane_wave(2),
            EnsembleSpec::band_limited(3, 0.5),
            EnsembleSpec::arithmetic(2, 5),
        ] {
            let g = GridSpec::auto(&spec, 2.0, false).unwrap();
            let a = sample_field(&spec, &g, 42).unwrap();
            let b = sample_field(&spec, &g, 42).unwrap();
            assert_eq!(a.values, b.values);
            let c = sample_field(&spec, &g, 43).unwrap();
            assert_ne!(a.values, c.values);
            assert_eq!(a.values.len(), g.num_vertices());
            assert!(a.values.iter().all(|&v| v != 0.0));
        }
    }

    /// The n = 1 lattice sum is linear in the four functions
    /// cos(2 pi x), sin(2 pi x), cos(2 pi y), sin(2 pi y); a least-squares fit
    /// on that basis must reproduce the sample.
    #[test]
    fn arithmetic_n1_is_two_cosines() {
        let spec = EnsembleSpec::arithmetic(2, 1);
        let grid = GridSpec::new(2, 0.5, 1.0 / 32.0, true).unwrap();
        for seed in 0..5 {
            let s = sample_field(&spec, &grid, seed).unwrap();
            let n = grid.vertices_per_axis();
            let basis = |x: f64, y: f64| {
                [
                    (TAU * x).cos(),
                    (TAU * x).sin(),
                    (TAU * y).cos(),
                    (TAU * y).sin(),
                ]
            };
            // the basis is orthogonal on the uniform torus grid
            let mut coef = [0.0; 4];
            for i in 0..n {
                for j in 0..n {
                    let b = basis(grid.coordinate(i), grid.coordinate(j));
                    for k in 0..4 {
                        coef[k] += s.values[i * n + j] * b[k];
                    }
                }
            }
            for c in coef.iter_mut() {
                *c *= 2.0 / (n * n) as f64;
            }
            let mut resid: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let b = basis(grid.coordinate(i), grid.coordinate(j));
                    let fit: f64 = (0..4).map(|k| coef[k] * b[k]).sum();
                    resid = resid.max((fit - s.values[i * n + j]).abs());
                }
            }
            assert!(resid < 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn bargmann_fock_unit_variance_and_short_correlation() {
        let spec = EnsembleSpec::bargmann_fock(2);
        let grid = GridSpec::new(2, 8.0, 0.25, false).unwrap();
        let lags = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 0.0]];
        let report = validate_covariance(&spec, &grid, 200, &lags, 0.02, 17).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn arithmetic_lag_one_is_perfect_correlation() {
        let spec = EnsembleSpec::arithmetic(2, 1);
        let torus = GridSpec::new(2, 0.5, 1.0 / 16.0, true).unwrap();
        let report = validate_covariance(&spec, &torus, 100, &[vec![1.0, 0.0], vec![0.0, 0.0]], 0.0, 5).unwrap();
        assert!(report.pass, "{report:?}");
        for c in &report.checks {
            assert!((c.empirical - 1.0).abs() <= 3.0 * c.standard_error + 1e-12);
        }
        let cube = GridSpec::new(2, 2.0, 1.0 / 16.0, false).unwrap();
        let report = validate_covariance(&spec, &cube, 100, &[vec![1.0, 0.0]], 0.0, 5).unwrap();
        assert!((report.checks[0].analytic - 1.0).abs() < 1e-12);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn bargmann_fock_refinement_reproduces_coarse_vertices() {
        let spec = EnsembleSpec::bargmann_fock(2);
        let grid = GridSpec::new(2, 4.0, 0.25, false).unwrap();
        let coarse = sample_field(&spec, &grid, 9).unwrap();
        let fine = sample_field_refined(&spec, &grid, 9, 2).unwrap();
        let n = grid.vertices_per_axis();
        let nf = fine.vertices_per_axis();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = coarse.values[i * n + j];
                let b = fine.values[2 * i * nf + 2 * j];
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn superposition_refinement_reproduces_coarse_vertices() {
        let spec = EnsembleSpec::random_plane_wave(2);
        let grid = GridSpec::auto(&spec, 6.0, false).unwrap();
        let coarse = sample_field(&spec, &grid, 4).unwrap();
        let fine = sample_field_refined(&spec, &grid, 4, 2).unwrap();
        let n = grid.vertices_per_axis();
        let nf = fine.vertices_per_axis();
        for i in 0..n {
            for j in 0..n {
                assert!((coarse.values[i * n + j] - fine.values[2 * i * nf + 2 * j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dump_writes_binary_and_metadata() {
        let spec = EnsembleSpec::bargmann_fock(2);
        let grid = GridSpec::new(2, 1.0, 0.25, false).unwrap();
        let s = sample_field(&spec, &grid, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("field");
        s.dump(&prefix).unwrap();
        let bytes = std::fs::read(prefix.with_extension("bin")).unwrap();
        assert_eq!(bytes.len(), 8 * s.values.len());
        let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
        assert_eq!(first, s.values[0]);
        let meta: SampleMetadata = toml::from_str(&std::fs::read_to_string(prefix.with_extension("toml")).unwrap()).unwrap();
        assert_eq!(meta.shape, vec![9, 9]);
        assert_eq!(meta.seed, 3);
    }

    #[test]
    fn stationary_mean_at_fixed_vertex() {
        let spec = EnsembleSpec::bargmann_fock(2);
        let grid = GridSpec::new(2, 4.0, 0.25, false).unwrap();
        let reps = 400;
        let idx = [grid.origin_index(), 3];
        let vals: Vec<f64> = (0..reps)
            .map(|i| sample_field(&spec, &grid, mix_seed(1, 0, i)).unwrap().value_at(&idx))
            .collect();
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        assert!(mean.abs() < 3.0 * (var / reps as f64).sqrt());
    }
}
