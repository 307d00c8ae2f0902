//! Gaussian ensembles: analytic covariances, spectral samplers and the
//! lattice data of arithmetic random waves.
//!
//! Every ensemble has unit variance. Shipped spectral measures are
//! symmetric, have compact support or Gaussian decay (so all spectral
//! moments are finite), and are not supported on a linear hyperplane.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{annulus_transform_2d, bessel_j0, shell_transform_3d, sinc};

/// Effective spectral cutoff used by the grid resolution rule for the
/// Gaussian spectral density of the Bargmann-Fock field.
const BARGMANN_FOCK_EFFECTIVE_K: f64 = 3.0;

/// Wavevectors are stored zero-padded to three components.
pub type Wavevector = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    BargmannFock,
    RandomPlaneWave,
    BandLimited,
    ArithmeticRandomWave,
}

impl EnsembleKind {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::BargmannFock => "bargmann-fock",
            EnsembleKind::RandomPlaneWave => "random-plane-wave",
            EnsembleKind::BandLimited => "band-limited",
            EnsembleKind::ArithmeticRandomWave => "arithmetic-random-wave",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bargmann-fock" | "bf" => Ok(EnsembleKind::BargmannFock),
            "random-plane-wave" | "rpw" => Ok(EnsembleKind::RandomPlaneWave),
            "band-limited" | "bl" => Ok(EnsembleKind::BandLimited),
            "arithmetic-random-wave" | "arw" => Ok(EnsembleKind::ArithmeticRandomWave),
            other => Err(Error::UnsupportedParameter(format!("unknown ensemble `{other}`"))),
        }
    }
}

/// Declarative description of a stationary Gaussian ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub dimension: usize,
    /// Inner radius of the spectral annulus (band-limited only).
    pub band_alpha: f64,
    /// Eigenvalue parameter `n = |lambda|^2` (arithmetic waves only).
    pub arithmetic_n: u64,
    /// Number of wavevectors for superposition synthesis.
    pub num_waves: usize,
}

pub fn default_num_waves(dimension: usize) -> usize {
    if dimension == 2 {
        256
    } else {
        512
    }
}

impl EnsembleSpec {
    fn base(kind: EnsembleKind, dimension: usize) -> Self {
        EnsembleSpec {
            kind,
            dimension,
            band_alpha: 0.0,
            arithmetic_n: 1,
            num_waves: default_num_waves(dimension),
        }
    }

    pub fn bargmann_fock(dimension: usize) -> Self {
        Self::base(EnsembleKind::BargmannFock, dimension)
    }

    pub fn random_plane_wave(dimension: usize) -> Self {
        Self::base(EnsembleKind::RandomPlaneWave, dimension)
    }

    pub fn band_limited(dimension: usize, alpha: f64) -> Self {
        EnsembleSpec {
            band_alpha: alpha,
            ..Self::base(EnsembleKind::BandLimited, dimension)
        }
    }

    pub fn arithmetic(dimension: usize, n: u64) -> Self {
        EnsembleSpec {
            arithmetic_n: n,
            ..Self::base(EnsembleKind::ArithmeticRandomWave, dimension)
        }
    }

    pub fn with_num_waves(mut self, m: usize) -> Self {
        self.num_waves = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 2 && self.dimension != 3 {
            return Err(Error::UnsupportedParameter(format!(
                "dimension {} (only 2 and 3 are supported)",
                self.dimension
            )));
        }
        match self.kind {
            EnsembleKind::BandLimited => {
                if !(0.0..=1.0).contains(&self.band_alpha) {
                    return Err(Error::UnsupportedParameter(format!(
                        "band_alpha {} outside [0, 1]",
                        self.band_alpha
                    )));
                }
            }
            EnsembleKind::ArithmeticRandomWave => {
                if self.arithmetic_n == 0 {
                    return Err(Error::UnsupportedParameter("arithmetic_n must be positive".into()));
                }
                if !is_sum_of_squares(self.arithmetic_n, self.dimension) {
                    return Err(Error::NoRepresentation {
                        n: self.arithmetic_n,
                        d: self.dimension,
                    });
                }
            }
            _ => {}
        }
        if self.uses_superposition() && self.num_waves == 0 {
            return Err(Error::UnsupportedParameter("num_waves must be positive".into()));
        }
        Ok(())
    }

    /// Random plane waves and band-limited fields are drawn as finite
    /// superpositions of plane waves.
    pub fn uses_superposition(&self) -> bool {
        matches!(self.kind, EnsembleKind::RandomPlaneWave | EnsembleKind::BandLimited)
    }

    /// Largest spectral radius relevant for the grid resolution rule.
    pub fn max_wavenumber(&self) -> f64 {
        match self.kind {
            EnsembleKind::RandomPlaneWave | EnsembleKind::BandLimited => 1.0,
            EnsembleKind::ArithmeticRandomWave => TAU * (self.arithmetic_n as f64).sqrt(),
            EnsembleKind::BargmannFock => BARGMANN_FOCK_EFFECTIVE_K,
        }
    }

    /// `h_max`: one eighth of the shortest relevant wavelength.
    pub fn max_spacing(&self) -> f64 {
        TAU / (8.0 * self.max_wavenumber())
    }

    /// Builds an evaluator that caches lattice data.
    pub fn covariance_model(&self) -> Result<CovarianceModel> {
        CovarianceModel::new(self.clone())
    }
}

/// Lattice points `lambda` in `Z^d` with `|lambda|^2 = n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePointSet {
    pub n: u64,
    pub dimension: usize,
    pub points: Vec<Vec<i64>>,
}

impl LatticePointSet {
    /// `r_d(n)`.
    pub fn multiplicity(&self) -> usize {
        self.points.len()
    }

    /// One representative of each `{lambda, -lambda}` pair (the
    /// lexicographically positive one).
    pub fn half(&self) -> Vec<Vec<i64>> {
        self.points
            .iter()
            .filter(|p| p.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
            .cloned()
            .collect()
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn is_sum_of_squares(n: u64, d: usize) -> bool {
    let b = isqrt(n);
    match d {
        2 => (0..=b).any(|a| {
            let rest = n - a * a;
            let s = isqrt(rest);
            s * s == rest
        }),
        3 => (0..=b).any(|a| {
            let r1 = n - a * a;
            (0..=isqrt(r1)).any(|c| {
                let rest = r1 - c * c;
                let s = isqrt(rest);
                s * s == rest
            })
        }),
        _ => false,
    }
}

/// Exhaustive search over the cube `|lambda_i| <= floor(sqrt(n))`.
pub fn enumerate_lattice_points(n: u64, d: usize) -> Result<LatticePointSet> {
    if n == 0 {
        return Err(Error::UnsupportedParameter("n must be positive".into()));
    }
    if d != 2 && d != 3 {
        return Err(Error::UnsupportedParameter(format!("dimension {d}")));
    }
    let b = isqrt(n) as i64;
    let n_i = n as i64;
    let mut points = Vec::new();
    if d == 2 {
        for x in -b..=b {
            for y in -b..=b {
                if x * x + y * y == n_i {
                    points.push(vec![x, y]);
                }
            }
        }
    } else {
        for x in -b..=b {
            for y in -b..=b {
                let r = n_i - x * x - y * y;
                if r < 0 {
                    continue;
                }
                let z = isqrt(r as u64) as i64;
                if z * z == r {
                    points.push(vec![x, y, -z]);
                    if z != 0 {
                        points.push(vec![x, y, z]);
                    }
                }
            }
        }
        points.sort();
    }
    if points.is_empty() {
        return Err(Error::NoRepresentation { n, d });
    }
    Ok(LatticePointSet { n, dimension: d, points })
}

/// Analytic covariance evaluator for a validated spec.
#[derive(Clone, Debug)]
pub struct CovarianceModel {
    spec: EnsembleSpec,
    lattice: Option<LatticePointSet>,
}

impl CovarianceModel {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let lattice = match spec.kind {
            EnsembleKind::ArithmeticRandomWave => {
                Some(enumerate_lattice_points(spec.arithmetic_n, spec.dimension)?)
            }
            _ => None,
        };
        Ok(CovarianceModel { spec, lattice })
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn eval(&self, lag: &[f64]) -> f64 {
        debug_assert_eq!(lag.len(), self.spec.dimension);
        let r = lag.iter().map(|x| x * x).sum::<f64>().sqrt();
        let d = self.spec.dimension;
        match self.spec.kind {
            EnsembleKind::BargmannFock => (-0.5 * r * r).exp(),
            EnsembleKind::RandomPlaneWave => {
                if d == 2 {
                    bessel_j0(r)
                } else {
                    sinc(r)
                }
            }
            EnsembleKind::BandLimited => {
                if d == 2 {
                    annulus_transform_2d(self.spec.band_alpha, r)
                } else {
                    shell_transform_3d(self.spec.band_alpha, r)
                }
            }
            EnsembleKind::ArithmeticRandomWave => {
                let set = self.lattice.as_ref().expect("lattice cached for arithmetic waves");
                let sum: f64 = set
                    .points
                    .iter()
                    .map(|p| {
                        let phase: f64 = p.iter().zip(lag).map(|(&l, &x)| l as f64 * x).sum();
                        (TAU * phase).cos()
                    })
                    .sum();
                sum / set.multiplicity() as f64
            }
        }
    }
}

/// Analytic covariance `r_F(lag)`.
pub fn covariance(spec: &EnsembleSpec, lag: &[f64]) -> Result<f64> {
    if lag.len() != spec.dimension {
        return Err(Error::UnsupportedParameter(format!(
            "lag of length {} for dimension {}",
            lag.len(),
            spec.dimension
        )));
    }
    Ok(CovarianceModel::new(spec.clone())?.eval(lag))
}

/// `m` unit vectors at angles `rotation + 2 pi j / m`.
pub fn equispaced_directions(m: usize, rotation: f64) -> Vec<Wavevector> {
    (0..m)
        .map(|j| {
            let theta = rotation + TAU * j as f64 / m as f64;
            [theta.cos(), theta.sin(), 0.0]
        })
        .collect()
}

fn uniform_sphere_point<R: Rng + ?Sized>(rng: &mut R) -> Wavevector {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    [rho * phi.cos(), rho * phi.sin(), z]
}

/// Finite frequency set realizing the spectral measure of a superposition
/// ensemble. Deterministic given the generator state.
pub fn draw_wavevectors<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Vec<Wavevector>> {
    spec.validate()?;
    if !spec.uses_superposition() {
        return Err(Error::UnsupportedParameter(format!(
            "{} is not synthesized by plane-wave superposition",
            spec.kind.name()
        )));
    }
    let m = spec.num_waves;
    let mut dirs = if spec.dimension == 2 {
        let rotation = rng.random_range(0.0..TAU);
        equispaced_directions(m, rotation)
    } else {
        (0..m).map(|_| uniform_sphere_point(rng)).collect()
    };
    if spec.kind == EnsembleKind::BandLimited && spec.band_alpha < 1.0 {
        let d = spec.dimension as i32;
        let inner = spec.band_alpha.powi(d);
        for k in dirs.iter_mut() {
            // radius with density proportional to r^{d-1} on [alpha, 1]
            let u: f64 = rng.random();
            let r = (inner + u * (1.0 - inner)).powf(1.0 / d as f64);
            for c in k.iter_mut() {
                *c *= r;
            }
        }
    }
    Ok(dirs)
}

/// Wavevectors `2 pi lambda` for one representative of each `+-lambda` pair.
pub fn arithmetic_wavevectors(set: &LatticePointSet) -> Vec<Wavevector> {
    set.half()
        .iter()
        .map(|p| {
            let mut k = [0.0; 3];
            for (c, &l) in k.iter_mut().zip(p) {
                *c = 2.0 * PI * l as f64;
            }
            k
        })
        .collect()
}
