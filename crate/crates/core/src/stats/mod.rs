//! Estimators built from per-replicate topology: Nazarov-Sodin density,
//! percolation probability, connectivity measure, volume distribution and the
//! degree tail exponent.

mod accumulate;
mod output;

use std::collections::BTreeMap;

use serde::Serialize;

pub use accumulate::{
    accumulate, mean_volume_identity, IdentityResiduals, MeanVolumeIdentity, Moments, MonteCarloReport,
    RadiusAccumulator, RadiusReport, ReplicateSummary, Var, PSI_GRID_POINTS,
};
pub use output::{write_mu_csv, write_psi_csv, write_stats_csv, MU_COLUMNS, PSI_COLUMNS, STATS_COLUMNS};

use crate::error::{Error, Result};
use crate::nodal::{count_t, DomainLabeling, NestingTree};

/// `187/91`, the area-distribution exponent of planar percolation clusters.
pub const FISHER_EXPONENT: f64 = 187.0 / 91.0;

/// 12 significant digits, exponent form.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "nan".to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Estimate { value, se }
    }

    pub fn nan() -> Self {
        Estimate::new(f64::NAN, f64::NAN)
    }

    /// Joint standard error of the difference of two independent estimates.
    pub fn joint_se(&self, other: &Estimate) -> f64 {
        self.se.hypot(other.se)
    }
}

/// Empirical degree distribution of interior domains in `G(R)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConnectivityMeasure {
    /// `count[k]`: interior domains with interior degree `k`, pooled.
    pub counts: Vec<u64>,
    /// Pooled `|V(R)|`.
    pub total: u64,
    pub mu: Vec<f64>,
    /// Binomial standard errors `sqrt(mu (1 - mu) / total)`.
    pub se: Vec<f64>,
    /// Replicates without interior domains, excluded from the pool.
    pub excluded_replicates: u64,
}

impl ConnectivityMeasure {
    pub fn from_pooled(counts: &[u64], excluded_replicates: u64) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::NoInteriorDomains);
        }
        let mut counts = counts.to_vec();
        while counts.last() == Some(&0) {
            counts.pop();
        }
        let t = total as f64;
        let mu: Vec<f64> = counts.iter().map(|&c| c as f64 / t).collect();
        let se = mu.iter().map(|&m| (m * (1.0 - m) / t).sqrt()).collect();
        Ok(ConnectivityMeasure {
            counts,
            total,
            mu,
            se,
            excluded_replicates,
        })
    }

    /// `sum_k k mu(k)`.
    pub fn mean_degree(&self) -> f64 {
        self.mu.iter().enumerate().map(|(k, m)| k as f64 * m).sum()
    }

    /// Total variation distance `1/2 sum_k |mu(k) - nu(k)|`.
    pub fn total_variation(&self, other: &ConnectivityMeasure) -> f64 {
        let len = self.mu.len().max(other.mu.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        0.5 * (0..len).map(|k| (get(&self.mu, k) - get(&other.mu, k)).abs()).sum::<f64>()
    }
}

/// Pools the interior-degree histograms of replicates (d = 2, trees built).
pub fn connectivity_measure(replicates: &[ReplicateSummary]) -> Result<ConnectivityMeasure> {
    let mut pooled: Vec<u64> = Vec::new();
    let mut excluded = 0;
    for r in replicates {
        if r.interior_domains == 0 {
            excluded += 1;
            continue;
        }
        let hist = r
            .degree_histogram
            .as_ref()
            .ok_or_else(|| Error::UnsupportedParameter("replicate has no nesting tree".into()))?;
        if pooled.len() < hist.len() {
            pooled.resize(hist.len(), 0);
        }
        for (p, h) in pooled.iter_mut().zip(hist) {
            *p += h;
        }
    }
    ConnectivityMeasure::from_pooled(&pooled, excluded)
}

/// `C(R) = sum d-bar(v) - sum_{interior} d(v)`, cross-checked against
/// `2(N-bar - 1) - 2(N - T)`. Without a tree (d = 3) only the second form is
/// available.
pub fn boundary_connectivity(labeling: &DomainLabeling, tree: Option<&NestingTree>) -> Result<i64> {
    let nbar = labeling.total_domains() as i64;
    let n = labeling.interior_domains() as i64;
    let t = count_t(labeling) as i64;
    let euler = euler_boundary_connectivity(nbar, n, t);
    match tree {
        Some(tree) => {
            let direct = tree.sum_full_degree() as i64 - tree.sum_interior_degree() as i64;
            if direct != euler {
                return Err(Error::TopologyInconsistency(format!(
                    "boundary connectivity {direct} from degrees vs {euler} from Euler counts"
                )));
            }
            Ok(direct)
        }
        None => Ok(euler),
    }
}

/// `2(N-bar - 1) - 2(N - T)`, zero for an empty cube.
pub fn euler_boundary_connectivity(total_domains: i64, interior_domains: i64, t: i64) -> i64 {
    if total_domains == 0 {
        return 0;
    }
    2 * (total_domains - 1) - 2 * (interior_domains - t)
}

/// Volume distribution `Psi(t)` on a logarithmic grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeCdf {
    pub t: Vec<f64>,
    pub psi: Vec<f64>,
    /// `int_0^{Vol B} (1 - Psi(t)) dt`, exact for the step function.
    pub integral_complement: f64,
    /// `c_NS * Vol B * replicates`.
    pub normalization: f64,
}

/// `Psi(t) = #{interior domains with volume < t} / (c_NS Vol B reps)`.
///
/// `volumes` maps a domain size in cells to its pooled multiplicity.
pub fn volume_cdf(
    volumes: &BTreeMap<u64, u64>,
    cell_volume: f64,
    c_ns: f64,
    vol_b: f64,
    replicates: u64,
    grid_points: usize,
) -> VolumeCdf {
    let normalization = c_ns * vol_b * replicates as f64;
    let grid_points = grid_points.max(2);
    let lo = cell_volume.ln();
    let hi = vol_b.ln();
    let t: Vec<f64> = (0..grid_points)
        .map(|i| {
            if i + 1 == grid_points {
                vol_b
            } else if i == 0 {
                cell_volume
            } else {
                (lo + (hi - lo) * i as f64 / (grid_points - 1) as f64).exp()
            }
        })
        .collect();
    let psi = if normalization > 0.0 {
        let mut psi = Vec::with_capacity(t.len());
        let mut iter = volumes.iter().peekable();
        let mut below = 0u64;
        for &ti in &t {
            while let Some((&cells, &count)) = iter.peek() {
                if (cells as f64) * cell_volume < ti {
                    below += count;
                    iter.next();
                } else {
                    break;
                }
            }
            psi.push(below as f64 / normalization);
        }
        psi
    } else {
        vec![0.0; t.len()]
    };
    // int_0^{VolB} Psi = sum_i (VolB - v_i) / norm
    let integral_complement = if normalization > 0.0 {
        let mass: f64 = volumes
            .iter()
            .map(|(&cells, &count)| (vol_b - cells as f64 * cell_volume) * count as f64)
            .sum();
        vol_b - mass / normalization
    } else {
        0.0
    };
    VolumeCdf {
        t,
        psi,
        integral_complement,
        normalization,
    }
}

/// Mean and standard error of `N / Vol B` across replicates.
pub fn nazarov_sodin_estimate(interior_counts: &[u64], vol_b: f64) -> Estimate {
    let m = interior_counts.len() as f64;
    let mean = interior_counts.iter().map(|&c| c as f64).sum::<f64>() / m;
    let var = interior_counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Estimate::new(mean / vol_b, (var / m).sqrt() / vol_b)
}

/// Sample proportion with binomial standard error.
pub fn percolation_estimate(flags: &[bool]) -> Estimate {
    let m = flags.len() as f64;
    let p = flags.iter().filter(|&&b| b).count() as f64 / m;
    Estimate::new(p, (p * (1.0 - p) / m).sqrt())
}

/// Power-law fit of the degree tail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub alpha: f64,
    pub se: f64,
    pub k_min: usize,
    pub k_max: usize,
    pub bins_used: usize,
    /// t-statistic of the quadratic term in `log mu` vs `log k`.
    pub curvature_t: f64,
    /// Set when the curvature diagnostic rejects a pure power law.
    pub curved: bool,
}

/// Curvature t-statistics above this flag a non-power-law tail.
pub const CURVATURE_T_THRESHOLD: f64 = 3.0;

/// Minimum count of the last bin in the default tail window.
pub const DEFAULT_TAIL_MIN_COUNT: u64 = 30;

/// Default window `[3, largest k with count >= 30]`.
pub fn default_tail_window(counts: &[u64]) -> (usize, usize) {
    let k_max = counts
        .iter()
        .rposition(|&c| c >= DEFAULT_TAIL_MIN_COUNT)
        .unwrap_or(0);
    (3, k_max)
}

/// Least-squares slope of `log mu(k)` against `log k` on `[k_min, k_max]`.
pub fn tail_exponent(counts: &[u64], k_min: usize, k_max: usize) -> Result<TailFit> {
    let k_min = k_min.max(1);
    let total: u64 = counts.iter().sum();
    let window: Vec<(f64, f64)> = (k_min..=k_max.min(counts.len().saturating_sub(1)))
        .filter(|&k| counts[k] > 0)
        .map(|k| ((k as f64).ln(), (counts[k] as f64 / total as f64).ln()))
        .collect();
    let strong = (k_min..=k_max.min(counts.len().saturating_sub(1)))
        .filter(|&k| counts[k] >= 10)
        .count();
    if strong < 5 {
        return Err(Error::InsufficientTail(format!(
            "{strong} bins with count >= 10 in [{k_min}, {k_max}]"
        )));
    }
    let (slope, slope_se) = linear_fit(&window);
    let curvature_t = quadratic_t(&window);
    Ok(TailFit {
        alpha: -slope,
        se: slope_se,
        k_min,
        k_max,
        bins_used: window.len(),
        curvature_t,
        curved: curvature_t.abs() > CURVATURE_T_THRESHOLD,
    })
}

/// Ordinary least squares slope and its standard error.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = points.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let dof = (m - 2.0).max(1.0);
    (slope, (rss / dof / sxx).sqrt())
}

/// t-statistic of `c` in `y = a + b x + c x^2`.
fn quadratic_t(points: &[(f64, f64)]) -> f64 {
    let m = points.len();
    if m < 4 {
        return 0.0;
    }
    // orthogonalize x^2 against {1, x}
    let mf = m as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / mf;
    let xs: Vec<f64> = points.iter().map(|p| p.0 - mx).collect();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let q: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let mq = q.iter().sum::<f64>() / mf;
    let qx: f64 = q.iter().zip(&xs).map(|(q, x)| (q - mq) * x).sum::<f64>() / sxx;
    let z: Vec<f64> = q.iter().zip(&xs).map(|(q, x)| q - mq - qx * x).collect();
    let szz: f64 = z.iter().map(|z| z * z).sum();
    if szz <= 0.0 {
        return 0.0;
    }
    let my = points.iter().map(|p| p.1).sum::<f64>() / mf;
    let b = points.iter().zip(&xs).map(|(p, x)| (p.1 - my) * x).sum::<f64>() / sxx;
    let c = points.iter().zip(&z).map(|(p, z)| (p.1 - my) * z).sum::<f64>() / szz;
    let rss: f64 = points
        .iter()
        .zip(xs.iter().zip(&z))
        .map(|(p, (x, z))| (p.1 - my - b * x - c * z).powi(2))
        .sum();
    let s2 = rss / (mf - 3.0);
    if s2 <= 0.0 {
        return if c == 0.0 { 0.0 } else { f64::INFINITY * c.signum() };
    }
    c / (s2 / szz).sqrt()
}

/// Log-log decay fit `P(R) ~ R^{-beta}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub beta: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Weighted least squares of `log P` on `log R` with weights from the
/// delta-method variance `(se / P)^2`; normal 95% interval.
pub fn decay_fit(radii: &[f64], estimates: &[Estimate]) -> Option<DecayFit> {
    if radii.len() < 2 || estimates.iter().any(|e| !(e.value > 0.0) || !(e.se > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64, f64)> = radii
        .iter()
        .zip(estimates)
        .map(|(r, e)| (r.ln(), e.value.ln(), (e.value / e.se).powi(2)))
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let se = (1.0 / sxx).sqrt();
    let beta = -slope;
    Some(DecayFit {
        beta,
        se,
        ci_low: beta - 1.96 * se,
        ci_high: beta + 1.96 * se,
    })
}
