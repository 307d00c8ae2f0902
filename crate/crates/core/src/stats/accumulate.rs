use std::collections::BTreeMap;

use serde::Serialize;

use super::{
    boundary_connectivity, default_tail_window, tail_exponent, volume_cdf, ConnectivityMeasure, Estimate, TailFit,
    VolumeCdf,
};
use crate::ensembles::EnsembleSpec;
use crate::error::Result;
use crate::nodal::{count_t, origin_to_boundary, DomainLabeling, NestingTree};

/// Points on the logarithmic `Psi` grid.
pub const PSI_GRID_POINTS: usize = 64;

/// Integer residuals of the exact per-sample identities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IdentityResiduals {
    /// `sum d-bar - 2(N-bar - 1)`.
    pub tree: i64,
    /// `sum_{interior} d - 2(N - T)`.
    pub forest: i64,
    /// `sum_{interior} |v| + V(R) - (2R)^d`, in cells.
    pub volume: i64,
}

impl IdentityResiduals {
    pub fn is_zero(&self) -> bool {
        self.tree == 0 && self.forest == 0 && self.volume == 0
    }
}

/// Topology of one replicate, reduced to what the estimators need.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub total_domains: u64,
    pub interior_domains: u64,
    pub t: u64,
    pub boundary_cells: u64,
    pub interior_cells: u64,
    pub total_cells: u64,
    pub origin_to_boundary: bool,
    pub boundary_connectivity: i64,
    pub sum_full_degree: Option<u64>,
    pub sum_interior_degree: Option<u64>,
    /// Interior-degree histogram over interior domains.
    pub degree_histogram: Option<Vec<u64>>,
    /// Interior domain sizes in cells and their multiplicities.
    pub volume_histogram: BTreeMap<u64, u64>,
    pub zero_perturbations: u64,
    pub residuals: IdentityResiduals,
    /// `sum k mu_rep(k) <= 2 - 2/N` failed.
    pub mean_bound_violated: bool,
}

impl ReplicateSummary {
    /// Reduces a labeling (and its tree, when built). Never fails: identity
    /// failures are recorded as residuals.
    pub fn from_labeling(labeling: &DomainLabeling, tree: Option<&NestingTree>, zero_perturbations: u64) -> Self {
        let total_domains = labeling.total_domains() as u64;
        let interior_domains = labeling.interior_domains() as u64;
        let t = count_t(labeling) as u64;
        let boundary_cells = labeling.boundary_cells();
        let interior_cells = labeling.interior_cells();
        let total_cells = labeling.num_cells() as u64;
        let mut volume_histogram = BTreeMap::new();
        for d in labeling.domains.iter().filter(|d| !d.touches_boundary) {
            *volume_histogram.entry(d.cell_count).or_insert(0) += 1;
        }
        let (nb, n, tt) = (total_domains as i64, interior_domains as i64, t as i64);
        let mut residuals = IdentityResiduals {
            volume: interior_cells as i64 + boundary_cells as i64 - total_cells as i64,
            ..Default::default()
        };
        let euler = super::euler_boundary_connectivity(nb, n, tt);
        let (sum_full_degree, sum_interior_degree, degree_histogram, bc) = match tree {
            Some(tree) => {
                let full = tree.sum_full_degree();
                let int = tree.sum_interior_degree();
                residuals.tree = full as i64 - 2 * (nb - 1);
                residuals.forest = int as i64 - 2 * (n - tt);
                let hist = tree.interior_degree_histogram(labeling);
                let bc = boundary_connectivity(labeling, Some(tree)).unwrap_or(full as i64 - int as i64);
                (Some(full), Some(int), Some(hist), bc)
            }
            None => (None, None, None, euler),
        };
        // sum_k k mu_rep(k) = (sum d) / N must not exceed 2 - 2/N
        let degree_sum = sum_interior_degree.map(|s| s as i64).unwrap_or(2 * (n - tt));
        let mean_bound_violated = n >= 1 && degree_sum > 2 * n - 2;
        ReplicateSummary {
            total_domains,
            interior_domains,
            t,
            boundary_cells,
            interior_cells,
            total_cells,
            origin_to_boundary: origin_to_boundary(labeling),
            boundary_connectivity: bc,
            sum_full_degree,
            sum_interior_degree,
            degree_histogram,
            volume_histogram,
            zero_perturbations,
            residuals,
            mean_bound_violated,
        }
    }

    fn vars(&self) -> [i128; Var::COUNT] {
        [
            self.interior_domains as i128,
            self.t as i128,
            self.total_domains as i128,
            self.boundary_cells as i128,
            self.interior_cells as i128,
            self.origin_to_boundary as i128,
            self.boundary_connectivity as i128,
        ]
    }
}

/// Per-replicate variables tracked by [`Moments`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    Interior = 0,
    T = 1,
    Total = 2,
    BoundaryCells = 3,
    InteriorCells = 4,
    Percolates = 5,
    BoundaryConnectivity = 6,
}

impl Var {
    pub const COUNT: usize = 7;
}

/// Exact first and second moments of integer replicate variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Moments {
    pub count: u64,
    sum: [i128; Var::COUNT],
    cross: [[i128; Var::COUNT]; Var::COUNT],
}

impl Moments {
    pub fn push(&mut self, v: [i128; Var::COUNT]) {
        self.count += 1;
        for i in 0..Var::COUNT {
            self.sum[i] += v[i];
            for j in 0..Var::COUNT {
                self.cross[i][j] += v[i] * v[j];
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for i in 0..Var::COUNT {
            self.sum[i] += other.sum[i];
            for j in 0..Var::COUNT {
                self.cross[i][j] += other.cross[i][j];
            }
        }
    }

    pub fn sum(&self, v: Var) -> i128 {
        self.sum[v as usize]
    }

    /// Sample covariance of two variables.
    fn cov(&self, a: Var, b: Var) -> f64 {
        let m = self.count as i128;
        if m < 2 {
            return 0.0;
        }
        let num = m * self.cross[a as usize][b as usize] - self.sum[a as usize] * self.sum[b as usize];
        num as f64 / (m * (m - 1)) as f64
    }

    /// Mean of `scale * v` with its standard error.
    pub fn mean(&self, v: Var, scale: f64) -> Estimate {
        let m = self.count as f64;
        let mean = self.sum(v) as f64 / m;
        let se = (self.cov(v, v).max(0.0) / m).sqrt();
        Estimate::new(scale * mean, scale * se)
    }

    /// Ratio of means `E[x] / E[y]` with delta-method standard error.
    pub fn ratio(&self, x: Var, y: Var, scale: f64) -> Estimate {
        let sy = self.sum(y);
        if sy == 0 {
            return Estimate::nan();
        }
        let m = self.count as f64;
        let r = self.sum(x) as f64 / sy as f64;
        let ybar = sy as f64 / m;
        let var = self.cov(x, x) - 2.0 * r * self.cov(x, y) + r * r * self.cov(y, y);
        Estimate::new(scale * r, scale * (var.max(0.0) / m).sqrt() / ybar)
    }
}

/// Associative, commutative merge of replicate summaries at one radius.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadiusAccumulator {
    pub moments: Moments,
    pub degree_counts: Vec<u64>,
    pub volume_counts: BTreeMap<u64, u64>,
    /// Replicates per value of `N-bar`.
    pub total_domain_counts: BTreeMap<u64, u64>,
    pub has_trees: bool,
    /// Replicates with `N = 0`.
    pub excluded_empty: u64,
    pub zero_perturbations: u64,
    pub nonzero_residuals: u64,
    pub residual_abs_sum: IdentityResiduals,
    pub bound_violations: u64,
    pub total_cells: u64,
}

impl RadiusAccumulator {
    pub fn push(&mut self, s: &ReplicateSummary) {
        self.moments.push(s.vars());
        if self.moments.count == 1 {
            self.has_trees = s.degree_histogram.is_some();
            self.total_cells = s.total_cells;
        } else {
            self.has_trees &= s.degree_histogram.is_some();
        }
        if s.interior_domains == 0 {
            self.excluded_empty += 1;
        }
        if let Some(h) = &s.degree_histogram {
            if self.degree_counts.len() < h.len() {
                self.degree_counts.resize(h.len(), 0);
            }
            for (a, b) in self.degree_counts.iter_mut().zip(h) {
                *a += b;
            }
        }
        for (&k, &c) in &s.volume_histogram {
            *self.volume_counts.entry(k).or_insert(0) += c;
        }
        *self.total_domain_counts.entry(s.total_domains).or_insert(0) += 1;
        self.zero_perturbations += s.zero_perturbations;
        if !s.residuals.is_zero() {
            self.nonzero_residuals += 1;
        }
        self.residual_abs_sum.tree += s.residuals.tree.abs();
        self.residual_abs_sum.forest += s.residuals.forest.abs();
        self.residual_abs_sum.volume += s.residuals.volume.abs();
        self.bound_violations += s.mean_bound_violated as u64;
    }

    pub fn merge(&mut self, other: &RadiusAccumulator) {
        if other.moments.count == 0 {
            return;
        }
        if self.moments.count == 0 {
            *self = other.clone();
            return;
        }
        self.moments.merge(&other.moments);
        self.has_trees &= other.has_trees;
        if self.degree_counts.len() < other.degree_counts.len() {
            self.degree_counts.resize(other.degree_counts.len(), 0);
        }
        for (a, b) in self.degree_counts.iter_mut().zip(&other.degree_counts) {
            *a += b;
        }
        for (&k, &c) in &other.volume_counts {
            *self.volume_counts.entry(k).or_insert(0) += c;
        }
        for (&k, &c) in &other.total_domain_counts {
            *self.total_domain_counts.entry(k).or_insert(0) += c;
        }
        self.excluded_empty += other.excluded_empty;
        self.zero_perturbations += other.zero_perturbations;
        self.nonzero_residuals += other.nonzero_residuals;
        self.residual_abs_sum.tree += other.residual_abs_sum.tree;
        self.residual_abs_sum.forest += other.residual_abs_sum.forest;
        self.residual_abs_sum.volume += other.residual_abs_sum.volume;
        self.bound_violations += other.bound_violations;
    }

    pub fn replicates(&self) -> u64 {
        self.moments.count
    }

    /// Finalizes the estimators for cube half-width `radius` and cell volume
    /// `cell_volume`.
    pub fn report(&self, radius: f64, spacing: f64, dimension: usize, base_seed: u64) -> RadiusReport {
        let m = &self.moments;
        let cell_volume = spacing.powi(dimension as i32);
        let vol_b = self.total_cells as f64 * cell_volume;
        let inv_vol = 1.0 / vol_b;
        let c_ns = m.mean(Var::Interior, inv_vol);
        let percolation = m.mean(Var::Percolates, 1.0);
        let t_per_volume = m.mean(Var::T, inv_vol);
        let c_per_volume = m.mean(Var::BoundaryConnectivity, inv_vol);
        let v_fraction = m.mean(Var::BoundaryCells, cell_volume * inv_vol);
        let two_t_over_n = m.ratio(Var::T, Var::Interior, 2.0);
        let mean_connectivity = Estimate::new(2.0 - two_t_over_n.value, two_t_over_n.se);
        let mean_interior_volume = m.ratio(Var::InteriorCells, Var::Interior, cell_volume);

        let psi = (m.sum(Var::Interior) > 0).then(|| {
            volume_cdf(&self.volume_counts, cell_volume, c_ns.value, vol_b, m.count, PSI_GRID_POINTS)
        });
        let (mu, tail, tail_error) = if self.has_trees {
            match ConnectivityMeasure::from_pooled(&self.degree_counts, self.excluded_empty) {
                Ok(mu) => {
                    let (k_min, k_max) = default_tail_window(&mu.counts);
                    match tail_exponent(&mu.counts, k_min, k_max) {
                        Ok(fit) => (Some(mu), Some(fit), None),
                        Err(e) => (Some(mu), None, Some(e.to_string())),
                    }
                }
                Err(e) => (None, None, Some(e.to_string())),
            }
        } else {
            (None, None, None)
        };
        let identity = MeanVolumeIdentity::new(psi.as_ref(), c_ns.value, v_fraction, percolation, self);
        RadiusReport {
            radius,
            spacing,
            dimension,
            replicates: m.count,
            base_seed,
            volume: vol_b,
            c_ns,
            percolation,
            t_per_volume,
            c_per_volume,
            v_fraction,
            two_t_over_n,
            mean_connectivity,
            mean_interior_volume,
            psi,
            mu,
            tail,
            tail_error,
            identity,
            tv_from_previous: None,
            total_domain_histogram: self.total_domain_counts.clone(),
            excluded_empty: self.excluded_empty,
            zero_perturbations: self.zero_perturbations,
            nonzero_residuals: self.nonzero_residuals,
            residual_abs_sum: self.residual_abs_sum,
            bound_violations: self.bound_violations,
        }
    }
}

/// Consistency gauge between the volume distribution and the boundary volume.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanVolumeIdentity {
    /// Summed `|sum_{interior} vol + V(R) - Vol B|` over replicates, in cells.
    pub exact_residual: i64,
    /// `c_NS * int (1 - Psi) dt`.
    pub psi_mean: f64,
    /// `|c_NS * int (1 - Psi) dt - (1 - V/Vol B)|`.
    pub delta: f64,
    pub delta_se: f64,
    /// `V/Vol B - P` with joint standard error.
    pub boundary_minus_percolation: Estimate,
}

impl MeanVolumeIdentity {
    fn new(
        psi: Option<&VolumeCdf>,
        c_ns: f64,
        v_fraction: Estimate,
        percolation: Estimate,
        acc: &RadiusAccumulator,
    ) -> Self {
        let psi_mean = psi.map(|p| c_ns * p.integral_complement).unwrap_or(0.0);
        MeanVolumeIdentity {
            exact_residual: acc.residual_abs_sum.volume,
            psi_mean,
            delta: (psi_mean - (1.0 - v_fraction.value)).abs(),
            delta_se: v_fraction.se,
            boundary_minus_percolation: Estimate::new(
                v_fraction.value - percolation.value,
                v_fraction.joint_se(&percolation),
            ),
        }
    }
}

/// Per-residual lookup used by [`mean_volume_identity`].
pub fn mean_volume_identity(report: &MonteCarloReport) -> Vec<(f64, MeanVolumeIdentity)> {
    report.radii.iter().map(|r| (r.radius, r.identity.clone())).collect()
}

/// All estimates at one radius.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusReport {
    pub radius: f64,
    pub spacing: f64,
    pub dimension: usize,
    pub replicates: u64,
    pub base_seed: u64,
    /// `Vol B(R)`.
    pub volume: f64,
    pub c_ns: Estimate,
    pub percolation: Estimate,
    pub t_per_volume: Estimate,
    pub c_per_volume: Estimate,
    /// `V(R) / Vol B(R)`.
    pub v_fraction: Estimate,
    /// `2T/N` as a ratio of means.
    pub two_t_over_n: Estimate,
    /// `2 - 2T/N`.
    pub mean_connectivity: Estimate,
    pub mean_interior_volume: Estimate,
    pub psi: Option<VolumeCdf>,
    pub mu: Option<ConnectivityMeasure>,
    pub tail: Option<TailFit>,
    pub tail_error: Option<String>,
    pub identity: MeanVolumeIdentity,
    /// Total variation distance from the previous radius' measure.
    pub tv_from_previous: Option<f64>,
    /// Replicates per value of `N-bar`.
    pub total_domain_histogram: BTreeMap<u64, u64>,
    pub excluded_empty: u64,
    pub zero_perturbations: u64,
    pub nonzero_residuals: u64,
    pub residual_abs_sum: IdentityResiduals,
    pub bound_violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub ensemble: EnsembleSpec,
    pub base_seed: u64,
    pub periodic: bool,
    pub radii: Vec<RadiusReport>,
}

impl MonteCarloReport {
    pub fn new(ensemble: EnsembleSpec, base_seed: u64, periodic: bool, mut radii: Vec<RadiusReport>) -> Self {
        for i in 1..radii.len() {
            let tv = match (&radii[i - 1].mu, &radii[i].mu) {
                (Some(a), Some(b)) => Some(b.total_variation(a)),
                _ => None,
            };
            radii[i].tv_from_previous = tv;
        }
        MonteCarloReport {
            ensemble,
            base_seed,
            periodic,
            radii,
        }
    }

    /// Every exact identity held on every replicate.
    pub fn identities_exact(&self) -> bool {
        self.radii.iter().all(|r| r.nonzero_residuals == 0 && r.bound_violations == 0)
    }

    pub fn radius(&self, radius: f64) -> Option<&RadiusReport> {
        self.radii.iter().find(|r| r.radius == radius)
    }
}

/// Reduces replicate summaries at one radius (any order gives the same
/// accumulator).
pub fn accumulate(summaries: &[ReplicateSummary]) -> Result<RadiusAccumulator> {
    let mut acc = RadiusAccumulator::default();
    for s in summaries {
        acc.push(s);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nodal::test_support::island;
    use crate::nodal::{build_nesting_tree, label_cells, CellGrid};

    fn summary(grid: &CellGrid) -> ReplicateSummary {
        let l = label_cells(grid);
        let t = build_nesting_tree(&l).unwrap();
        ReplicateSummary::from_labeling(&l, Some(&t), 0)
    }

    #[test]
    fn island_summary_identities() {
        let s = summary(&island(6, &[(2, 2), (2, 3), (3, 2)]));
        assert!(s.residuals.is_zero());
        assert_eq!(s.interior_cells, 3);
        assert_eq!(s.boundary_cells, 33);
        assert_eq!(s.boundary_connectivity, 2);
        assert_eq!(s.volume_histogram.get(&3), Some(&1));
    }

    #[test]
    fn constant_sign_mean_volume_identity() {
        let s = summary(&CellGrid::new(2, 4, false, 0.5, vec![1.0; 16]));
        let mut acc = RadiusAccumulator::default();
        acc.push(&s);
        acc.push(&s);
        let r = acc.report(1.0, 0.5, 2, 0);
        assert_eq!(r.identity.exact_residual, 0);
        assert_eq!(r.identity.psi_mean, 0.0);
        assert_eq!(r.v_fraction.value, 1.0);
        assert_eq!(r.identity.delta, 0.0);
        assert!(r.psi.is_none());
        assert_eq!(r.c_ns.value, 0.0);
        assert_eq!(r.excluded_empty, 2);
    }

    #[test]
    fn merge_is_order_independent() {
        let grids = [
            island(6, &[(2, 2)]),
            island(8, &[(2, 2), (5, 5)]),
            island(7, &[(3, 3), (3, 4)]),
            CellGrid::new(2, 7, false, 1.0, vec![1.0; 49]),
        ];
        let sums: Vec<_> = grids.iter().map(summary).collect();
        let a = accumulate(&sums).unwrap();
        let mut rev = sums.clone();
        rev.reverse();
        let mut b = RadiusAccumulator::default();
        let mut c = RadiusAccumulator::default();
        for s in &rev[..2] {
            b.push(s);
        }
        for s in &rev[2..] {
            c.push(s);
        }
        c.merge(&b);
        assert_eq!(a.moments, c.moments);
        assert_eq!(a.degree_counts, c.degree_counts);
        assert_eq!(a.volume_counts, c.volume_counts);
    }

    #[test]
    fn ratio_estimator_has_zero_se_on_constant_ratio() {
        let mut m = Moments::default();
        for k in 1..5 {
            m.push([2 * k, k, 0, 0, 0, 0, 0]);
        }
        let r = m.ratio(Var::T, Var::Interior, 1.0);
        assert_eq!(r.value, 0.5);
        assert!(r.se.abs() < 1e-15);
    }
}
