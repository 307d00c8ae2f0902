//! Deterministic checkers for the combinatorial component bounds and the
//! Euler identities of the nesting tree, plus a seeded random suite.
//!
//! Cube sets live on the unit lattice: cube `k + [0,1]^d` with every
//! `k_i` in `[-R, R - 1]`. Components use face adjacency, as in the nodal
//! labeling.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nodal::{build_nesting_tree, count_t, label_cells, CellGrid, DomainLabeling, NestingTree};
use crate::union_find::UnionFind;

/// Set of unit lattice cubes inside `[-R, R]^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeSet {
    pub r: usize,
    pub dimension: usize,
    members: Vec<bool>,
}

impl CubeSet {
    pub fn empty(r: usize, dimension: usize) -> Self {
        assert!(dimension == 2 || dimension == 3, "dimension must be 2 or 3");
        CubeSet {
            r,
            dimension,
            members: vec![false; (2 * r).pow(dimension as u32)],
        }
    }

    pub fn side(&self) -> usize {
        2 * self.r
    }

    fn index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dimension {
            return None;
        }
        let r = self.r as i64;
        let mut idx = 0usize;
        for &c in k {
            if c < -r || c >= r {
                return None;
            }
            idx = idx * self.side() + (c + r) as usize;
        }
        Some(idx)
    }

    /// Inserts cube `k + [0,1]^d`; `false` if it lies outside the box.
    pub fn insert(&mut self, k: &[i64]) -> bool {
        match self.index(k) {
            Some(i) => {
                self.members[i] = true;
                true
            }
            None => false,
        }
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.index(k).is_some_and(|i| self.members[i])
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn is_subset(&self, other: &CubeSet) -> bool {
        self.r == other.r
            && self.dimension == other.dimension
            && self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }

    /// Cube rows as text (`#` member, `.` not), slices separated by blank
    /// lines in three dimensions.
    pub fn to_text(&self) -> String {
        let n = self.side();
        let mut s = String::new();
        for (i, &m) in self.members.iter().enumerate() {
            s.push(if m { '#' } else { '.' });
            if (i + 1) % n == 0 {
                s.push('\n');
                if self.dimension == 3 && (i + 1) % (n * n) == 0 {
                    s.push('\n');
                }
            }
        }
        s
    }

    fn random<R: Rng>(r: usize, dimension: usize, density: f64, rng: &mut R) -> Self {
        let mut s = CubeSet::empty(r, dimension);
        for m in s.members.iter_mut() {
            *m = rng.random::<f64>() < density;
        }
        s
    }
}

/// `A`, `B` with `A ⊆ B ⊆ [-R, R]^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSetPair {
    pub b: CubeSet,
    pub a: CubeSet,
}

impl GridSetPair {
    pub fn new(b: CubeSet, a: CubeSet) -> Self {
        GridSetPair { b, a }
    }
}

/// Face-adjacency components of the cubes not in `removed`; returns the
/// component id per cube (`u32::MAX` for removed cubes) and the count.
fn complement_components(removed: &CubeSet) -> (Vec<u32>, usize) {
    let n = removed.side();
    let d = removed.dimension;
    let total = removed.members.len();
    let mut uf = UnionFind::new(total);
    let strides: Vec<usize> = (0..d).map(|axis| n.pow((d - 1 - axis) as u32)).collect();
    for i in 0..total {
        if removed.members[i] {
            continue;
        }
        for &s in &strides {
            let coord = (i / s) % n;
            if coord + 1 < n && !removed.members[i + s] {
                uf.union(i, i + s);
            }
        }
    }
    let mut id = vec![u32::MAX; total];
    let mut root_id = vec![u32::MAX; total];
    let mut count = 0usize;
    for i in 0..total {
        if removed.members[i] {
            continue;
        }
        let r = uf.find(i);
        if root_id[r] == u32::MAX {
            root_id[r] = count as u32;
            count += 1;
        }
        id[i] = root_id[r];
    }
    (id, count)
}

/// Unit cubes of `[-R, R]^d` meeting its boundary: `(2R)^d - (2R - 2)^d`.
pub fn boundary_cube_count(r: usize, dimension: usize) -> u64 {
    if r == 0 {
        return 0;
    }
    let outer = (2 * r as u64).pow(dimension as u32);
    let inner = (2 * r as u64 - 2).pow(dimension as u32);
    outer - inner
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub count: u64,
    pub bound: f64,
    pub passed: bool,
}

/// Components of `B(R) \ A` not contained in `B`, against
/// `|B| + boundary_cube_count(R)`.
pub fn check_component_bound(pair: &GridSetPair) -> Result<BoundCheck> {
    if !pair.a.is_subset(&pair.b) {
        return Err(Error::InvalidPair("A is not contained in B".into()));
    }
    let (id, count) = complement_components(&pair.a);
    let mut escapes = vec![false; count];
    for (i, &c) in id.iter().enumerate() {
        if c != u32::MAX && !pair.b.members[i] {
            escapes[c as usize] = true;
        }
    }
    let count = escapes.iter().filter(|&&e| e).count() as u64;
    let bound = (pair.b.len() as u64 + boundary_cube_count(pair.b.r, pair.b.dimension)) as f64;
    Ok(BoundCheck {
        count,
        bound,
        passed: count as f64 <= bound,
    })
}

/// Components of `B(R) \ S` of volume at least `eps`, against
/// `K(S) (1/eps + 1) + boundary_cube_count(R)` with `K(S) = |S|`.
pub fn check_small_component_bound(s: &CubeSet, eps: f64, r: usize) -> Result<BoundCheck> {
    if !(eps > 0.0) {
        return Err(Error::UnsupportedParameter(format!("eps must be positive, got {eps}")));
    }
    if s.r != r {
        return Err(Error::InvalidPair(format!("cube set has R = {}, expected {r}", s.r)));
    }
    let (id, count) = complement_components(s);
    let mut volume = vec![0u64; count];
    for &c in &id {
        if c != u32::MAX {
            volume[c as usize] += 1;
        }
    }
    let count = volume.iter().filter(|&&v| v as f64 >= eps).count() as u64;
    let k = s.len() as f64;
    let bound = k * (1.0 / eps + 1.0) + boundary_cube_count(r, s.dimension) as f64;
    Ok(BoundCheck {
        count,
        bound,
        passed: count as f64 <= bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EulerCheck {
    pub sum_full_degree: u64,
    /// `2(N-bar - 1)`.
    pub tree_rhs: i64,
    pub sum_interior_degree: u64,
    /// `2(N - T)`.
    pub forest_rhs: i64,
    pub passed: bool,
    /// Sign grid of the offending configuration.
    pub reproducer: Option<String>,
}

/// `sum d-bar = 2(N-bar - 1)` and `sum_{interior} d = 2(N - T)`.
pub fn check_euler_identities(labeling: &DomainLabeling, tree: &NestingTree) -> EulerCheck {
    let nbar = labeling.total_domains() as i64;
    let n = labeling.interior_domains() as i64;
    let t = count_t(labeling) as i64;
    let sum_full_degree = tree.sum_full_degree();
    let sum_interior_degree = tree.sum_interior_degree();
    let tree_rhs = 2 * (nbar - 1);
    let forest_rhs = 2 * (n - t);
    let passed = sum_full_degree as i64 == tree_rhs && sum_interior_degree as i64 == forest_rhs;
    EulerCheck {
        sum_full_degree,
        tree_rhs,
        sum_interior_degree,
        forest_rhs,
        passed,
        reproducer: (!passed).then(|| labeling.sign_grid_string()),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LemmaSuiteReport {
    pub seed: u64,
    pub component_cases: u64,
    pub component_violations: u64,
    pub small_component_cases: u64,
    pub small_component_violations: u64,
    pub euler_cases: u64,
    pub euler_violations: u64,
    pub reproducers: Vec<PathBuf>,
}

impl LemmaSuiteReport {
    pub fn passed(&self) -> bool {
        self.component_violations == 0 && self.small_component_violations == 0 && self.euler_violations == 0
    }
}

const DENSITIES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const EPSILONS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Runs `cases` random configurations through each checker. Violations are
/// dumped to `reproducer_dir` when given.
pub fn run_lemma_suite(cases: u64, seed: u64, reproducer_dir: Option<&Path>) -> Result<LemmaSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = LemmaSuiteReport {
        seed,
        ..Default::default()
    };
    let dump = |name: String, body: String, report: &mut LemmaSuiteReport| -> Result<()> {
        if let Some(dir) = reproducer_dir {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, body)?;
            report.reproducers.push(path);
        }
        Ok(())
    };

    for case in 0..cases {
        let r = rng.random_range(1..=12usize);
        let b = CubeSet::random(r, 2, DENSITIES[rng.random_range(0..DENSITIES.len())], &mut rng);
        let mut a = CubeSet::random(r, 2, DENSITIES[rng.random_range(0..DENSITIES.len())], &mut rng);
        for (x, &y) in a.members.iter_mut().zip(&b.members) {
            *x &= y;
        }
        let pair = GridSetPair::new(b, a);
        let check = check_component_bound(&pair)?;
        report.component_cases += 1;
        if !check.passed {
            report.component_violations += 1;
            let body = format!(
                "R = {r}\ncount = {}\nbound = {}\nB:\n{}A:\n{}",
                check.count,
                check.bound,
                pair.b.to_text(),
                pair.a.to_text()
            );
            dump(format!("component-{case}.txt"), body, &mut report)?;
        }
    }

    for case in 0..cases {
        let r = rng.random_range(1..=12usize);
        let s = CubeSet::random(r, 2, DENSITIES[rng.random_range(0..DENSITIES.len())], &mut rng);
        let eps = EPSILONS[rng.random_range(0..EPSILONS.len())];
        let check = check_small_component_bound(&s, eps, r)?;
        report.small_component_cases += 1;
        if !check.passed {
            report.small_component_violations += 1;
            let body = format!(
                "R = {r}\neps = {eps}\ncount = {}\nbound = {}\nS:\n{}",
                check.count,
                check.bound,
                s.to_text()
            );
            dump(format!("small-component-{case}.txt"), body, &mut report)?;
        }
    }

    for case in 0..cases {
        let n = rng.random_range(1..=20usize);
        let values: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() - 0.5).collect();
        let grid = CellGrid::new(2, n, false, 1.0, values);
        let labeling = label_cells(&grid);
        report.euler_cases += 1;
        let failure = match build_nesting_tree(&labeling) {
            Ok(tree) => {
                let check = check_euler_identities(&labeling, &tree);
                check.reproducer.map(|grid| {
                    format!(
                        "sum_full = {} vs {}\nsum_interior = {} vs {}\n{grid}",
                        check.sum_full_degree, check.tree_rhs, check.sum_interior_degree, check.forest_rhs
                    )
                })
            }
            Err(e) => Some(format!("{e}\n{}", labeling.sign_grid_string())),
        };
        if let Some(body) = failure {
            report.euler_violations += 1;
            dump(format!("euler-{case}.txt"), body, &mut report)?;
        }
    }
    Ok(report)
}
