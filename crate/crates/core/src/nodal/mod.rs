//! Nodal domains of a sampled field.
//!
//! Cells are the `h`-cubes anchored at their lower-corner vertex and carry
//! the sign of the field there. In two dimensions same-sign cells merge
//! under 4-adjacency, and at a saddle plaquette (`+-` over `-+`) the diagonal
//! pair whose sign matches the bilinear interpolant at the plaquette centre
//! is joined. In three dimensions cells merge under plain 6-adjacency.

mod tree;

use std::path::Path;

use serde::Serialize;

pub use tree::{build_nesting_tree, NestingTree};

use crate::sampler::FieldSample;
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn of(v: f64) -> Sign {
        if v > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

/// Anchor values of the cells of a cubic grid (row-major, last axis fastest).
#[derive(Clone, Debug)]
pub struct CellGrid {
    pub dimension: usize,
    /// Cells per axis.
    pub side: usize,
    pub periodic: bool,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl CellGrid {
    pub fn new(dimension: usize, side: usize, periodic: bool, spacing: f64, values: Vec<f64>) -> Self {
        assert!(dimension == 2 || dimension == 3);
        assert_eq!(values.len(), side.pow(dimension as u32));
        assert!(side >= 1);
        CellGrid {
            dimension,
            side,
            periodic,
            spacing,
            values,
        }
    }

    /// Cell anchors of a sample: every vertex except the far face of a
    /// non-periodic grid.
    pub fn from_sample(sample: &FieldSample) -> Self {
        let g = &sample.grid;
        let n = g.cells_per_axis();
        let nv = g.vertices_per_axis();
        let values = if g.periodic {
            sample.values.clone()
        } else if g.dimension == 2 {
            let mut v = Vec::with_capacity(n * n);
            for x in 0..n {
                v.extend_from_slice(&sample.values[x * nv..x * nv + n]);
            }
            v
        } else {
            let mut v = Vec::with_capacity(n * n * n);
            for x in 0..n {
                for y in 0..n {
                    let base = (x * nv + y) * nv;
                    v.extend_from_slice(&sample.values[base..base + n]);
                }
            }
            v
        };
        CellGrid::new(g.dimension, n, g.periodic, g.spacing, values)
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    pub fn origin_cell(&self) -> usize {
        let o = self.side / 2;
        if self.dimension == 2 {
            o * self.side + o
        } else {
            (o * self.side + o) * self.side + o
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Domain {
    pub sign: Sign,
    pub cell_count: u64,
    pub touches_boundary: bool,
    pub contains_origin: bool,
}

/// Partition of the cells into signed nodal domains.
#[derive(Clone, Debug)]
pub struct DomainLabeling {
    pub dimension: usize,
    pub side: usize,
    pub periodic: bool,
    pub spacing: f64,
    /// Domain index of every cell.
    pub labels: Vec<u32>,
    pub domains: Vec<Domain>,
    pub origin_cell: usize,
    /// Per plaquette (d = 2): was the centre interpolant positive. Only
    /// consulted at saddle plaquettes.
    pub(crate) center_positive: Vec<bool>,
}

impl DomainLabeling {
    /// `N-bar`: all domains of the restricted field.
    pub fn total_domains(&self) -> usize {
        self.domains.len()
    }

    /// `N`: domains not touching the boundary.
    pub fn interior_domains(&self) -> usize {
        self.domains.iter().filter(|d| !d.touches_boundary).count()
    }

    pub fn num_cells(&self) -> usize {
        self.labels.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    /// `(2R)^d`.
    pub fn total_volume(&self) -> f64 {
        self.num_cells() as f64 * self.cell_volume()
    }

    pub fn sign_of_cell(&self, cell: usize) -> Sign {
        self.domains[self.labels[cell] as usize].sign
    }

    pub fn boundary_cells(&self) -> u64 {
        self.domains.iter().filter(|d| d.touches_boundary).map(|d| d.cell_count).sum()
    }

    pub fn interior_cells(&self) -> u64 {
        self.domains.iter().filter(|d| !d.touches_boundary).map(|d| d.cell_count).sum()
    }

    /// Cell signs as text rows (x major), followed by the resolved saddle
    /// plaquettes; enough to rebuild the labeling.
    pub fn sign_grid_string(&self) -> String {
        let n = self.side;
        let mut s = String::new();
        if self.dimension == 2 {
            for x in 0..n {
                for y in 0..n {
                    s.push(self.sign_of_cell(x * n + y).symbol());
                }
                s.push('\n');
            }
            for (p, &c) in self.center_positive.iter().enumerate() {
                if self.is_saddle_plaquette(p) {
                    s.push_str(&format!("saddle {} {}\n", p, if c { '+' } else { '-' }));
                }
            }
        } else {
            for (i, _) in self.labels.iter().enumerate() {
                s.push(self.sign_of_cell(i).symbol());
                if (i + 1) % n == 0 {
                    s.push('\n');
                }
            }
        }
        s
    }

    pub(crate) fn plaquette_side(&self) -> usize {
        if self.periodic {
            self.side
        } else {
            self.side - 1
        }
    }

    /// Cells `(a, b, c, d)` of plaquette `p` = `(x, x+1) x (y, y+1)`.
    pub(crate) fn plaquette_cells(&self, p: usize) -> [usize; 4] {
        let m = self.plaquette_side();
        let n = self.side;
        let (x, y) = (p / m, p % m);
        let (x1, y1) = ((x + 1) % n, (y + 1) % n);
        [x * n + y, x1 * n + y, x * n + y1, x1 * n + y1]
    }

    fn is_saddle_plaquette(&self, p: usize) -> bool {
        let [a, b, c, d] = self.plaquette_cells(p);
        let s = |i| self.sign_of_cell(i);
        s(a) == s(d) && s(b) == s(c) && s(a) != s(b)
    }

    /// Writes one row per domain:
    /// `domain_id,sign,cell_count,volume,touches_boundary,contains_origin,degree_full,degree_interior`.
    pub fn write_domain_csv(&self, tree: Option<&NestingTree>, path: &Path) -> crate::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "domain_id",
            "sign",
            "cell_count",
            "volume",
            "touches_boundary",
            "contains_origin",
            "degree_full",
            "degree_interior",
        ])?;
        let hv = self.cell_volume();
        for (i, d) in self.domains.iter().enumerate() {
            let (df, di) = match tree {
                Some(t) => (t.degree_full[i].to_string(), t.degree_interior[i].to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                i.to_string(),
                d.sign.symbol().to_string(),
                d.cell_count.to_string(),
                crate::stats::fmt_real(d.cell_count as f64 * hv),
                d.touches_boundary.to_string(),
                d.contains_origin.to_string(),
                df,
                di,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Labels the nodal domains of a sample.
pub fn label_domains(sample: &FieldSample) -> DomainLabeling {
    label_cells(&CellGrid::from_sample(sample))
}

/// Labels the nodal domains of a cell grid.
pub fn label_cells(grid: &CellGrid) -> DomainLabeling {
    let n = grid.side;
    let total = grid.num_cells();
    let positive: Vec<bool> = grid.values.iter().map(|&v| v > 0.0).collect();
    let mut uf = UnionFind::new(total);
    let mut center_positive = Vec::new();
    let periodic = grid.periodic;
    // number of forward neighbours along an axis
    let limit = if periodic { n } else { n - 1 };
    let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };

    if grid.dimension == 2 {
        for x in 0..n {
            for y in 0..n {
                let a = x * n + y;
                if x < limit {
                    let b = next(x) * n + y;
                    if positive[a] == positive[b] {
                        uf.union(a, b);
                    }
                }
                if y < limit {
                    let c = x * n + next(y);
                    if positive[a] == positive[c] {
                        uf.union(a, c);
                    }
                }
            }
        }
        center_positive = vec![false; limit * limit];
        for x in 0..limit {
            for y in 0..limit {
                let (x1, y1) = (next(x), next(y));
                let a = x * n + y;
                let b = x1 * n + y;
                let c = x * n + y1;
                let d = x1 * n + y1;
                let sa = positive[a];
                if sa == positive[d] && positive[b] == positive[c] && sa != positive[b] {
                    let center = grid.values[a] + grid.values[b] + grid.values[c] + grid.values[d] > 0.0;
                    center_positive[x * limit + y] = center;
                    if center == sa {
                        uf.union(a, d);
                    } else {
                        uf.union(b, c);
                    }
                }
            }
        }
    } else {
        let nn = n * n;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let a = x * nn + y * n + z;
                    if x < limit {
                        let b = next(x) * nn + y * n + z;
                        if positive[a] == positive[b] {
                            uf.union(a, b);
                        }
                    }
                    if y < limit {
                        let b = x * nn + next(y) * n + z;
                        if positive[a] == positive[b] {
                            uf.union(a, b);
                        }
                    }
                    if z < limit {
                        let b = x * nn + y * n + next(z);
                        if positive[a] == positive[b] {
                            uf.union(a, b);
                        }
                    }
                }
            }
        }
    }

    // compact root ids in scan order
    let mut root_label = vec![u32::MAX; total];
    let mut labels = vec![0u32; total];
    let mut domains: Vec<Domain> = Vec::new();
    for i in 0..total {
        let r = uf.find(i);
        if root_label[r] == u32::MAX {
            root_label[r] = domains.len() as u32;
            domains.push(Domain {
                sign: if positive[i] { Sign::Positive } else { Sign::Negative },
                cell_count: 0,
                touches_boundary: false,
                contains_origin: false,
            });
        }
        let l = root_label[r];
        labels[i] = l;
        domains[l as usize].cell_count += 1;
    }
    if !periodic {
        for_each_boundary_cell(grid.dimension, n, |i| {
            domains[labels[i] as usize].touches_boundary = true;
        });
    }
    let origin_cell = grid.origin_cell();
    domains[labels[origin_cell] as usize].contains_origin = true;

    DomainLabeling {
        dimension: grid.dimension,
        side: n,
        periodic,
        spacing: grid.spacing,
        labels,
        domains,
        origin_cell,
        center_positive,
    }
}

fn for_each_boundary_cell(d: usize, n: usize, mut f: impl FnMut(usize)) {
    let edge = |i: usize| i == 0 || i + 1 == n;
    if d == 2 {
        for x in 0..n {
            for y in 0..n {
                if edge(x) || edge(y) {
                    f(x * n + y);
                }
            }
        }
    } else {
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if edge(x) || edge(y) || edge(z) {
                        f((x * n + y) * n + z);
                    }
                }
            }
        }
    }
}

/// `V(R)`: total volume of the domains meeting the boundary.
pub fn boundary_volume(labeling: &DomainLabeling) -> f64 {
    labeling.boundary_cells() as f64 * labeling.cell_volume()
}

/// `T(R)`: connected components of the union of the (closed) interior
/// domains. Face-adjacent interior cells are joined regardless of sign.
pub fn count_t(labeling: &DomainLabeling) -> usize {
    let n = labeling.side;
    let d = labeling.dimension;
    let interior: Vec<bool> = labeling.domains.iter().map(|dm| !dm.touches_boundary).collect();
    if !interior.iter().any(|&b| b) {
        return 0;
    }
    let mut uf = UnionFind::new(labeling.domains.len());
    let lab = &labeling.labels;
    let limit = if labeling.periodic { n } else { n - 1 };
    let next = |i: usize| if i + 1 == n { 0 } else { i + 1 };
    let mut join = |a: usize, b: usize| {
        let (la, lb) = (lab[a] as usize, lab[b] as usize);
        if la != lb && interior[la] && interior[lb] {
            uf.union(la, lb);
        }
    };
    if d == 2 {
        for x in 0..n {
            for y in 0..n {
                let a = x * n + y;
                if x < limit {
                    join(a, next(x) * n + y);
                }
                if y < limit {
                    join(a, x * n + next(y));
                }
            }
        }
    } else {
        let nn = n * n;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let a = x * nn + y * n + z;
                    if x < limit {
                        join(a, next(x) * nn + y * n + z);
                    }
                    if y < limit {
                        join(a, x * nn + next(y) * n + z);
                    }
                    if z < limit {
                        join(a, x * nn + y * n + next(z));
                    }
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..labeling.domains.len())
        .filter(|&i| interior[i])
        .map(|i| uf.find(i))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Does the origin's domain reach the boundary of the cube.
pub fn origin_to_boundary(labeling: &DomainLabeling) -> bool {
    let dm = &labeling.domains[labeling.labels[labeling.origin_cell] as usize];
    debug_assert!(dm.contains_origin);
    dm.touches_boundary
}
