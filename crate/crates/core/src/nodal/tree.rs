use serde::Serialize;

use super::DomainLabeling;
use crate::error::{Error, Result};
use crate::union_find::UnionFind;

/// Nesting graph of all domains of the restricted field. Edges are nodal
/// components, realized as connected components of the dual interface
/// between opposite-sign cells.
#[derive(Clone, Debug, Serialize)]
pub struct NestingTree {
    /// Domain pairs `(low, high)` joined by one nodal component.
    pub edges: Vec<(u32, u32)>,
    /// `d-bar(v)`: degree in the full tree.
    pub degree_full: Vec<u32>,
    /// `d(v)`: degree counting only edges between interior domains (zero for
    /// boundary domains).
    pub degree_interior: Vec<u32>,
}

impl NestingTree {
    pub fn sum_full_degree(&self) -> u64 {
        self.degree_full.iter().map(|&d| d as u64).sum()
    }

    pub fn sum_interior_degree(&self) -> u64 {
        self.degree_interior.iter().map(|&d| d as u64).sum()
    }

    /// Interior degree histogram over interior domains.
    pub fn interior_degree_histogram(&self, labeling: &DomainLabeling) -> Vec<u64> {
        let mut hist = Vec::new();
        for (d, dm) in self.degree_interior.iter().zip(&labeling.domains) {
            if dm.touches_boundary {
                continue;
            }
            let k = *d as usize;
            if hist.len() <= k {
                hist.resize(k + 1, 0);
            }
            hist[k] += 1;
        }
        hist
    }
}

/// Builds the nesting tree of a two-dimensional, non-periodic labeling.
pub fn build_nesting_tree(labeling: &DomainLabeling) -> Result<NestingTree> {
    if labeling.dimension != 2 {
        return Err(Error::UnsupportedParameter("nesting trees are built in two dimensions only".into()));
    }
    if labeling.periodic {
        return Err(Error::UnsupportedParameter(
            "nodal components on a torus do not form a tree".into(),
        ));
    }
    let n = labeling.side;
    let lab = &labeling.labels;
    let positive: Vec<bool> = lab
        .iter()
        .map(|&l| labeling.domains[l as usize].sign == super::Sign::Positive)
        .collect();

    // dual edge ids: x-edges (x,y)|(x+1,y) first, then y-edges (x,y)|(x,y+1)
    let x_edges = n.saturating_sub(1) * n;
    let x_edge = |x: usize, y: usize| x * n + y;
    let y_edge = |x: usize, y: usize| x_edges + x * (n - 1) + y;
    let edge_cells = |e: usize| -> (usize, usize) {
        if e < x_edges {
            let (x, y) = (e / n, e % n);
            (x * n + y, (x + 1) * n + y)
        } else {
            let r = e - x_edges;
            let (x, y) = (r / (n - 1), r % (n - 1));
            (x * n + y, x * n + y + 1)
        }
    };
    let total_edges = 2 * x_edges;
    let mut uf = UnionFind::new(total_edges);

    for x in 0..n.saturating_sub(1) {
        for y in 0..n - 1 {
            let a = x * n + y;
            let b = a + n;
            let c = a + 1;
            let d = b + 1;
            let (sa, sb, sc, sd) = (positive[a], positive[b], positive[c], positive[d]);
            let ab = x_edge(x, y);
            let cd = x_edge(x, y + 1);
            let ac = y_edge(x, y);
            let bd = y_edge(x + 1, y);
            let live = [(sa != sb, ab), (sc != sd, cd), (sa != sc, ac), (sb != sd, bd)];
            let k = live.iter().filter(|e| e.0).count();
            match k {
                0 => {}
                2 => {
                    let mut it = live.iter().filter(|e| e.0).map(|e| e.1);
                    let (e1, e2) = (it.next().unwrap(), it.next().unwrap());
                    uf.union(e1, e2);
                }
                4 => {
                    let center = labeling.center_positive[x * (n - 1) + y];
                    if center == sa {
                        // a and d joined; curves wrap around b and around c
                        uf.union(ab, bd);
                        uf.union(ac, cd);
                    } else {
                        uf.union(ab, ac);
                        uf.union(cd, bd);
                    }
                }
                _ => {
                    return Err(Error::TopologyInconsistency(format!(
                        "odd interface valence {k} at plaquette ({x}, {y})"
                    )))
                }
            }
        }
    }

    // one tree edge per interface component
    let mut comp_of_root = vec![u32::MAX; total_edges];
    let mut edges: Vec<(u32, u32)> = Vec::new();
    for e in 0..total_edges {
        let (p, q) = edge_cells(e);
        if positive[p] == positive[q] {
            continue;
        }
        let (lp, lq) = (lab[p], lab[q]);
        let pair = (lp.min(lq), lp.max(lq));
        let r = uf.find(e);
        if comp_of_root[r] == u32::MAX {
            comp_of_root[r] = edges.len() as u32;
            edges.push(pair);
        } else if edges[comp_of_root[r] as usize] != pair {
            return Err(Error::TopologyInconsistency(format!(
                "interface component separates more than two domains (edge {e})"
            )));
        }
    }

    let nbar = labeling.domains.len();
    if edges.len() + 1 != nbar {
        return Err(Error::TopologyInconsistency(format!(
            "{} nodal components for {} domains",
            edges.len(),
            nbar
        )));
    }
    let mut forest = UnionFind::new(nbar);
    for &(a, b) in &edges {
        if labeling.domains[a as usize].sign == labeling.domains[b as usize].sign {
            return Err(Error::TopologyInconsistency(format!("edge ({a}, {b}) joins equal signs")));
        }
        if !forest.union(a as usize, b as usize) {
            return Err(Error::TopologyInconsistency(format!("cycle through edge ({a}, {b})")));
        }
    }

    let mut degree_full = vec![0u32; nbar];
    let mut degree_interior = vec![0u32; nbar];
    for &(a, b) in &edges {
        let (a, b) = (a as usize, b as usize);
        degree_full[a] += 1;
        degree_full[b] += 1;
        if !labeling.domains[a].touches_boundary && !labeling.domains[b].touches_boundary {
            degree_interior[a] += 1;
            degree_interior[b] += 1;
        }
    }
    Ok(NestingTree {
        edges,
        degree_full,
        degree_interior,
    })
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::{count_t, label_cells, CellGrid};
    use super::*;

    #[test]
    fn constant_sign_has_no_edges() {
        let l = label_cells(&CellGrid::new(2, 5, false, 1.0, vec![-1.0; 25]));
        let t = build_nesting_tree(&l).unwrap();
        assert!(t.edges.is_empty());
        assert_eq!(t.sum_full_degree(), 0);
    }

    #[test]
    fn island_gives_single_edge() {
        let l = label_cells(&island(8, &[(3, 3), (4, 3)]));
        let t = build_nesting_tree(&l).unwrap();
        assert_eq!(t.edges.len(), 1);
        assert_eq!(t.degree_full, vec![1, 1]);
        let island_id = l.labels[3 * 8 + 3] as usize;
        assert_eq!(t.degree_interior[island_id], 0);
    }

    #[test]
    fn concentric_annulus_is_a_path() {
        let rows = [
            "+++++++++", "+-------+", "+-+++++-+", "+-+---+-+", "+-+-+-+-+", "+-+---+-+", "+-+++++-+",
            "+-------+", "+++++++++",
        ];
        let l = label_cells(&grid_from_rows(&rows));
        // ambient, ring(-), ring(+), ring(-), core(+)
        assert_eq!(l.total_domains(), 5);
        let t = build_nesting_tree(&l).unwrap();
        assert_eq!(t.sum_full_degree(), 8);
        let mut degs = t.degree_full.clone();
        degs.sort();
        assert_eq!(degs, vec![1, 1, 2, 2, 2]);
        // interior sub-forest: the four nested domains form a path
        assert_eq!(t.sum_interior_degree(), 6);
        assert_eq!(count_t(&l), 1);
    }

    #[test]
    fn three_domain_annulus() {
        let rows = ["+++++++", "+-----+", "+-----+", "+--+--+", "+-----+", "+-----+", "+++++++"];
        let l = label_cells(&grid_from_rows(&rows));
        assert_eq!(l.total_domains(), 3);
        let t = build_nesting_tree(&l).unwrap();
        let ring = l.labels[8] as usize;
        assert_eq!(t.degree_full[ring], 2);
        assert_eq!(t.sum_full_degree(), 4);
    }

    #[test]
    fn strip_touching_two_sides() {
        // a negative strip crossing the cube splits the positive phase in two
        let rows = ["++++++", "++++++", "------", "++++++", "++++++", "++++++"];
        let l = label_cells(&grid_from_rows(&rows));
        assert_eq!(l.total_domains(), 3);
        let t = build_nesting_tree(&l).unwrap();
        assert_eq!(t.edges.len(), 2);
        assert_eq!(t.sum_interior_degree(), 0);
    }

    #[test]
    fn saddle_curves_pair_around_minority() {
        // 3x3 with a saddle between two positive blobs
        let g = CellGrid::new(
            2,
            4,
            false,
            1.0,
            vec![
                -1.0, -1.0, -1.0, -1.0, //
                -1.0, 2.0, -1.0, -1.0, //
                -1.0, -1.0, 2.0, -1.0, //
                -1.0, -1.0, -1.0, -1.0,
            ],
        );
        let l = label_cells(&g);
        assert_eq!(l.total_domains(), 2);
        let t = build_nesting_tree(&l).unwrap();
        assert_eq!(t.edges.len(), 1);
        let g2 = CellGrid::new(2, 4, false, 1.0, g.values.iter().map(|v| if *v > 0.0 { 0.5 } else { *v }).collect());
        let l2 = label_cells(&g2);
        assert_eq!(l2.total_domains(), 3);
        let t2 = build_nesting_tree(&l2).unwrap();
        assert_eq!(t2.edges.len(), 2);
    }

    #[test]
    fn rejects_periodic_and_3d() {
        let l = label_cells(&CellGrid::new(2, 4, true, 1.0, vec![1.0; 16]));
        assert!(build_nesting_tree(&l).is_err());
        let l = label_cells(&CellGrid::new(3, 3, false, 1.0, vec![1.0; 27]));
        assert!(build_nesting_tree(&l).is_err());
    }
}
