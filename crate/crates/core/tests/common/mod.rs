//! Naive flood-fill oracle for two-dimensional cell grids, written without
//! union-find so it can cross-check the library labeling.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use nodal_core::nodal::{build_nesting_tree, count_t, label_cells, origin_to_boundary, CellGrid};
use rand::Rng;

pub struct Oracle {
    pub n: usize,
    pub labels: Vec<usize>,
    pub positive: Vec<bool>,
    pub cell_counts: Vec<u64>,
    pub touches_boundary: Vec<bool>,
    /// Distinct opposite-sign face-adjacent domain pairs.
    pub edges: BTreeSet<(usize, usize)>,
}

impl Oracle {
    pub fn new(values: &[f64], n: usize) -> Self {
        let pos: Vec<bool> = values.iter().map(|&v| v > 0.0).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n * n];
        let idx = |x: usize, y: usize| x * n + y;
        for x in 0..n {
            for y in 0..n {
                if x + 1 < n && pos[idx(x, y)] == pos[idx(x + 1, y)] {
                    adj[idx(x, y)].push(idx(x + 1, y));
                    adj[idx(x + 1, y)].push(idx(x, y));
                }
                if y + 1 < n && pos[idx(x, y)] == pos[idx(x, y + 1)] {
                    adj[idx(x, y)].push(idx(x, y + 1));
                    adj[idx(x, y + 1)].push(idx(x, y));
                }
            }
        }
        // checkerboard plaquettes: the diagonal sharing the sign of the
        // value sum at the centre is connected
        for x in 0..n.saturating_sub(1) {
            for y in 0..n - 1 {
                let (a, b, c, d) = (idx(x, y), idx(x + 1, y), idx(x, y + 1), idx(x + 1, y + 1));
                if pos[a] == pos[d] && pos[b] == pos[c] && pos[a] != pos[b] {
                    let centre = values[a] + values[b] + values[c] + values[d] > 0.0;
                    let (p, q) = if centre == pos[a] { (a, d) } else { (b, c) };
                    adj[p].push(q);
                    adj[q].push(p);
                }
            }
        }
        let mut labels = vec![usize::MAX; n * n];
        let mut count = 0;
        for start in 0..n * n {
            if labels[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            labels[start] = count;
            while let Some(c) = stack.pop() {
                for &nb in &adj[c] {
                    if labels[nb] == usize::MAX {
                        labels[nb] = count;
                        stack.push(nb);
                    }
                }
            }
            count += 1;
        }
        let mut positive = vec![false; count];
        let mut cell_counts = vec![0u64; count];
        let mut touches_boundary = vec![false; count];
        for x in 0..n {
            for y in 0..n {
                let l = labels[idx(x, y)];
                positive[l] = pos[idx(x, y)];
                cell_counts[l] += 1;
                if x == 0 || y == 0 || x == n - 1 || y == n - 1 {
                    touches_boundary[l] = true;
                }
            }
        }
        let mut edges = BTreeSet::new();
        for x in 0..n {
            for y in 0..n {
                let a = labels[idx(x, y)];
                for (nx, ny) in [(x + 1, y), (x, y + 1)] {
                    if nx < n && ny < n {
                        let b = labels[idx(nx, ny)];
                        if positive[a] != positive[b] {
                            edges.insert((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        Oracle {
            n,
            labels,
            positive,
            cell_counts,
            touches_boundary,
            edges,
        }
    }

    pub fn domains(&self) -> usize {
        self.positive.len()
    }

    pub fn interior(&self) -> usize {
        self.touches_boundary.iter().filter(|&&b| !b).count()
    }

    /// Components of the interior sub-forest via depth-first search.
    pub fn t(&self) -> usize {
        let k = self.domains();
        let mut adj = vec![Vec::new(); k];
        for &(a, b) in &self.edges {
            if !self.touches_boundary[a] && !self.touches_boundary[b] {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut seen = vec![false; k];
        let mut comps = 0;
        for s in 0..k {
            if self.touches_boundary[s] || seen[s] {
                continue;
            }
            comps += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        comps
    }

    pub fn origin_to_boundary(&self) -> bool {
        let o = self.n / 2;
        self.touches_boundary[self.labels[o * self.n + o]]
    }

    /// `(full degree, interior degree)` per domain.
    pub fn degrees(&self) -> (Vec<u32>, Vec<u32>) {
        let k = self.domains();
        let mut full = vec![0; k];
        let mut int = vec![0; k];
        for &(a, b) in &self.edges {
            full[a] += 1;
            full[b] += 1;
            if !self.touches_boundary[a] && !self.touches_boundary[b] {
                int[a] += 1;
                int[b] += 1;
            }
        }
        (full, int)
    }
}

/// Values for an `n x n` grid: random signs, or Gaussian-like values so that
/// the saddle centre rule sees both outcomes.
pub fn random_values<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let signs_only = rng.random::<bool>();
    let p: f64 = rng.random_range(0.2..0.8);
    (0..n * n)
        .map(|_| {
            let positive = rng.random::<f64>() < p;
            let mag = if signs_only { 1.0 } else { rng.random_range(0.01..1.0) };
            if positive {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

/// Compares the library against the oracle on one grid.
pub fn compare_with_oracle(values: Vec<f64>, n: usize) -> Result<(), String> {
    let oracle = Oracle::new(&values, n);
    let grid = CellGrid::new(2, n, false, 1.0, values);
    let l = label_cells(&grid);
    if l.total_domains() != oracle.domains() {
        return Err(format!("domain count {} vs {}", l.total_domains(), oracle.domains()));
    }
    // labels must agree up to renaming
    let mut fwd: HashMap<usize, u32> = HashMap::new();
    let mut back: HashMap<u32, usize> = HashMap::new();
    for (c, &ol) in oracle.labels.iter().enumerate() {
        let ll = l.labels[c];
        if *fwd.entry(ol).or_insert(ll) != ll || *back.entry(ll).or_insert(ol) != ol {
            return Err(format!("labels differ at cell {c}"));
        }
    }
    for (&ol, &ll) in &fwd {
        let d = &l.domains[ll as usize];
        if d.cell_count != oracle.cell_counts[ol]
            || d.touches_boundary != oracle.touches_boundary[ol]
            || (d.sign == nodal_core::nodal::Sign::Positive) != oracle.positive[ol]
        {
            return Err(format!("domain record {ll} differs"));
        }
    }
    if l.interior_domains() != oracle.interior() {
        return Err("interior count differs".into());
    }
    if count_t(&l) != oracle.t() {
        return Err(format!("T {} vs {}", count_t(&l), oracle.t()));
    }
    if origin_to_boundary(&l) != oracle.origin_to_boundary() {
        return Err("origin_to_boundary differs".into());
    }
    let tree = build_nesting_tree(&l).map_err(|e| e.to_string())?;
    let (full, int) = oracle.degrees();
    for (&ol, &ll) in &fwd {
        if tree.degree_full[ll as usize] != full[ol] || tree.degree_interior[ll as usize] != int[ol] {
            return Err(format!("degrees of domain {ll} differ"));
        }
    }
    let edges: BTreeSet<(u32, u32)> = oracle
        .edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (fwd[&a], fwd[&b]);
            (x.min(y), x.max(y))
        })
        .collect();
    let lib_edges: BTreeSet<(u32, u32)> = tree.edges.iter().copied().collect();
    if edges != lib_edges || tree.edges.len() != lib_edges.len() {
        return Err("tree edges differ".into());
    }
    Ok(())
}
