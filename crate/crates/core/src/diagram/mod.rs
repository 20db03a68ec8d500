//! Index set of the diagram formula, joint Hermite moments, and the graph
//! extracted from a diagram index.

mod moments;

use serde::{Deserialize, Serialize};

use crate::basis::{asymptotic_constant, SphereDim};
use crate::error::Result;

pub use moments::{joint_hermite_moment, wick_oracle, DiagramExpansion, MomentScalar, WickOracle, WICK_BUDGET};

/// Symmetric matrix k with zero diagonal and row sums `row_targets`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiagramIndex {
    pub n: usize,
    pub k: Vec<Vec<u32>>,
    pub row_targets: Vec<u32>,
}

impl DiagramIndex {
    pub fn from_matrix(k: Vec<Vec<u32>>) -> Self {
        let row_targets = k.iter().map(|r| r.iter().sum()).collect();
        DiagramIndex { n: k.len(), k, row_targets }
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.k[i][j]
    }

    pub fn is_valid(&self) -> bool {
        (0..self.n).all(|i| {
            self.k[i][i] == 0
                && (0..self.n).all(|j| self.k[i][j] == self.k[j][i])
                && self.k[i].iter().sum::<u32>() == self.row_targets[i]
        })
    }

    /// Upper-triangle entries in row-major order.
    pub fn upper(&self) -> Vec<u32> {
        let mut v = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                v.push(self.k[i][j]);
            }
        }
        v
    }
}

/// Backtracking stream over the upper triangle with row-sum pruning.
pub struct EnumerateA {
    n: usize,
    pairs: Vec<(usize, usize)>,
    q: Vec<u32>,
    vals: Vec<u32>,
    rem: Vec<u32>,
    p: usize,
    started: bool,
    done: bool,
}

pub fn enumerate_a(q: &[u32]) -> EnumerateA {
    let n = q.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    let odd = q.iter().map(|&x| x as u64).sum::<u64>() % 2 == 1;
    EnumerateA {
        n,
        vals: vec![0; pairs.len()],
        pairs,
        q: q.to_vec(),
        rem: q.to_vec(),
        p: 0,
        started: false,
        done: odd,
    }
}

impl EnumerateA {
    fn bounds(&self, p: usize) -> (u32, u32) {
        let (i, j) = self.pairs[p];
        let hi = self.rem[i].min(self.rem[j]);
        let cap: u32 = self.rem[j + 1..].iter().sum();
        (self.rem[i].saturating_sub(cap), hi)
    }

    fn assign(&mut self, p: usize, v: u32) {
        let (i, j) = self.pairs[p];
        self.vals[p] = v;
        self.rem[i] -= v;
        self.rem[j] -= v;
    }

    fn unassign(&mut self, p: usize) {
        let (i, j) = self.pairs[p];
        self.rem[i] += self.vals[p];
        self.rem[j] += self.vals[p];
    }

    /// Step back to the deepest position that can still be incremented.
    fn backtrack(&mut self) -> bool {
        while self.p > 0 {
            self.p -= 1;
            let p = self.p;
            self.unassign(p);
            let v = self.vals[p] + 1;
            if v <= self.bounds(p).1 {
                self.assign(p, v);
                self.p += 1;
                return true;
            }
        }
        false
    }

    fn current(&self) -> DiagramIndex {
        let mut k = vec![vec![0; self.n]; self.n];
        for (&(i, j), &v) in self.pairs.iter().zip(&self.vals) {
            k[i][j] = v;
            k[j][i] = v;
        }
        DiagramIndex { n: self.n, k, row_targets: self.q.clone() }
    }
}

impl Iterator for EnumerateA {
    type Item = DiagramIndex;

    fn next(&mut self) -> Option<DiagramIndex> {
        if self.done {
            return None;
        }
        let mut need_back = self.started;
        self.started = true;
        loop {
            if need_back && !self.backtrack() {
                self.done = true;
                return None;
            }
            need_back = false;
            if self.p == self.pairs.len() {
                if self.rem.iter().all(|&r| r == 0) {
                    return Some(self.current());
                }
                need_back = true;
                continue;
            }
            let (lo, hi) = self.bounds(self.p);
            if lo > hi {
                need_back = true;
                continue;
            }
            let p = self.p;
            self.assign(p, lo);
            self.p += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedGraph {
    pub n: usize,
    /// (i, j, k_ij) with i < j and k_ij > 0
    pub edges: Vec<(usize, usize, u32)>,
    pub n_components: usize,
    pub component_of: Vec<usize>,
    pub is_tree_per_component: Vec<bool>,
    pub r: usize,
    /// Member of the excluded set: n = 4 and only k_12, k_34 nonzero.
    pub is_n: bool,
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = x;
    while parent[c] != r {
        let next = parent[c];
        parent[c] = r;
        c = next;
    }
    r
}

pub fn extract_graph(kappa: &DiagramIndex) -> ExtractedGraph {
    let n = kappa.n;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if kappa.k[i][j] != 0 {
                edges.push((i, j, kappa.k[i][j]));
            }
        }
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(i, j, _) in &edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut component_of = vec![0; n];
    let mut count = 0;
    for x in 0..n {
        let root = find(&mut parent, x);
        if label[root] == usize::MAX {
            label[root] = count;
            count += 1;
        }
        component_of[x] = label[root];
    }
    let mut nodes = vec![0usize; count];
    let mut edge_count = vec![0usize; count];
    for &c in &component_of {
        nodes[c] += 1;
    }
    for &(i, _, _) in &edges {
        edge_count[component_of[i]] += 1;
    }
    let is_tree_per_component = (0..count).map(|c| edge_count[c] + 1 == nodes[c]).collect();
    let is_n = n == 4
        && edges.iter().all(|&(i, j, _)| (i, j) == (0, 1) || (i, j) == (2, 3));
    ExtractedGraph {
        n,
        r: edges.len(),
        edges,
        n_components: count,
        component_of,
        is_tree_per_component,
        is_n,
    }
}

/// C_d(N) = (8 mu_d mu_{d-1} c_{2;d})^{n-N} mu_d^N.
pub fn tree_bound_constant(d: u32, n: usize, components: usize) -> Result<f64> {
    let s = SphereDim::new(d)?;
    let c2 = asymptotic_constant(d, 2)?;
    let base = 8.0 * s.mu_d * s.mu_dm1 * c2;
    Ok(base.powi((n - components) as i32) * s.mu_d.powi(components as i32))
}

/// C_d(N) / ell^{(d-1)(n-N)} for the graph of kappa.
pub fn spanning_tree_bound(d: u32, ell: u32, kappa: &DiagramIndex) -> Result<f64> {
    if ell == 0 {
        return crate::error::domain("spanning-tree bound needs ell >= 1");
    }
    let g = extract_graph(kappa);
    let c = tree_bound_constant(d, g.n, g.n_components)?;
    let e = (d as i32 - 1) * (g.n - g.n_components) as i32;
    Ok(c / (ell as f64).powi(e))
}

/// C_{d;p} = (2 (d-1)! mu_d^2)^{2p} mu_d^p, the constant for connected even-n graphs.
pub fn connected_bound_constant(d: u32, p: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    let fact: f64 = (1..d).map(|k| k as f64).product();
    Ok((2.0 * fact * s.mu_d * s.mu_d).powi(2 * p as i32) * s.mu_d.powi(p as i32))
}
