use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::spectral::{expand_power, SpectralEdge};
use crate::basis::SphereDim;
use crate::error::{Error, Result};

/// int over (S^d)^n of prod_e G_{ell;d}(<x_a, x_b>)^{k_e}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphIntegralSpec {
    pub d: u32,
    pub ell: u32,
    pub n: usize,
    /// (a, b, k) with a < b, k >= 1, one entry per pair.
    pub edges: Vec<(usize, usize, u32)>,
}

impl GraphIntegralSpec {
    /// Validates and merges parallel edges by adding exponents; zero exponents are dropped.
    pub fn new(d: u32, ell: u32, n: usize, edges: &[(usize, usize, u32)]) -> Result<Self> {
        SphereDim::new(d)?;
        let mut merged: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for &(a, b, k) in edges {
            if a == b {
                return Err(Error::Invalid(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Invalid(format!("edge ({a},{b}) outside {n} nodes")));
            }
            if k == 0 {
                continue;
            }
            *merged.entry((a.min(b), a.max(b))).or_insert(0) += k;
        }
        let edges = merged.into_iter().map(|((a, b), k)| (a, b, k)).collect();
        Ok(GraphIntegralSpec { d, ell, n, edges })
    }

    /// 4-node spec from a symmetric exponent matrix.
    pub fn from_matrix(d: u32, ell: u32, e: &[Vec<u32>]) -> Result<Self> {
        let n = e.len();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b, e[a][b]));
            }
        }
        Self::new(d, ell, n, &edges)
    }

    /// Every reduction sequence of leaves, series nodes and parallel merges empties the graph.
    pub fn is_series_parallel(&self) -> bool {
        let mut adj: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); self.n];
        for &(a, b, _) in &self.edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        let mut alive = vec![true; self.n];
        loop {
            let Some(x) = (0..self.n).find(|&x| alive[x] && adj[x].len() <= 2) else {
                return alive.iter().all(|a| !a);
            };
            let nb: Vec<usize> = adj[x].iter().copied().collect();
            for &y in &nb {
                adj[y].remove(&x);
            }
            if nb.len() == 2 {
                adj[nb[0]].insert(nb[1]);
                adj[nb[1]].insert(nb[0]);
            }
            adj[x].clear();
            alive[x] = false;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionOrder {
    Lowest,
    Highest,
    Shuffled(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ReductionStep {
    Isolated { node: usize },
    Leaf { node: usize, neighbor: usize },
    Series { node: usize, a: usize, b: usize, merged: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub value: f64,
    pub trace: Vec<ReductionStep>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Exact value by leaf elimination, series elimination and parallel merging.
pub fn reduce(spec: &GraphIntegralSpec, order: ReductionOrder) -> Result<Reduction> {
    let s = SphereDim::new(spec.d)?;
    let mut edges: BTreeMap<(usize, usize), SpectralEdge> = BTreeMap::new();
    for &(a, b, k) in &spec.edges {
        edges.insert(key(a, b), (*expand_power(spec.d, spec.ell, k)?).clone());
    }
    let mut alive: Vec<bool> = vec![true; spec.n];
    let mut rng = match order {
        ReductionOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut value = 1.0;
    let mut trace = Vec::new();
    loop {
        let neighbors = |x: usize, edges: &BTreeMap<(usize, usize), SpectralEdge>| -> Vec<usize> {
            edges.keys().filter_map(|&(a, b)| if a == x { Some(b) } else if b == x { Some(a) } else { None }).collect()
        };
        let candidates: Vec<usize> =
            (0..spec.n).filter(|&x| alive[x] && neighbors(x, &edges).len() <= 2).collect();
        if candidates.is_empty() {
            let remaining = alive.iter().filter(|a| **a).count();
            if remaining == 0 {
                break;
            }
            return Err(Error::NotSeriesParallel { remaining });
        }
        let x = match (&order, rng.as_mut()) {
            (ReductionOrder::Highest, _) => *candidates.last().unwrap(),
            (ReductionOrder::Shuffled(_), Some(r)) => candidates[r.random_range(0..candidates.len())],
            _ => candidates[0],
        };
        let nb = neighbors(x, &edges);
        alive[x] = false;
        match nb.len() {
            0 => {
                value *= s.mu_d;
                trace.push(ReductionStep::Isolated { node: x });
            }
            1 => {
                let f = edges.remove(&key(x, nb[0])).unwrap();
                value *= s.mu_d * f.coeffs[0];
                trace.push(ReductionStep::Leaf { node: x, neighbor: nb[0] });
            }
            _ => {
                let (y, z) = (nb[0], nb[1]);
                let f = edges.remove(&key(x, y)).unwrap();
                let g = edges.remove(&key(x, z)).unwrap();
                let h = f.convolve(&g);
                let merged = match edges.remove(&key(y, z)) {
                    Some(old) => {
                        edges.insert(key(y, z), old.product(&h)?);
                        true
                    }
                    None => {
                        edges.insert(key(y, z), h);
                        false
                    }
                };
                trace.push(ReductionStep::Series { node: x, a: y, b: z, merged });
            }
        }
    }
    Ok(Reduction { value, trace })
}

pub fn graph_integral(spec: &GraphIntegralSpec) -> Result<f64> {
    Ok(reduce(spec, ReductionOrder::Lowest)?.value)
}

/// Lexicographically smallest relabelled edge list over all node permutations.
pub fn canonical_edges(n: usize, edges: &[(usize, usize, u32)]) -> Vec<(usize, usize, u32)> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<Vec<(usize, usize, u32)>> = None;
    loop {
        let mut e: Vec<(usize, usize, u32)> = edges
            .iter()
            .map(|&(a, b, k)| {
                let (pa, pb) = (perm[a], perm[b]);
                (pa.min(pb), pa.max(pb), k)
            })
            .collect();
        e.sort_unstable();
        if best.as_ref().is_none_or(|b| e < *b) {
            best = Some(e);
        }
        // next permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    best.unwrap_or_default()
}
