//! Multi-point Gegenbauer integrals over edge-labelled graphs.

pub mod four_point;
pub mod mc;
pub mod reduce;
pub mod spectral;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

use crate::basis::{sphere_moment, SphereDim};
use crate::diagram::{enumerate_a, extract_graph, DiagramIndex};
use crate::error::{Error, Result};

pub use four_point::four_point_s2;
pub use mc::{mc_graph_integral, McEstimate};
pub use reduce::{canonical_edges, graph_integral, reduce, GraphIntegralSpec, Reduction, ReductionOrder, ReductionStep};
pub use spectral::{expand_power, gamma_hat, SpectralEdge};

/// Samples used when neither exact path applies.
pub const MC_FALLBACK_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum GauntCase {
    /// triangle: (1,2)^1 (1,4)^p (2,4)^q
    A1 { p: u32, q: u32 },
    /// 4-cycle: (1,2)^1 (1,4)^q1 (2,3)^q2 (3,4)^q3
    B { q1: u32, q2: u32, q3: u32 },
    /// 4-cycle with chord: (1,2)^1 (1,4)^p1 (2,3)^p2 (2,4)^p3 (3,4)^1
    C { p1: u32, p2: u32, p3: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GauntReport {
    pub case: GauntCase,
    pub d: u32,
    pub ell: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Left side by spectral reduction, right side as a product of two-point
/// moments int int G^m = mu_d * sphere_moment; the ratio is the Gaunt constant.
pub fn gaunt_identity_check(d: u32, ell: u32, case: GauntCase) -> Result<GauntReport> {
    let s = SphereDim::new(d)?;
    let two_point = |m: u32| -> Result<f64> { Ok(s.mu_d * sphere_moment(d, ell, m)?) };
    let (spec, rhs) = match case {
        GauntCase::A1 { p, q } => {
            if p < 2 || q < 2 {
                return Err(Error::Domain("A1 needs p, q >= 2".into()));
            }
            let spec = GraphIntegralSpec::new(d, ell, 3, &[(0, 1, 1), (0, 2, p), (1, 2, q)])?;
            (spec, two_point(q + 1)? * two_point(p + 1)?)
        }
        GauntCase::B { q1, q2, q3 } => {
            if q1 < 2 || q2 < 2 || q3 < 1 {
                return Err(Error::Domain("B needs q1, q2 >= 2 and q3 >= 1".into()));
            }
            let spec = GraphIntegralSpec::new(d, ell, 4, &[(0, 1, 1), (0, 3, q1), (1, 2, q2), (2, 3, q3)])?;
            (spec, two_point(q1 + 1)? * two_point(q2 + 1)? * two_point(q3 + 1)?)
        }
        GauntCase::C { p1, p2, p3 } => {
            if p1 < 2 || p2 < 2 {
                return Err(Error::Domain("C needs p1, p2 >= 2".into()));
            }
            let spec = GraphIntegralSpec::new(
                d,
                ell,
                4,
                &[(0, 1, 1), (0, 3, p1), (1, 2, p2), (1, 3, p3), (2, 3, 1)],
            )?;
            (spec, two_point(p1 + 1)? * two_point(p2 + 1)? * two_point(p3 + 2)?)
        }
    };
    let lhs = graph_integral(&spec)?;
    Ok(GauntReport { case, d, ell, lhs, rhs, ratio: lhs / rhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMethod {
    Spectral,
    FourPointGrid,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: f64,
    pub std_error: f64,
    pub method: EvalMethod,
}

/// Exponent matrix of the d = 2 integral attached to (q, kappa): kappa plus
/// one extra power on the pairs (1,2) and (3,4).
pub fn augmented_exponents(q: &[u32; 4], kappa: &DiagramIndex) -> Result<[[u32; 4]; 4]> {
    if q.iter().any(|&x| x < 2) {
        return Err(Error::Domain("all q_i must be >= 2".into()));
    }
    let want: Vec<u32> = q.iter().map(|x| x - 1).collect();
    if kappa.n != 4 || kappa.row_targets != want || !kappa.is_valid() {
        return Err(Error::Invalid("kappa is not in the index set for q - 1".into()));
    }
    let mut e = [[0u32; 4]; 4];
    for (a, row) in e.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = kappa.k[a][b];
        }
    }
    for (a, b) in [(0, 1), (2, 3)] {
        e[a][b] += 1;
        e[b][a] += 1;
    }
    Ok(e)
}

/// Exact (spectral or four-point grid) value of a 4-node d = 2 graph
/// integral, with Monte Carlo only if both exact paths are out of budget.
pub fn four_node_s2_integral(ell: u32, e: &[[u32; 4]; 4], seed: u64) -> Result<IntegralValue> {
    let rows: Vec<Vec<u32>> = e.iter().map(|r| r.to_vec()).collect();
    let spec = GraphIntegralSpec::from_matrix(2, ell, &rows)?;
    if spec.is_series_parallel() {
        return Ok(IntegralValue { value: graph_integral(&spec)?, std_error: 0.0, method: EvalMethod::Spectral });
    }
    match four_point_s2(ell, e) {
        Ok(v) => Ok(IntegralValue { value: v, std_error: 0.0, method: EvalMethod::FourPointGrid }),
        Err(Error::QuadratureBudget { .. }) => {
            let m = mc_graph_integral(&spec, MC_FALLBACK_SAMPLES, seed)?;
            Ok(IntegralValue { value: m.estimate, std_error: m.std_error, method: EvalMethod::MonteCarlo })
        }
        Err(err) => Err(err),
    }
}

/// The 4-point Legendre integral indexed by (q, kappa).
pub fn indexed_four_point(ell: u32, q: &[u32; 4], kappa: &DiagramIndex) -> Result<IntegralValue> {
    let e = augmented_exponents(q, kappa)?;
    four_node_s2_integral(ell, &e, 0x5eed ^ ell as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourPointRow {
    pub ell: u32,
    pub q: [u32; 4],
    pub kappa_id: usize,
    pub r: usize,
    pub n_components: usize,
    pub value: f64,
    pub abs_err: f64,
    pub method: EvalMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourPointMax {
    pub ell: u32,
    /// max over the scanned kappa of ell^3 |value|
    pub max_scaled: f64,
    /// relative standard error of the worst Monte Carlo cell, 0 when all cells are exact
    pub worst_mc_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourPointScan {
    pub rows: Vec<FourPointRow>,
    pub per_ell: Vec<FourPointMax>,
    /// number of (q, kappa) cells per R
    pub r_counts: BTreeMap<usize, usize>,
}

/// Tabulates ell^3 |value| over q_i in 2..=q_max and kappa outside the excluded set.
pub fn four_point_scan(ell_list: &[u32], q_max: u32) -> Result<FourPointScan> {
    if ell_list.iter().any(|l| l % 2 == 1 || *l == 0) {
        return Err(Error::Domain("scan uses even ell only".into()));
    }
    if q_max < 2 {
        return Err(Error::Domain("q_max must be >= 2".into()));
    }
    let mut cells = Vec::new();
    let range: Vec<u32> = (2..=q_max).collect();
    for &q1 in &range {
        for &q2 in &range {
            for &q3 in &range {
                for &q4 in &range {
                    let q = [q1, q2, q3, q4];
                    let qm: Vec<u32> = q.iter().map(|x| x - 1).collect();
                    for (id, kappa) in enumerate_a(&qm).enumerate() {
                        let g = extract_graph(&kappa);
                        if g.is_n {
                            continue;
                        }
                        let e = augmented_exponents(&q, &kappa)?;
                        cells.push((q, id, g.r, g.n_components, e));
                    }
                }
            }
        }
    }
    let mut r_counts = BTreeMap::new();
    for c in &cells {
        *r_counts.entry(c.2).or_insert(0) += 1;
    }
    let mut rows = Vec::new();
    let mut per_ell = Vec::new();
    for &ell in ell_list {
        let mut patterns: HashMap<Vec<(usize, usize, u32)>, [[u32; 4]; 4]> = HashMap::new();
        let keys: Vec<Vec<(usize, usize, u32)>> = cells
            .iter()
            .map(|c| {
                let key = canonical_edges(4, &matrix_edges(&c.4));
                patterns.entry(key.clone()).or_insert(c.4);
                key
            })
            .collect();
        let mut uniq: Vec<_> = patterns.into_iter().collect();
        uniq.sort_by(|a, b| a.0.cmp(&b.0));
        let values: HashMap<Vec<(usize, usize, u32)>, IntegralValue> = uniq
            .par_iter()
            .map(|(k, e)| four_node_s2_integral(ell, e, 0x5eed ^ ell as u64).map(|v| (k.clone(), v)))
            .collect::<Result<_>>()?;
        let l3 = (ell as f64).powi(3);
        let mut max_scaled: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for (c, key) in cells.iter().zip(&keys) {
            let v = values[key];
            max_scaled = max_scaled.max(l3 * v.value.abs());
            if v.method == EvalMethod::MonteCarlo && v.value != 0.0 {
                worst = worst.max(v.std_error / v.value.abs());
            }
            rows.push(FourPointRow {
                ell,
                q: c.0,
                kappa_id: c.1,
                r: c.2,
                n_components: c.3,
                value: v.value,
                abs_err: v.std_error,
                method: v.method,
            });
        }
        per_ell.push(FourPointMax { ell, max_scaled, worst_mc_rel_err: worst });
    }
    Ok(FourPointScan { rows, per_ell, r_counts })
}

pub(crate) fn matrix_edges(e: &[[u32; 4]; 4]) -> Vec<(usize, usize, u32)> {
    let mut v = Vec::new();
    for a in 0..4 {
        for b in a + 1..4 {
            if e[a][b] > 0 {
                v.push((a, b, e[a][b]));
            }
        }
    }
    v
}
