//! The acceptance suite: twelve numbered checks with fixed tolerances and time limits.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use crate::accum::{jackknife_variance, RunningStats};
use crate::basis::{moment_asymptote, reproducing_check, sphere_area, sphere_moment};
use crate::chaos::ChaosSpec;
use crate::diagram::{enumerate_a, extract_graph, DiagramExpansion, DiagramIndex, WickOracle};
use crate::error::{Error, Result};
use crate::graphs::{
    canonical_edges, gaunt_identity_check, graph_integral, mc_graph_integral, four_point_scan, GauntCase,
    GraphIntegralSpec,
};
use crate::rates::{smoothed_tv_to_gauss, theory_slope, wasserstein1_to_gauss, RatePoint, RateQuantity, RateSeries};
use crate::stats::{default_grid, ell_seed, sigma_variance_scan, simulate_batch, FunctionalEvaluator, StatSample};

/// Criteria expected to fail: the stated tolerance contradicts the exact value.
pub const KNOWN_FAILURES: &[u32] = &[3];

/// Pinned Gaunt constants at d = 2.
pub const GAUNT_GOLDEN: &str = include_str!("../tests/golden/gaunt_constants.json");

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub time_limit_s: f64,
}

pub const CRITERIA: [Criterion; 12] = [
    Criterion { id: 1, title: "exact second moment", time_limit_s: 1.0 },
    Criterion { id: 2, title: "reproducing property", time_limit_s: 1.0 },
    Criterion { id: 3, title: "moment asymptotics", time_limit_s: 10.0 },
    Criterion { id: 4, title: "diagram formula equals Wick oracle", time_limit_s: 120.0 },
    Criterion { id: 5, title: "spanning-tree bound", time_limit_s: 300.0 },
    Criterion { id: 6, title: "Gaunt constants", time_limit_s: 120.0 },
    Criterion { id: 7, title: "four-point integral decay", time_limit_s: 900.0 },
    Criterion { id: 8, title: "variance law", time_limit_s: 180.0 },
    Criterion { id: 9, title: "mean of sigma", time_limit_s: 300.0 },
    Criterion { id: 10, title: "variance of sigma rate", time_limit_s: 1200.0 },
    Criterion { id: 11, title: "Wasserstein rate", time_limit_s: 900.0 },
    Criterion { id: 12, title: "smoothed TV proxy decay", time_limit_s: f64::INFINITY },
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { seed: 20_240_917 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    /// numeric checks alone, ignoring the time limit
    pub checks_passed: bool,
    pub known_failure: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    pub seconds: f64,
    pub time_limit_s: Option<f64>,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.2} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.summary,
            self.seconds
        )
    }
}

struct Check {
    ok: bool,
    summary: String,
    metrics: BTreeMap<String, f64>,
}

impl Check {
    fn new(ok: bool, summary: String, metrics: &[(&str, f64)]) -> Self {
        Check { ok, summary, metrics: metrics.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }
}

pub fn run(id: u32, cfg: &AcceptanceConfig) -> Result<CriterionOutcome> {
    let c = CRITERIA.iter().find(|c| c.id == id).ok_or_else(|| Error::Invalid(format!("no criterion {id}")))?;
    let start = Instant::now();
    let check = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(cfg),
        6 => c6(),
        7 => c7(),
        8 => c8(cfg),
        9 => c9(cfg),
        10 => c10(cfg),
        11 => c11(cfg),
        _ => c12(cfg),
    };
    let seconds = start.elapsed().as_secs_f64();
    let check = check.unwrap_or_else(|e| Check::new(false, format!("error: {e}"), &[]));
    let in_time = seconds <= c.time_limit_s;
    let mut summary = check.summary;
    if !in_time {
        summary.push_str(&format!("; over the {} s limit", c.time_limit_s));
    }
    Ok(CriterionOutcome {
        id,
        title: c.title.to_string(),
        passed: check.ok && in_time,
        checks_passed: check.ok,
        known_failure: KNOWN_FAILURES.contains(&id),
        summary,
        metrics: check.metrics,
        seconds,
        time_limit_s: c.time_limit_s.is_finite().then_some(c.time_limit_s),
    })
}

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|c| run(c.id, cfg).expect("listed criterion")).collect()
}

fn c1() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for d in 2..=4u32 {
        let mu = sphere_area(d);
        for ell in (0..=200u32).step_by(2) {
            let want = mu / crate::basis::eigenspace_dim_f64(d, ell)?;
            worst = worst.max((sphere_moment(d, ell, 2)? - want).abs() / want);
        }
    }
    Ok(Check::new(worst <= 1e-10, format!("max relative error {worst:.2e} (tol 1e-10)"), &[("max_rel_err", worst)]))
}

fn c2() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for d in 2..=4u32 {
        for ell in 0..=64u32 {
            worst = worst.max(reproducing_check(d, ell)?);
        }
    }
    Ok(Check::new(worst <= 1e-10, format!("max defect {worst:.2e} (tol 1e-10)"), &[("max_defect", worst)]))
}

fn c3() -> Result<Check> {
    let ell = 200;
    let r23 = sphere_moment(2, ell, 3)? / moment_asymptote(2, 3, ell)?;
    let r32 = sphere_moment(3, ell, 2)? / moment_asymptote(3, 2, ell)?;
    let l = ell as f64;
    let r24 = sphere_moment(2, ell, 4)? / (12.0 * l.ln() / (std::f64::consts::PI * l * l));
    let ok = (r23 - 1.0).abs() <= 0.10 && (r32 - 1.0).abs() <= 0.10 && (r24 - 1.0).abs() <= 0.15;
    Ok(Check::new(
        ok,
        format!("ratios at ell=200: (2,3) {r23:.4}, (3,2) {r32:.4} (tol 10%); (2,4) {r24:.4} (tol 15%)"),
        &[("ratio_d2_q3", r23), ("ratio_d3_q2", r32), ("ratio_d2_q4", r24)],
    ))
}

/// One diagram term in integer form: weight and exponents on the upper triangle.
struct IntTerm {
    w: i128,
    k: Vec<u32>,
}

fn int_terms(q: &[u32]) -> Vec<IntTerm> {
    DiagramExpansion::new(q)
        .terms
        .iter()
        .map(|(kappa, w)| IntTerm { w: i128::try_from(w).expect("weight fits in i128"), k: kappa.upper() })
        .collect()
}

/// All symmetric matrices with unit diagonal and off-diagonal entries in
/// {0, +-1/2, +-1}, scaled by 2 so every entry is an integer. Both sides then
/// carry the same factor 2^{sum q / 2} and are compared exactly.
fn c4() -> Result<Check> {
    let mut compared = 0u64;
    let mut mismatches = 0u64;
    for n in 1..=4usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let qs: Vec<Vec<u32>> = (0..6u32.pow(n as u32))
            .map(|mut c| {
                (0..n)
                    .map(|_| {
                        let v = c % 6;
                        c /= 6;
                        v
                    })
                    .collect()
            })
            .collect();
        let expansions: Vec<Vec<IntTerm>> = qs.iter().map(|q| int_terms(q)).collect();
        for code in 0..5u32.pow(pairs.len() as u32) {
            let mut cov = vec![vec![0i128; n]; n];
            let mut c = code;
            for (i, row) in cov.iter_mut().enumerate() {
                row[i] = 2;
            }
            for &(i, j) in &pairs {
                let v = (c % 5) as i128 - 2;
                c /= 5;
                cov[i][j] = v;
                cov[j][i] = v;
            }
            let powers: Vec<[i128; 6]> = pairs
                .iter()
                .map(|&(i, j)| {
                    let mut p = [1i128; 6];
                    for e in 1..6 {
                        p[e] = p[e - 1] * cov[i][j];
                    }
                    p
                })
                .collect();
            let oracle = WickOracle::new(&cov, &vec![5; n])?;
            for (q, terms) in qs.iter().zip(&expansions) {
                let lhs: i128 = terms
                    .iter()
                    .map(|t| t.k.iter().zip(&powers).fold(t.w, |acc, (&k, p)| acc * p[k as usize]))
                    .sum();
                let rhs = oracle.hermite_moment(q)?;
                compared += 1;
                if lhs != rhs {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(Check::new(
        mismatches == 0,
        format!("{compared} exact comparisons, {mismatches} mismatches"),
        &[("comparisons", compared as f64), ("mismatches", mismatches as f64)],
    ))
}

/// int prod G^{2k} for the doubled pattern of kappa at d = 2: exact when the
/// graph is series-parallel, otherwise Monte Carlo doubled from 10^4 samples
/// until estimate + 4 SE clears the bound or 10^6 samples are reached.
fn doubled_integral(ell: u32, edges: &[(usize, usize, u32)], bound: f64, seed: u64) -> Result<(f64, f64, bool)> {
    let spec = GraphIntegralSpec::new(2, ell, 4, edges)?;
    if spec.is_series_parallel() {
        return Ok((graph_integral(&spec)?, 0.0, true));
    }
    let mut samples = 10_000;
    loop {
        let m = mc_graph_integral(&spec, samples, seed)?;
        if m.estimate + 4.0 * m.std_error <= bound || samples >= crate::graphs::MC_FALLBACK_SAMPLES {
            return Ok((m.estimate, m.std_error, false));
        }
        samples = (2 * samples).min(crate::graphs::MC_FALLBACK_SAMPLES);
    }
}

fn c5(cfg: &AcceptanceConfig) -> Result<Check> {
    let ells = [4u32, 8, 16, 32, 64];
    // distinct doubled patterns with their component counts
    let mut patterns: HashMap<Vec<(usize, usize, u32)>, usize> = HashMap::new();
    let mut kappas = 0u64;
    for code in 0..6u32.pow(4) {
        let q: Vec<u32> = (0..4).map(|i| code / 6u32.pow(i) % 6).collect();
        for kappa in enumerate_a(&q) {
            kappas += 1;
            let g = extract_graph(&kappa);
            let doubled: Vec<_> = g.edges.iter().map(|&(a, b, k)| (a, b, 2 * k)).collect();
            patterns.entry(canonical_edges(4, &doubled)).or_insert(g.n_components);
        }
    }
    let mut uniq: Vec<_> = patterns.into_iter().collect();
    uniq.sort();
    let mut violations = 0u64;
    let mut worst_ratio: f64 = 0.0;
    let mut mc_cells = 0u64;
    for &ell in &ells {
        let results: Vec<Result<(f64, f64, bool, f64)>> = {
            use rayon::prelude::*;
            uniq.par_iter()
                .map(|(edges, comps)| {
                    let kappa = DiagramIndex::from_matrix(upper_to_matrix(edges));
                    debug_assert_eq!(extract_graph(&kappa).n_components, *comps);
                    let bound = crate::diagram::spanning_tree_bound(2, ell, &kappa)?;
                    let (v, se, exact) = doubled_integral(ell, edges, bound, ell_seed(cfg.seed, ell))?;
                    Ok((v, se, exact, bound))
                })
                .collect()
        };
        for r in results {
            let (v, se, exact, bound) = r?;
            if !exact {
                mc_cells += 1;
            }
            worst_ratio = worst_ratio.max((v + 4.0 * se) / bound);
            if v + 4.0 * se > bound * (1.0 + 1e-9) {
                violations += 1;
            }
        }
    }
    Ok(Check::new(
        violations == 0,
        format!(
            "{kappas} kappa, {} patterns x {} ell: {violations} violations, max value/bound {worst_ratio:.3e}, {mc_cells} Monte Carlo cells",
            uniq.len(),
            ells.len()
        ),
        &[
            ("violations", violations as f64),
            ("max_ratio", worst_ratio),
            ("patterns", uniq.len() as f64),
            ("mc_cells", mc_cells as f64),
        ],
    ))
}

fn upper_to_matrix(edges: &[(usize, usize, u32)]) -> Vec<Vec<u32>> {
    let mut m = vec![vec![0u32; 4]; 4];
    for &(a, b, k) in edges {
        m[a][b] = k;
        m[b][a] = k;
    }
    m
}

#[derive(Deserialize)]
struct GauntGolden {
    d: u32,
    a1: f64,
    b: f64,
    c: f64,
}

fn c6() -> Result<Check> {
    let golden: GauntGolden = serde_json::from_str(GAUNT_GOLDEN)?;
    let mut cases = Vec::new();
    for p in 2..=4 {
        for q in 2..=4 {
            cases.push((GauntCase::A1 { p, q }, golden.a1));
        }
    }
    for q1 in 2..=4 {
        for q2 in 2..=4 {
            for q3 in 1..=4 {
                cases.push((GauntCase::B { q1, q2, q3 }, golden.b));
            }
        }
    }
    for p1 in 2..=4 {
        for p2 in 2..=4 {
            for p3 in 0..=4 {
                cases.push((GauntCase::C { p1, p2, p3 }, golden.c));
            }
        }
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for ell in (4..=32u32).step_by(2) {
        for &(case, pinned) in &cases {
            let r = gaunt_identity_check(golden.d, ell, case)?;
            worst = worst.max((r.ratio / pinned - 1.0).abs());
            count += 1;
        }
    }
    Ok(Check::new(
        worst <= 1e-6,
        format!("{count} ratios, max relative deviation from pinned constants {worst:.2e} (tol 1e-6)"),
        &[("max_rel_dev", worst), ("cases", count as f64)],
    ))
}

fn c7() -> Result<Check> {
    let scan = four_point_scan(&[4, 8, 16, 32, 64], 4)?;
    let m: Vec<f64> = scan.per_ell.iter().map(|p| p.max_scaled).collect();
    let mut band: f64 = 0.0;
    for i in 0..m.len() {
        for j in i + 1..m.len() {
            band = band.max(m[j] / m[i]);
        }
    }
    let mc = scan.per_ell.iter().map(|p| p.worst_mc_rel_err).fold(0.0, f64::max);
    let table: Vec<String> = scan.per_ell.iter().map(|p| format!("{}:{:.4e}", p.ell, p.max_scaled)).collect();
    Ok(Check::new(
        band <= 2.0 && mc <= 0.1,
        format!("max ell^3|I| [{}], worst later/earlier {band:.3} (band 2), MC rel err {mc:.3}", table.join(" ")),
        &[("band", band), ("worst_mc_rel_err", mc)],
    ))
}

/// Replicates of X_ell for phi(z) = e^{z/2} at d = 2, shared by the distance checks.
const RATE_ELLS: [u32; 5] = [8, 16, 32, 64, 128];
const RATE_REPS: u64 = 10_000;
const RATE_OVERSAMPLE: usize = 2;

type BatchKey = (u64, u32, u64);

fn batch_cache() -> &'static Mutex<HashMap<BatchKey, Arc<Vec<StatSample>>>> {
    static CACHE: OnceLock<Mutex<HashMap<BatchKey, Arc<Vec<StatSample>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn half_exponential() -> Result<ChaosSpec> {
    ChaosSpec::exponential(0.5)
}

/// Repeat `repeat` of the e^{z/2} batch at one ell.
fn rate_batch(seed: u64, ell: u32, repeat: u64) -> Result<Arc<Vec<StatSample>>> {
    let key = (seed, ell, repeat);
    if let Some(b) = batch_cache().lock().expect("cache lock").get(&key) {
        return Ok(b.clone());
    }
    let eval = FunctionalEvaluator::new(2, ell, half_exponential()?)?;
    let s = ell_seed(seed, ell).wrapping_add(repeat.wrapping_mul(0xA24B_AED4_963E_E407));
    let batch = Arc::new(simulate_batch(&eval, default_grid(2, ell, RATE_OVERSAMPLE)?, RATE_REPS, s, false)?);
    batch_cache().lock().expect("cache lock").insert(key, batch.clone());
    Ok(batch)
}

fn c8(cfg: &AcceptanceConfig) -> Result<Check> {
    let ell = 128;
    let spec = half_exponential()?;
    let eval = FunctionalEvaluator::new(2, ell, spec.clone())?;
    let batch = rate_batch(cfg.seed, ell, 0)?;
    let xs: Vec<f64> = batch.iter().map(|s| s.value).collect();
    let (v, se) = jackknife_variance(&xs);
    let analytic = eval.moments.variance;
    let z = (v - analytic) / se;
    let mu = sphere_area(2);
    let lead = spec.b(2).powi(2) / 2.0 * mu * mu / crate::basis::eigenspace_dim_f64(2, ell)?;
    let rel = (analytic / lead - 1.0).abs();
    Ok(Check::new(
        z.abs() <= 3.0 && rel <= 0.10,
        format!("MC variance {v:.5e} vs analytic {analytic:.5e} ({z:+.2} SE); analytic/asymptote - 1 = {rel:.4} (tol 0.10)"),
        &[("mc_variance", v), ("mc_se", se), ("analytic_variance", analytic), ("z", z), ("asymptote_rel_gap", rel)],
    ))
}

fn c9(cfg: &AcceptanceConfig) -> Result<Check> {
    let ells = [8u32, 16, 32, 64, 128, 256];
    let h2 = ChaosSpec::hermite(2);
    let mut worst_exact: f64 = 0.0;
    for &ell in &ells {
        let m = crate::stats::analytic_moments(2, ell, &h2)?;
        worst_exact = worst_exact.max((m.sigma_mean - 2.0).abs());
    }
    let ell_mc = 32;
    let eval = FunctionalEvaluator::new(2, ell_mc, h2)?;
    let batch = simulate_batch(&eval, default_grid(2, ell_mc, 1)?, 2000, ell_seed(cfg.seed ^ 0x9, ell_mc), true)?;
    let st: RunningStats = batch.iter().map(|s| s.sigma.unwrap_or(f64::NAN)).collect();
    let z = (st.mean - 2.0) / st.std_error();
    let e = half_exponential()?;
    let mut scaled = Vec::new();
    for &ell in &ells {
        let m = crate::stats::analytic_moments(2, ell, &e)?;
        scaled.push((m.sigma_mean - 2.0).abs() / m.eta_rate);
    }
    let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let spread = hi / lo;
    let shown: Vec<String> = scaled.iter().map(|s| format!("{s:.4}")).collect();
    Ok(Check::new(
        worst_exact <= 1e-9 && z.abs() <= 3.0 && spread <= 3.0,
        format!(
            "H_2: max |E sigma - 2| {worst_exact:.1e}, MC mean {:.4} ({z:+.2} SE); exp(1/2): |E sigma - 2|/eta = [{}], max/min {spread:.3} (tol 3)",
            st.mean,
            shown.join(", ")
        ),
        &[("h2_exact_err", worst_exact), ("h2_mc_z", z), ("exp_spread", spread)],
    ))
}

fn c10(cfg: &AcceptanceConfig) -> Result<Check> {
    let series = sigma_variance_scan(2, &[8, 16, 32, 64], &half_exponential()?, 2000, cfg.seed ^ 0x10, 2)?;
    let pts: Vec<String> = series.points.iter().map(|p| format!("{}:{:.3e}", p.ell, p.y)).collect();
    Ok(Check::new(
        series.slope_within(-1.0, 0.3),
        format!("Var(sigma) [{}], slope {:.3} +- {:.3} (target -1 +- 0.3)", pts.join(" "), series.slope, series.slope_se),
        &[("slope", series.slope), ("slope_se", series.slope_se)],
    ))
}

fn c11(cfg: &AcceptanceConfig) -> Result<Check> {
    let mut points = Vec::new();
    for &ell in &RATE_ELLS {
        let batch = rate_batch(cfg.seed, ell, 0)?;
        let xs: Vec<f64> = batch.iter().map(|s| s.standardized).collect();
        points.push(RatePoint { ell, y: wasserstein1_to_gauss(&xs)?, y_err: 0.0 });
    }
    let series = RateSeries::new(points, Some(theory_slope(RateQuantity::W1Standardized, 2)))?;
    let pts: Vec<String> = series.points.iter().map(|p| format!("{}:{:.4}", p.ell, p.y)).collect();
    Ok(Check::new(
        series.slope_within(-0.5, 0.15),
        format!("W1 [{}], slope {:.3} +- {:.3} (target -0.5 +- 0.15)", pts.join(" "), series.slope, series.slope_se),
        &[("slope", series.slope), ("slope_se", series.slope_se)],
    ))
}

/// Silverman's rule for a unit-variance sample.
pub fn tv_bandwidth(n: usize) -> f64 {
    1.06 * (n as f64).powf(-0.2)
}

fn c12(cfg: &AcceptanceConfig) -> Result<Check> {
    let h = tv_bandwidth(RATE_REPS as usize);
    let mut medians = Vec::new();
    for &ell in &RATE_ELLS {
        let mut vals = Vec::new();
        for repeat in 0..3 {
            let batch = rate_batch(cfg.seed, ell, repeat)?;
            let xs: Vec<f64> = batch.iter().map(|s| s.standardized).collect();
            vals.push(smoothed_tv_to_gauss(&xs, h)?);
        }
        vals.sort_by(f64::total_cmp);
        medians.push(vals[1]);
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = RATE_ELLS.iter().zip(&medians).map(|(l, m)| format!("{l}:{m:.4}")).collect();
    let mut metrics = vec![("bandwidth", h)];
    let names = ["median_8", "median_16", "median_32", "median_64", "median_128"];
    metrics.extend(names.iter().zip(&medians).map(|(n, m)| (*n, *m)));
    Ok(Check::new(decreasing, format!("median proxy (h={h:.3}) [{}]", shown.join(" ")), &metrics))
}
