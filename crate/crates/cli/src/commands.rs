use std::sync::Arc;

use anyhow::{bail, Result};
use hsl::accum::{jackknife_variance, RunningStats};
use hsl::acceptance::{self, AcceptanceConfig, CriterionOutcome, CRITERIA, GAUNT_GOLDEN};
use hsl::basis::{eigenspace_dim_f64, moment_asymptote, reproducing_check, sphere_area, sphere_moment};
use hsl::diagram::{enumerate_a, extract_graph, joint_hermite_moment, wick_oracle};
use hsl::field::{replicate_rng, SphereGrid};
use hsl::graphs::{
    four_point_s2, gaunt_identity_check, mc_graph_integral, four_point_scan, GauntCase, GraphIntegralSpec,
};
use hsl::rates::{smoothed_tv_to_gauss, theory_slope, wasserstein1_to_gauss, RatePoint, RateQuantity, RateSeries};
use hsl::stats::{default_grid, ell_seed, simulate_batch, FunctionalEvaluator, StatSample};
use num::rational::BigRational;
use num::BigInt;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BackendChoice, ExperimentConfig};
use crate::output::RunDir;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: &str, name: &str, passed: bool, detail: String) -> Self {
        CheckResult { id: id.into(), name: name.into(), passed, detail }
    }

    pub fn line(&self) -> String {
        format!("{} [{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.detail)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    experiment_id: &'a str,
    subcommand: &'a str,
    config_hash: &'a str,
    seed: u64,
    checks: &'a [CheckResult],
    all_passed: bool,
}

fn finish(run: &mut RunDir, subcommand: &str, cfg: &ExperimentConfig, checks: Vec<CheckResult>) -> Result<bool> {
    let all_passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!("{}", c.line());
    }
    let (id, hash) = (run.experiment_id.clone(), run.config_hash.clone());
    let summary = Summary {
        experiment_id: &id,
        subcommand,
        config_hash: &hash,
        seed: cfg.seed,
        checks: &checks,
        all_passed,
    };
    run.write_json("summary.json", &summary)?;
    println!("results in {}", run.dir.display());
    Ok(all_passed)
}

fn grid_for(cfg: &ExperimentConfig, ell: u32) -> Result<Arc<SphereGrid>> {
    Ok(match cfg.backend {
        BackendChoice::Auto => default_grid(cfg.d, ell, cfg.oversample)?,
        BackendChoice::Harmonic => Arc::new(SphereGrid::gauss_s2(ell, cfg.oversample)?),
        BackendChoice::Cholesky => Arc::new(SphereGrid::product(cfg.d, 2 * ell as usize * cfg.oversample)?),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn moments(cfg: &ExperimentConfig) -> Result<bool> {
    let mut run = RunDir::create("moments", cfg)?;
    let d = cfg.d;
    let mut w = run.csv("moments.csv")?;
    w.write_record(["d", "q", "ell", "moment", "asymptote", "ratio"])?;
    let mut worst_second: f64 = 0.0;
    let mut last_ratios = Vec::new();
    let top = *cfg.ell_list.last().unwrap();
    for q in 2..=4u32 {
        for &ell in &cfg.ell_list {
            let m = sphere_moment(d, ell, q)?;
            let a = moment_asymptote(d, q, ell).ok();
            let ratio = a.map(|a| m / a);
            if q == 2 {
                let exact = sphere_area(d) / eigenspace_dim_f64(d, ell)?;
                worst_second = worst_second.max((m / exact - 1.0).abs());
            }
            if ell == top {
                if let Some(r) = ratio {
                    last_ratios.push((q, r));
                }
            }
            w.write_record([d.to_string(), q.to_string(), ell.to_string(), format!("{m:e}"), opt(a), opt(ratio)])?;
        }
    }
    run.finish_csv("moments.csv", w)?;

    let mut worst_rep: f64 = 0.0;
    for &ell in &cfg.ell_list {
        worst_rep = worst_rep.max(reproducing_check(d, ell)?);
    }
    let tol3 = cfg.tol("asymptote_rel");
    let ok3 = last_ratios.iter().all(|(_, r)| (r - 1.0).abs() <= tol3);
    let shown: Vec<String> = last_ratios.iter().map(|(q, r)| format!("q={q}: {r:.4}")).collect();
    let checks = vec![
        CheckResult::new(
            "1",
            "exact second moment",
            worst_second <= cfg.tol("moment_rel"),
            format!("max relative error {worst_second:.2e}"),
        ),
        CheckResult::new(
            "2",
            "reproducing property",
            worst_rep <= cfg.tol("reproducing"),
            format!("max defect {worst_rep:.2e}"),
        ),
        CheckResult::new(
            "3",
            "moment asymptotics",
            ok3,
            format!("ratios at ell={top} [{}] (tol {tol3})", shown.join(", ")),
        ),
    ];
    finish(&mut run, "moments", cfg, checks)
}

const DIAGRAM_COVS_PER_Q: u64 = 3;

fn rational_entry(code: u32) -> BigRational {
    // {0, 1/2, -1/2, 1, -1}
    let (n, dd) = [(0, 1), (1, 2), (-1, 2), (1, 1), (-1, 1)][code as usize];
    BigRational::new(BigInt::from(n), BigInt::from(dd))
}

fn all_q(n: usize, q_max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|v| (0..=q_max).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    out
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn diagram(cfg: &ExperimentConfig) -> Result<bool> {
    let mut run = RunDir::create("diagram", cfg)?;
    let mut scan = run.csv("diagram_scan.csv")?;
    scan.write_record(["q", "n", "index_count", "forests", "min_components", "max_components"])?;
    let mut oracle = run.csv("diagram_oracle.csv")?;
    oracle.write_record(["q", "cov_upper", "diagram", "oracle", "equal"])?;
    let (mut compared, mut mismatched) = (0usize, 0usize);
    let mut stream = 0u64;
    for n in 2..=4usize {
        for q in all_q(n, cfg.q_max) {
            let mut count = 0usize;
            let mut forests = 0usize;
            let (mut lo, mut hi) = (usize::MAX, 0usize);
            for kappa in enumerate_a(&q) {
                let g = extract_graph(&kappa);
                count += 1;
                forests += g.is_tree_per_component.iter().all(|&t| t) as usize;
                lo = lo.min(g.n_components);
                hi = hi.max(g.n_components);
            }
            let (lo, hi) = if count == 0 { (String::new(), String::new()) } else { (lo.to_string(), hi.to_string()) };
            scan.write_record([join(&q), n.to_string(), count.to_string(), forests.to_string(), lo, hi])?;
            if count == 0 {
                continue;
            }
            for _ in 0..DIAGRAM_COVS_PER_Q {
                let mut rng = replicate_rng(cfg.seed ^ 0xD1A6, stream);
                stream += 1;
                let mut cov = vec![vec![BigRational::from_integer(BigInt::from(1)); n]; n];
                let mut upper = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let v = rational_entry(rng.random_range(0..5));
                        upper.push(v.to_string());
                        cov[i][j] = v.clone();
                        cov[j][i] = v;
                    }
                }
                let a = joint_hermite_moment(&q, &cov);
                let b = wick_oracle(&q, &cov)?;
                let equal = a == b;
                compared += 1;
                mismatched += !equal as usize;
                oracle.write_record([join(&q), upper.join(" "), a.to_string(), b.to_string(), equal.to_string()])?;
            }
        }
    }
    run.finish_csv("diagram_scan.csv", scan)?;
    run.finish_csv("diagram_oracle.csv", oracle)?;
    let checks = vec![CheckResult::new(
        "4",
        "diagram formula equals Wick oracle",
        mismatched == 0,
        format!("{compared} exact comparisons, {mismatched} mismatches"),
    )];
    finish(&mut run, "diagram", cfg, checks)
}

#[derive(Deserialize)]
struct Golden {
    d: u32,
    a1: f64,
    b: f64,
    c: f64,
}

fn gaunt_cases(q_max: u32) -> Vec<GauntCase> {
    let mut cases = Vec::new();
    let r = 2..=q_max;
    for p in r.clone() {
        for q in r.clone() {
            cases.push(GauntCase::A1 { p, q });
        }
    }
    for q1 in r.clone() {
        for q2 in r.clone() {
            for q3 in 1..=q_max {
                cases.push(GauntCase::B { q1, q2, q3 });
            }
        }
    }
    for p1 in r.clone() {
        for p2 in r.clone() {
            for p3 in 0..=q_max {
                cases.push(GauntCase::C { p1, p2, p3 });
            }
        }
    }
    cases
}

fn case_label(c: &GauntCase) -> String {
    match c {
        GauntCase::A1 { p, q } => format!("A1 p={p} q={q}"),
        GauntCase::B { q1, q2, q3 } => format!("B q1={q1} q2={q2} q3={q3}"),
        GauntCase::C { p1, p2, p3 } => format!("C p1={p1} p2={p2} p3={p3}"),
    }
}

pub fn graph_integral(cfg: &ExperimentConfig) -> Result<bool> {
    if cfg.q_max < 2 {
        bail!("graph-integral needs q_max >= 2");
    }
    let mut run = RunDir::create("graph-integral", cfg)?;
    let d = cfg.d;
    let golden: Golden = serde_json::from_str(GAUNT_GOLDEN)?;
    let mut w = run.csv("gaunt.csv")?;
    w.write_record(["case", "d", "ell", "lhs", "rhs", "ratio"])?;
    let cases = gaunt_cases(cfg.q_max);
    let mut worst: f64 = 0.0;
    for case in &cases {
        let mut first = None;
        for &ell in &cfg.ell_list {
            let r = gaunt_identity_check(d, ell, *case)?;
            let reference = if d == golden.d {
                match case {
                    GauntCase::A1 { .. } => golden.a1,
                    GauntCase::B { .. } => golden.b,
                    GauntCase::C { .. } => golden.c,
                }
            } else {
                *first.get_or_insert(r.ratio)
            };
            worst = worst.max((r.ratio / reference - 1.0).abs());
            w.write_record([
                case_label(case),
                d.to_string(),
                ell.to_string(),
                format!("{:e}", r.lhs),
                format!("{:e}", r.rhs),
                format!("{:e}", r.ratio),
            ])?;
        }
    }
    run.finish_csv("gaunt.csv", w)?;
    let against = if d == golden.d { "pinned constants" } else { "the first ell" };
    let mut checks = vec![CheckResult::new(
        "6",
        "Gaunt constants",
        worst <= cfg.tol("gaunt_rel"),
        format!("{} ratios, max relative deviation from {against} {worst:.2e}", cases.len() * cfg.ell_list.len()),
    )];

    if d == 2 {
        let scan = four_point_scan(&cfg.ell_list, cfg.q_max)?;
        let mut w = run.csv("four_point.csv")?;
        w.write_record(["ell", "q", "kappa_id", "r", "n_components", "value", "abs_err", "method"])?;
        for row in &scan.rows {
            w.write_record([
                row.ell.to_string(),
                join(&row.q),
                row.kappa_id.to_string(),
                row.r.to_string(),
                row.n_components.to_string(),
                format!("{:e}", row.value),
                format!("{:e}", row.abs_err),
                serde_json::to_value(row.method)?.as_str().unwrap_or_default().to_string(),
            ])?;
        }
        run.finish_csv("four_point.csv", w)?;
        let mut w = run.csv("four_point_max.csv")?;
        w.write_record(["ell", "max_scaled", "worst_mc_rel_err"])?;
        for p in &scan.per_ell {
            w.write_record([p.ell.to_string(), format!("{:e}", p.max_scaled), format!("{:e}", p.worst_mc_rel_err)])?;
        }
        run.finish_csv("four_point_max.csv", w)?;
        let m: Vec<f64> = scan.per_ell.iter().map(|p| p.max_scaled).collect();
        let mut band: f64 = 0.0;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                band = band.max(m[j] / m[i]);
            }
        }
        checks.push(CheckResult::new(
            "7",
            "four-point integral decay",
            band <= cfg.tol("four_point_band"),
            format!("worst later/earlier ratio of max ell^3|I| {band:.3}"),
        ));
    }

    let mut w = run.csv("k4.csv")?;
    w.write_record(["d", "ell", "mc_estimate", "mc_std_error", "exact", "z"])?;
    let mut worst_z: f64 = 0.0;
    let clique = [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)];
    for &ell in &cfg.ell_list {
        let spec = GraphIntegralSpec::new(d, ell, 4, &clique)?;
        let mc = mc_graph_integral(&spec, cfg.mc_samples, ell_seed(cfg.seed ^ 0x4C1, ell))?;
        let exact = if d == 2 { four_point_s2(ell, &[[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]).ok() } else { None };
        let z = exact.map(|e| (mc.estimate - e) / mc.std_error);
        if let Some(z) = z {
            worst_z = worst_z.max(z.abs());
        }
        w.write_record([
            d.to_string(),
            ell.to_string(),
            format!("{:e}", mc.estimate),
            format!("{:e}", mc.std_error),
            opt(exact),
            z.map(|z| format!("{z:.3}")).unwrap_or_default(),
        ])?;
    }
    run.finish_csv("k4.csv", w)?;
    if d == 2 {
        checks.push(CheckResult::new(
            "k4",
            "four-clique Monte Carlo against exact grid",
            worst_z <= 4.0,
            format!("max |z| {worst_z:.2}"),
        ));
    }
    finish(&mut run, "graph-integral", cfg, checks)
}

fn batch(cfg: &ExperimentConfig, ell: u32, with_sigma: bool) -> Result<(FunctionalEvaluator, Vec<StatSample>)> {
    let eval = FunctionalEvaluator::new(cfg.d, ell, cfg.phi.build()?)?;
    let samples = simulate_batch(&eval, grid_for(cfg, ell)?, cfg.reps, ell_seed(cfg.seed, ell), with_sigma)?;
    Ok((eval, samples))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<bool> {
    let mut run = RunDir::create("simulate", cfg)?;
    let mut lines = run.jsonl("samples.jsonl")?;
    let mut w = run.csv("simulate.csv")?;
    w.write_record([
        "ell",
        "reps",
        "mean",
        "analytic_mean",
        "variance",
        "variance_se",
        "analytic_variance",
        "variance_z",
        "sigma_mean",
        "sigma_se",
        "analytic_sigma_mean",
        "sigma_z",
    ])?;
    let (mut worst_vz, mut worst_sz): (f64, f64) = (0.0, 0.0);
    for &ell in &cfg.ell_list {
        let (eval, samples) = batch(cfg, ell, cfg.with_sigma)?;
        for s in &samples {
            lines.push(s)?;
        }
        let xs: Vec<f64> = samples.iter().map(|s| s.value).collect();
        let st: RunningStats = xs.iter().copied().collect();
        let (v, vse) = jackknife_variance(&xs);
        let m = &eval.moments;
        let vz = (v - m.variance) / vse;
        worst_vz = worst_vz.max(vz.abs());
        let (mut sm, mut sse, mut sz) = (None, None, None);
        if cfg.with_sigma {
            let ss: RunningStats = samples.iter().filter_map(|s| s.sigma).collect();
            let z = (ss.mean - m.sigma_mean) / ss.std_error();
            worst_sz = worst_sz.max(z.abs());
            (sm, sse, sz) = (Some(ss.mean), Some(ss.std_error()), Some(z));
        }
        w.write_record([
            ell.to_string(),
            cfg.reps.to_string(),
            format!("{:e}", st.mean),
            format!("{:e}", m.mean),
            format!("{v:e}"),
            format!("{vse:e}"),
            format!("{:e}", m.variance),
            format!("{vz:.3}"),
            opt(sm),
            opt(sse),
            format!("{:e}", m.sigma_mean),
            sz.map(|z| format!("{z:.3}")).unwrap_or_default(),
        ])?;
    }
    run.finish_jsonl("samples.jsonl", lines)?;
    run.finish_csv("simulate.csv", w)?;
    let mut checks = vec![CheckResult::new(
        "8",
        "variance law",
        worst_vz <= cfg.tol("variance_z"),
        format!("max |MC variance - analytic| / SE {worst_vz:.2} over {} ell", cfg.ell_list.len()),
    )];
    if cfg.with_sigma {
        checks.push(CheckResult::new(
            "9",
            "mean of sigma",
            worst_sz <= cfg.tol("sigma_z"),
            format!("max |MC mean - analytic| / SE {worst_sz:.2}"),
        ));
    }
    finish(&mut run, "simulate", cfg, checks)
}

#[derive(Serialize)]
struct FitReport {
    bandwidth: f64,
    w1: RateSeries,
    tv_proxy: RateSeries,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_w1: Option<RateSeries>,
}

pub fn rates(cfg: &ExperimentConfig) -> Result<bool> {
    if cfg.ell_list.len() < 4 {
        bail!("rates needs at least 4 ell values for a slope fit");
    }
    if cfg.reps < 2 {
        bail!("rates needs at least 2 replicates");
    }
    let mut run = RunDir::create("rates", cfg)?;
    let h = acceptance::tv_bandwidth(cfg.reps as usize);
    let mut w = run.csv("rates.csv")?;
    w.write_record(["ell", "w1", "tv_proxy", "sigma_w1"])?;
    let (mut w1, mut tv, mut sw) = (Vec::new(), Vec::new(), Vec::new());
    for &ell in &cfg.ell_list {
        let (_, samples) = batch(cfg, ell, cfg.with_sigma)?;
        let xs: Vec<f64> = samples.iter().map(|s| s.standardized).collect();
        let a = wasserstein1_to_gauss(&xs)?;
        let b = smoothed_tv_to_gauss(&xs, h)?;
        let c = cfg.with_sigma.then(|| {
            let st: RunningStats = samples.iter().filter_map(|s| s.sigma).map(|s| (s - 2.0).abs()).collect();
            st.mean
        });
        w1.push(RatePoint { ell, y: a, y_err: 0.0 });
        tv.push(RatePoint { ell, y: b, y_err: 0.0 });
        if let Some(c) = c {
            sw.push(RatePoint { ell, y: c, y_err: 0.0 });
        }
        w.write_record([ell.to_string(), format!("{a:e}"), format!("{b:e}"), opt(c)])?;
    }
    run.finish_csv("rates.csv", w)?;
    let d = cfg.d;
    let report = FitReport {
        bandwidth: h,
        w1: RateSeries::new(w1, Some(theory_slope(RateQuantity::W1Standardized, d)))?,
        tv_proxy: RateSeries::new(tv.clone(), Some(-0.5))?,
        sigma_w1: if cfg.with_sigma { Some(RateSeries::new(sw, Some(theory_slope(RateQuantity::W1Sigma, d)))?) } else { None },
    };
    run.write_json("fit.json", &report)?;
    let target = theory_slope(RateQuantity::W1Standardized, d);
    let tol = cfg.tol("w1_slope");
    let mut checks = vec![
        CheckResult::new(
            "11",
            "Wasserstein rate",
            report.w1.slope_within(target, tol),
            format!("slope {:.3} +- {:.3} (target {target} +- {tol})", report.w1.slope, report.w1.slope_se),
        ),
        CheckResult::new(
            "12",
            "smoothed TV proxy decay",
            tv.windows(2).all(|p| p[1].y < p[0].y),
            format!(
                "proxy (h={h:.3}) [{}], slope {:.3}",
                tv.iter().map(|p| format!("{}:{:.4}", p.ell, p.y)).collect::<Vec<_>>().join(" "),
                report.tv_proxy.slope
            ),
        ),
    ];
    if let Some(s) = &report.sigma_w1 {
        let target = theory_slope(RateQuantity::W1Sigma, d);
        let tol = cfg.tol("sigma_w1_slope");
        checks.push(CheckResult::new(
            "sigma_w1",
            "mean |sigma - 2| rate",
            s.slope_within(target, tol),
            format!("slope {:.3} +- {:.3} (target {target} +- {tol})", s.slope, s.slope_se),
        ));
    }
    finish(&mut run, "rates", cfg, checks)
}

#[derive(Serialize)]
struct VerifyRow<'a> {
    id: u32,
    title: &'a str,
    status: &'static str,
    known_failure: bool,
    summary: &'a str,
    seconds: f64,
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    experiment_id: &'a str,
    subcommand: &'static str,
    config_hash: &'a str,
    seed: u64,
    criteria: Vec<VerifyRow<'a>>,
    all_passed: bool,
}

pub fn verify(cfg: &ExperimentConfig, only: &[u32]) -> Result<bool> {
    let ids: Vec<u32> = if only.is_empty() { CRITERIA.iter().map(|c| c.id).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.id == **id)) {
        bail!("no acceptance criterion {bad}");
    }
    let mut run = RunDir::create("verify", cfg)?;
    let acfg = AcceptanceConfig { seed: cfg.seed };
    let mut lines = run.jsonl("verify.jsonl")?;
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();
    for id in ids {
        let out = acceptance::run(id, &acfg)?;
        println!("{}", out.line());
        lines.push(&out)?;
        outcomes.push(out);
    }
    run.finish_jsonl("verify.jsonl", lines)?;
    let all_passed = outcomes.iter().all(|o| o.passed);
    let (id, hash) = (run.experiment_id.clone(), run.config_hash.clone());
    let summary = VerifySummary {
        experiment_id: &id,
        subcommand: "verify",
        config_hash: &hash,
        seed: cfg.seed,
        criteria: outcomes
            .iter()
            .map(|o| VerifyRow {
                id: o.id,
                title: &o.title,
                status: if o.passed { "PASS" } else { "FAIL" },
                known_failure: o.known_failure,
                summary: &o.summary,
                seconds: o.seconds,
            })
            .collect(),
        all_passed,
    };
    run.write_json("summary.json", &summary)?;
    println!("results in {}", run.dir.display());
    Ok(all_passed)
}
