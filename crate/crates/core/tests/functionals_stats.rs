use hsl::accum::{jackknife_variance, RunningStats};
use hsl::basis::{eigenspace_dim_f64, sphere_area, sphere_moment};
use hsl::chaos::{hermite_eval, ChaosSpec};
use hsl::diagram::enumerate_a;
use hsl::field::{FieldSampler, SphereGrid};
use hsl::graphs::reduce::{graph_integral, GraphIntegralSpec};
use hsl::stats::*;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn s2(ell: u32, os: usize) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::gauss_s2(ell, os).unwrap())
}

#[test]
fn constant_and_linear_functionals() {
    let grid = s2(10, 1);
    let s = FieldSampler::new(2, 10, grid).unwrap();
    for r in 0..5 {
        let f = s.sample(3, r);
        assert!((integrate_functional(&f, &|_: f64| 1.0) - 4.0 * PI).abs() < 1e-12);
        assert!(integrate_functional(&f, &|x: f64| x).abs() < 1e-8 * 4.0 * PI);
    }
}

#[test]
fn second_hermite_variance_by_monte_carlo() {
    let ell = 10;
    let s = FieldSampler::new(2, ell, s2(ell, 1)).unwrap();
    let xs: Vec<f64> = (0..10_000).map(|r| integrate_functional(&s.sample(11, r), &|x: f64| hermite_eval(2, x))).collect();
    let (v, se) = jackknife_variance(&xs);
    let want = 2.0 * (4.0 * PI).powi(2) / 21.0;
    assert!((v - want).abs() < 3.0 * se, "{v} vs {want} +- {se}");
}

#[test]
fn analytic_examples() {
    let m = analytic_moments(2, 6, &ChaosSpec::exponential(1.0).unwrap()).unwrap();
    assert!((m.mean - 0.5f64.exp() * 4.0 * PI).abs() < 1e-12);
    assert!(m.shares.iter().all(|s| s.value >= 0.0 && s.q >= 2));
    let total: f64 = m.shares.iter().map(|s| s.value).sum();
    assert!((total - m.variance).abs() < 1e-14 * m.variance);

    // variance against its leading term at large ell
    let spec = ChaosSpec::exponential(1.0).unwrap();
    let mut last = f64::INFINITY;
    for ell in [50u32, 100, 200] {
        let m = analytic_moments(2, ell, &spec).unwrap();
        let b2 = spec.b(2);
        let lead = b2 * b2 / 2.0 * (4.0 * PI).powi(2) / (2 * ell + 1) as f64;
        let gap = (m.variance / lead - 1.0).abs();
        assert!(gap < last);
        last = gap;
    }
    assert!(last < 0.1);
}

#[test]
fn eta_branches() {
    let e = ChaosSpec::exponential(0.5).unwrap();
    let m = analytic_moments(2, 32, &e).unwrap();
    assert!((m.eta_rate - 32f64.ln() / 32.0).abs() < 1e-15);
    let m = analytic_moments(3, 8, &e).unwrap();
    assert_eq!(m.eta_rate, 1.0 / 8.0);
    let m = analytic_moments(2, 32, &ChaosSpec::hermite_sum(&[(2, 1.0), (3, 0.5)])).unwrap();
    assert_eq!(m.eta_rate, 1.0 / 32.0);
}

#[test]
fn chaos_projections() {
    let ell = 8;
    let spec = ChaosSpec::exponential(0.5).unwrap();
    let s = FieldSampler::new(2, ell, s2(ell, 4)).unwrap();
    let mut q1 = RunningStats::default();
    let mut q2 = Vec::new();
    for r in 0..10_000 {
        let f = s.sample(21, r);
        q1.push(chaos_projection(&f, &spec, 1));
        q2.push(chaos_projection(&f, &spec, 2));
        if r < 3 {
            assert!((chaos_projection(&f, &spec, 0) - spec.b(0) * 4.0 * PI).abs() < 1e-12);
            let sum: f64 = (0..=spec.truncation as u32).map(|q| chaos_projection(&f, &spec, q)).sum();
            let series = integrate_functional(&f, &|x: f64| spec.series(x));
            assert!((sum - series).abs() < 1e-12 * series);
            // the dropped tail has L2 norm below sqrt(tail) at every node
            let x = integrate_functional(&f, &spec);
            assert!((sum - x).abs() < 10.0 * 4.0 * PI * spec.tail.unwrap().sqrt(), "{sum} vs {x}");
        }
    }
    assert!(q1.mean.abs() <= 3.0 * q1.std_error().max(1e-12));
    let (v, se) = jackknife_variance(&q2);
    let want = spec.b(2).powi(2) / 2.0 * 4.0 * PI * sphere_moment(2, ell, 2).unwrap();
    assert!((v - want).abs() < 3.0 * se, "{v} vs {want}");
}

#[test]
fn standardization() {
    let ell = 16;
    let eval = FunctionalEvaluator::new(2, ell, ChaosSpec::exponential(0.5).unwrap()).unwrap();
    let reps = 10_000;
    let batch = simulate_batch(&eval, default_grid(2, ell, 2).unwrap(), reps, 5, false).unwrap();
    let st: RunningStats = batch.iter().map(|s| s.standardized).collect();
    assert!(st.mean.abs() < 3.0 / (reps as f64).sqrt(), "{}", st.mean);
    assert!((st.variance() - 1.0).abs() < 3.0 * (2.0 / reps as f64).sqrt(), "{}", st.variance());
}

#[test]
fn sigma_paths_agree_and_are_nonnegative() {
    let ell = 8;
    for spec in [ChaosSpec::hermite(2), ChaosSpec::exponential(1.0).unwrap(), ChaosSpec::hermite_sum(&[(2, 1.0), (4, 0.3)])] {
        let eval = FunctionalEvaluator::new(2, ell, spec).unwrap();
        let s = FieldSampler::new(2, ell, s2(ell, 1)).unwrap();
        assert!(s.grid().len() <= DENSE_SIGMA_NODES);
        for r in 0..4 {
            let f = s.sample(9, r);
            let a = eval.sigma(&f, SigmaPath::Spectral).unwrap();
            let b = eval.sigma(&f, SigmaPath::Dense).unwrap();
            assert!(a >= 0.0);
            assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
        }
    }
    // dense path on a product grid and refusal of the spectral one
    let g = Arc::new(SphereGrid::product(3, 8).unwrap());
    let eval = FunctionalEvaluator::new(3, 4, ChaosSpec::hermite(2)).unwrap();
    let f = FieldSampler::new(3, 4, g).unwrap().sample(1, 0);
    assert!(eval.sigma(&f, SigmaPath::Auto).unwrap() >= 0.0);
    assert!(eval.sigma(&f, SigmaPath::Spectral).is_err());
}

#[test]
fn sigma_means() {
    let ell = 12;
    for spec in [ChaosSpec::hermite(2), ChaosSpec::exponential(1.0).unwrap()] {
        let eval = FunctionalEvaluator::new(2, ell, spec).unwrap();
        let batch = simulate_batch(&eval, default_grid(2, ell, 4).unwrap(), 2000, 17, true).unwrap();
        let st: RunningStats = batch.iter().map(|s| s.sigma.unwrap()).collect();
        assert!(
            (st.mean - eval.moments.sigma_mean).abs() < 3.0 * st.std_error(),
            "{} vs {} +- {}",
            st.mean,
            eval.moments.sigma_mean,
            st.std_error()
        );
    }
}

/// Var(sigma) for phi = H_2 from the diagram formula over four points with
/// two extra kernel edges, each pattern integrated exactly.
fn second_chaos_sigma_variance(ell: u32) -> f64 {
    let mut e4 = 0.0;
    for kappa in enumerate_a(&[1, 1, 1, 1]) {
        if kappa.get(0, 1) == 1 && kappa.get(2, 3) == 1 {
            continue;
        }
        let mut edges = vec![(0, 1, 1), (2, 3, 1)];
        for i in 0..4 {
            for j in i + 1..4 {
                if kappa.get(i, j) > 0 {
                    edges.push((i, j, kappa.get(i, j)));
                }
            }
        }
        e4 += graph_integral(&GraphIntegralSpec::new(2, ell, 4, &edges).unwrap()).unwrap();
    }
    let v2 = analytic_moments(2, ell, &ChaosSpec::hermite(2)).unwrap().variance;
    16.0 / (v2 * v2) * e4
}

#[test]
fn second_chaos_sigma_variance_matches_diagram() {
    let ell = 8;
    let want = second_chaos_sigma_variance(ell);
    assert!((want - 8.0 / eigenspace_dim_f64(2, ell).unwrap()).abs() < 1e-10);
    let series = sigma_variance_scan(2, &[4, 6, 8, 10], &ChaosSpec::hermite(2), 2000, 3, 1).unwrap();
    let p = series.points.iter().find(|p| p.ell == ell).unwrap();
    assert!(p.y > 0.0 && p.y_err > 0.0);
    assert!((p.y - want).abs() < 3.0 * p.y_err, "{} vs {want} +- {}", p.y, p.y_err);
}

#[test]
fn sigma_scan_preconditions() {
    assert!(sigma_variance_scan(2, &[4, 6, 8, 10], &ChaosSpec::hermite(2), 100, 3, 1).is_err());
    assert!(sigma_variance_scan(2, &[4, 5, 8, 10], &ChaosSpec::hermite(2), 500, 3, 1).is_err());
}

#[test]
fn sample_record_fields() {
    let eval = FunctionalEvaluator::new(2, 4, ChaosSpec::hermite(2)).unwrap();
    let f = FieldSampler::new(2, 4, s2(4, 1)).unwrap().sample(1, 2);
    let rec = serde_json::to_value(eval.sample(&f, true).unwrap()).unwrap();
    for k in ["ell", "seed", "X", "Xtilde", "sigma"] {
        assert!(rec.get(k).is_some(), "{k}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shares_partition_the_variance(
        w in prop::collection::vec(-2.0f64..2.0, 5),
        half in 1u32..20,
        d in 2u32..5,
    ) {
        prop_assume!(w[0].abs() > 1e-3);
        let terms: Vec<(u32, f64)> = w.iter().enumerate().map(|(i, &x)| (i as u32 + 2, x)).collect();
        let spec = ChaosSpec::hermite_sum(&terms);
        let m = analytic_moments(d, 2 * half, &spec).unwrap();
        prop_assert!(m.shares.iter().all(|s| s.value >= 0.0 && s.q >= 2));
        let total: f64 = m.shares.iter().map(|s| s.value).sum();
        prop_assert!((total - m.variance).abs() <= 1e-13 * m.variance);
        prop_assert!((m.mean - spec.b(0) * sphere_area(d)).abs() < 1e-9);
        prop_assert!(m.sigma_mean >= 2.0 - 1e-12);
    }
}
