use hsl::basis::quadrature::hermite_rule;
use hsl::chaos::*;
use proptest::prelude::*;

fn ln_fact(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[test]
fn parseval_for_exponential() {
    for t in [0.3, 0.5, 1.0] {
        let spec = ChaosSpec::exponential_with(t, 40).unwrap();
        let want = (2.0 * t * t).exp();
        assert!((spec.norm_sq() / want - 1.0).abs() < 1e-13, "t={t}");
        let rule = hermite_rule(80).unwrap();
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let gh = rule.integrate(|x| (2.0 * t * x).exp());
        assert!((gh / want - 1.0).abs() < 1e-12, "{gh}");
    }
    let auto = ChaosSpec::exponential(0.5).unwrap();
    assert!(auto.tail_certified());
    assert!(auto.tail.unwrap() <= DEFAULT_TAIL_EPS * auto.norm_sq());
}

#[test]
fn hermite_polynomials_are_orthogonal() {
    for p in 0..=8u32 {
        let spec = ChaosSpec::from_function(|x| hermite_eval(p, x), 12).unwrap();
        let pf = (1..=p).map(|k| k as f64).product::<f64>();
        for q in 0..=12usize {
            let want = if q == p as usize { pf } else { 0.0 };
            assert!((spec.b(q) - want).abs() < 1e-9 * pf.max(1.0), "p={p} q={q}: {}", spec.b(q));
        }
    }
    let rule = hermite_rule(30).unwrap();
    for p in 0..10u32 {
        for q in 0..10u32 {
            let v = rule.integrate(|x| hermite_eval(p, x) * hermite_eval(q, x));
            let want = if p == q { ln_fact(p).exp() } else { 0.0 };
            assert!((v - want).abs() < 1e-9 * want.max(1.0), "{p},{q}");
        }
    }
}

/// Truncation error at a point is controlled by the Cramer bound
/// |H_q(x)| <= 1.09 sqrt(q!) e^{x^2/4}.
#[test]
fn pointwise_truncation_error_under_cramer_bound() {
    let t: f64 = 1.0;
    for big_q in [6usize, 10, 16] {
        let spec = ChaosSpec::exponential_with(t, big_q).unwrap();
        let tail_coeffs: f64 = (big_q as u32 + 1..big_q as u32 + 200)
            .map(|q| (t * t / 2.0 + q as f64 * t.abs().ln() - 0.5 * ln_fact(q)).exp())
            .sum();
        for x in [-3.0, -1.2, 0.0, 0.7, 2.5] {
            let err = (spec.phi(x) - spec.series(x)).abs();
            let bound = 1.09 * (x * x / 4.0).exp() * tail_coeffs;
            assert!(err <= bound, "Q={big_q} x={x}: {err} > {bound}");
        }
    }
}

#[test]
fn derivative_series_examples() {
    let t = 0.5;
    // the automatic order controls the L2 tail only, so take a long expansion here
    let spec = ChaosSpec::exponential_with(t, 40).unwrap();
    for x in [-2.0, -0.3, 0.0, 1.1, 2.4] {
        let d1 = derivative_series(&spec, 1, x, DerivativeVariant::Plain);
        assert!((d1 - t * (t * x).exp()).abs() < 1e-10, "{x}: {d1}");
        let d2 = derivative_series(&spec, 2, x, DerivativeVariant::Plain);
        assert!((d2 - t * t * (t * x).exp()).abs() < 1e-10);
        assert!((spec.psi(x) - (d1 - spec.b(1))).abs() < 1e-10);
    }
    let h = ChaosSpec::hermite(3);
    assert_eq!(derivative_series(&h, 4, 0.8, DerivativeVariant::Plain), 0.0);
    // d/dx H_3 = 3 H_2
    let v = derivative_series(&h, 1, 0.8, DerivativeVariant::Plain);
    assert!((v - 3.0 * hermite_eval(2, 0.8)).abs() < 1e-13);
    let g = derivative_series(&h, 0, 0.8, DerivativeVariant::Generator);
    assert!((g + 3.0 * hermite_eval(3, 0.8)).abs() < 1e-13);
}

#[test]
fn polynomial_and_hermite_sum_agree() {
    let spec = ChaosSpec::hermite_sum(&[(2, 0.5), (3, -1.0), (0, 2.0)]);
    for x in [-1.5, 0.2, 2.0] {
        let want = 0.5 * hermite_eval(2, x) - hermite_eval(3, x) + 2.0;
        assert!((spec.phi(x) - want).abs() < 1e-12);
        assert!((spec.series(x) - want).abs() < 1e-12);
    }
    assert!((spec.b(2) - 1.0).abs() < 1e-14);
    assert!((spec.b(3) + 6.0).abs() < 1e-14);
}

#[test]
fn json_roundtrip() {
    for spec in [
        ChaosSpec::exponential(0.5).unwrap(),
        ChaosSpec::hermite(4),
        ChaosSpec::polynomial(vec![1.0, 0.0, 3.0]),
        ChaosSpec::tabulated(vec![1.0, 0.5, 0.25, 0.125]).unwrap(),
    ] {
        let s = serde_json::to_string(&spec).unwrap();
        let back: ChaosSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}

#[test]
fn indicator_is_never_certified() {
    let spec = ChaosSpec::indicator(0.5, 40);
    assert!(!spec.tail_certified());
    let rep = check_assumption(&spec);
    assert!(!rep.supported && !rep.passed);
    assert!(check_assumption(&ChaosSpec::hermite(3)).notes.iter().any(|n| n.contains("b_2")));
    assert!(check_assumption(&ChaosSpec::exponential(0.5).unwrap()).passed);
}

proptest! {
    #[test]
    fn hermite_matches_explicit_sum(q in 0u32..20, x in -3.0f64..3.0) {
        let mut s = 0.0;
        let mut scale = 0.0;
        for k in 0..=q / 2 {
            let term = (ln_fact(q) - ln_fact(k) - ln_fact(q - 2 * k) - k as f64 * 2f64.ln()).exp()
                * x.powi((q - 2 * k) as i32);
            s += if k % 2 == 0 { term } else { -term };
            scale += term.abs();
        }
        prop_assert!((hermite_eval(q, x) - s).abs() <= 1e-12 * scale.max(1.0));
        let mono: f64 = hermite_monomials(q).iter().map(|&(p, c)| c as f64 * x.powi(p as i32)).sum();
        prop_assert!((mono - s).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn series_reproduces_polynomials(a in prop::collection::vec(-2.0f64..2.0, 1..8), x in -3.0f64..3.0) {
        let spec = ChaosSpec::polynomial(a.clone());
        let direct: f64 = a.iter().enumerate().map(|(m, c)| c * x.powi(m as i32)).sum();
        prop_assert!((spec.series(x) - direct).abs() < 1e-9 * (1.0 + direct.abs()));
    }
}
