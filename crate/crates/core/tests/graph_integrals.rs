use hsl::basis::{eigenspace_dim_f64, sphere_area, sphere_moment};
use hsl::graphs::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn four_point_grid_matches_reducer_on_series_parallel_graphs() {
    let cases: [[u32; 6]; 4] = [
        // (01, 02, 03, 12, 13, 23)
        [1, 1, 1, 1, 1, 0],
        [2, 0, 1, 1, 0, 2],
        [1, 2, 0, 1, 3, 1],
        [0, 1, 2, 2, 1, 0],
    ];
    for ell in [2u32, 4, 6] {
        for c in cases {
            let mut e = [[0u32; 4]; 4];
            let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
            for (&(a, b), &k) in pairs.iter().zip(&c) {
                e[a][b] = k;
                e[b][a] = k;
            }
            let rows: Vec<Vec<u32>> = e.iter().map(|r| r.to_vec()).collect();
            let spec = GraphIntegralSpec::from_matrix(2, ell, &rows).unwrap();
            assert!(spec.is_series_parallel());
            let exact = graph_integral(&spec).unwrap();
            let grid = four_point_s2(ell, &e).unwrap();
            let scale = sphere_area(2).powi(4) / (ell as f64).powi(3);
            assert!((exact - grid).abs() < 1e-10 * scale, "ell={ell} {c:?}: {exact} vs {grid}");
        }
    }
}

#[test]
fn four_point_grid_matches_monte_carlo_on_complete_graph() {
    for (ell, k) in [(1u32, 1u32), (2, 1), (2, 2)] {
        let mut e = [[k; 4]; 4];
        for (a, row) in e.iter_mut().enumerate() {
            row[a] = 0;
        }
        let rows: Vec<Vec<u32>> = e.iter().map(|r| r.to_vec()).collect();
        let spec = GraphIntegralSpec::from_matrix(2, ell, &rows).unwrap();
        let grid = four_point_s2(ell, &e).unwrap();
        let mc = mc_graph_integral(&spec, 400_000, 11).unwrap();
        assert!((grid - mc.estimate).abs() < 4.0 * mc.std_error, "ell={ell}: {grid} vs {} +- {}", mc.estimate, mc.std_error);
    }
}

#[test]
fn monte_carlo_examples() {
    let mu = sphere_area(2);
    let n = eigenspace_dim_f64(2, 8).unwrap();
    let spec = GraphIntegralSpec::new(2, 8, 2, &[(0, 1, 2)]).unwrap();
    let m = mc_graph_integral(&spec, 200_000, 3).unwrap();
    assert!((m.estimate - mu * mu / n).abs() < 3.0 * m.std_error);
    let n4 = eigenspace_dim_f64(2, 4).unwrap();
    let tri = GraphIntegralSpec::new(2, 4, 3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
    let m = mc_graph_integral(&tri, 400_000, 5).unwrap();
    assert!((m.estimate - mu.powi(3) / (n4 * n4)).abs() < 3.0 * m.std_error);
}

#[test]
fn spectral_and_monte_carlo_agree() {
    let graphs: Vec<(usize, Vec<(usize, usize, u32)>)> = vec![
        (3, vec![(0, 1, 2), (1, 2, 2), (0, 2, 1)]),
        (4, vec![(0, 1, 1), (1, 2, 2), (2, 3, 1), (0, 3, 2)]),
        (4, vec![(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1), (1, 3, 2)]),
        (4, vec![(0, 1, 3), (1, 2, 1), (1, 3, 1)]),
    ];
    for ell in [2u32, 4] {
        for (n, e) in &graphs {
            let spec = GraphIntegralSpec::new(2, ell, *n, e).unwrap();
            let exact = graph_integral(&spec).unwrap();
            let mc = mc_graph_integral(&spec, 1_000_000, 17).unwrap();
            assert!((exact - mc.estimate).abs() < 4.0 * mc.std_error, "ell={ell} {e:?}");
        }
    }
}

#[test]
fn four_cycle_closed_form() {
    for d in [2u32, 3] {
        for ell in [3u32, 8] {
            let mu = sphere_area(d);
            let n = eigenspace_dim_f64(d, ell).unwrap();
            let spec = GraphIntegralSpec::new(d, ell, 4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)]).unwrap();
            assert!(rel(graph_integral(&spec).unwrap(), mu.powi(4) / n.powi(3)) < 1e-11);
        }
    }
}

#[test]
fn disconnected_union_factorizes() {
    let a = GraphIntegralSpec::new(2, 6, 3, &[(0, 1, 2), (1, 2, 3)]).unwrap();
    let b = GraphIntegralSpec::new(2, 6, 2, &[(0, 1, 4)]).unwrap();
    let u = GraphIntegralSpec::new(2, 6, 5, &[(0, 1, 2), (1, 2, 3), (3, 4, 4)]).unwrap();
    let prod = graph_integral(&a).unwrap() * graph_integral(&b).unwrap();
    assert!(rel(graph_integral(&u).unwrap(), prod) < 1e-11);
}

#[test]
fn gamma_hat_composition() {
    let want = 9.0 / (4.0 * PI) * sphere_moment(2, 4, 3).unwrap();
    assert!(rel(gamma_hat(2, 4, 2).unwrap(), want) < 1e-14);
    for d in [2u32, 3, 5] {
        for ell in [1u32, 4, 9] {
            assert!((gamma_hat(d, ell, 1).unwrap() - 1.0).abs() < 1e-11);
        }
    }
}

#[test]
fn gaunt_c_without_chord_is_a_cycle() {
    let r = gaunt_identity_check(2, 8, GauntCase::C { p1: 2, p2: 2, p3: 0 }).unwrap();
    let cycle = GraphIntegralSpec::new(2, 8, 4, &[(0, 1, 1), (0, 3, 2), (1, 2, 2), (2, 3, 1)]).unwrap();
    assert!(rel(r.lhs, graph_integral(&cycle).unwrap()) < 1e-13);
}

fn sp_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u32)>)> {
    // a random series-parallel graph: start from an edge and apply series/parallel growth
    (prop::collection::vec((0usize..10, 1u32..4, any::<bool>()), 1..4), 1u32..4).prop_map(|(ops, k0)| {
        let mut edges = vec![(0usize, 1usize, k0)];
        let mut n = 2;
        for (pick, k, series) in ops {
            let i = pick % edges.len();
            let (a, b, ke) = edges[i];
            if series {
                edges[i] = (a, n, ke);
                edges.push((n, b, k));
                n += 1;
            } else {
                edges.push((a, b, k));
            }
        }
        (n, edges)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduction_order_independence((n, edges) in sp_graph(), ell in 1u32..7, seed in any::<u64>()) {
        let spec = GraphIntegralSpec::new(2, ell, n, &edges).unwrap();
        let a = reduce(&spec, ReductionOrder::Lowest).unwrap().value;
        let b = reduce(&spec, ReductionOrder::Highest).unwrap().value;
        let c = reduce(&spec, ReductionOrder::Shuffled(seed)).unwrap().value;
        let scale = sphere_area(2).powi(n as i32);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-6 * scale));
        prop_assert!((a - c).abs() <= 1e-10 * a.abs().max(1e-6 * scale));
    }

    #[test]
    fn resynthesis_matches_power(ell in 0u32..12, r in 1u32..5, t in -1.0f64..1.0) {
        let e = expand_power(2, ell, r).unwrap();
        let direct = hsl::basis::gegenbauer_eval(2, ell, t).unwrap().powi(r as i32);
        prop_assert!((e.eval(t) - direct).abs() < 1e-9);
    }
}
