use hsl::basis::quadrature::hermite_rule;
use hsl::chaos::hermite_eval;
use hsl::diagram::*;
use num::rational::BigRational;
use num::BigInt;
use proptest::prelude::*;

fn brute_force(q: &[u32]) -> Vec<Vec<u32>> {
    let n = q.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    let mut vals = vec![0u32; pairs.len()];
    loop {
        let mut rows = vec![0u32; n];
        for (&(i, j), &v) in pairs.iter().zip(&vals) {
            rows[i] += v;
            rows[j] += v;
        }
        if rows == q {
            out.push(vals.clone());
        }
        let mut p = 0;
        loop {
            if p == pairs.len() {
                return out;
            }
            vals[p] += 1;
            if vals[p] <= q[pairs[p].0].min(q[pairs[p].1]) {
                break;
            }
            vals[p] = 0;
            p += 1;
        }
    }
}

fn dfs_components(n: usize, edges: &[(usize, usize, u32)]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        let mut comp = Vec::new();
        seen[s] = true;
        while let Some(x) = stack.pop() {
            comp.push(x);
            for &(i, j, _) in edges {
                let y = if i == x { j } else if j == x { i } else { continue };
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        comp.sort();
        comps.push(comp);
    }
    comps
}

/// Equicorrelated triple Z_i = sqrt(rho) W + sqrt(1 - rho) e_i integrated by
/// tensor Gauss-Hermite quadrature.
#[test]
fn triple_moments_by_quadrature() {
    let rho: f64 = 0.4;
    let rule = hermite_rule(24).unwrap();
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let cov: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { rho }).collect()).collect();
    for q0 in 0..=4u32 {
        for q1 in 0..=4u32 {
            for q2 in 0..=4u32 {
                let q = [q0, q1, q2];
                let mut quad = 0.0;
                for (&w, &ww) in rule.nodes.iter().zip(&rule.weights) {
                    let mut prod = ww;
                    for &qi in &q {
                        prod *= rule.integrate(|e| hermite_eval(qi, a * w + b * e));
                    }
                    quad += prod;
                }
                let got = joint_hermite_moment(&q, &cov);
                assert!((got - quad).abs() < 1e-10 * (1.0 + quad.abs()), "{q:?}: {got} vs {quad}");
            }
        }
    }
}

#[test]
fn pair_moments_are_orthogonal() {
    for p in 0..=6u32 {
        for q in 0..=6u32 {
            let cov = vec![vec![1.0, 0.3], vec![0.3, 1.0]];
            let want = if p == q { (1..=p).map(|k| k as f64).product::<f64>() * 0.3f64.powi(p as i32) } else { 0.0 };
            assert!((joint_hermite_moment(&[p, q], &cov) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_rational_against_wick() {
    let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
    let entries = [r(1, 3), r(-2, 5), r(1, 7), r(3, 4), r(-1, 2), r(2, 9)];
    let mut cov = vec![vec![r(1, 1); 4]; 4];
    let mut e = entries.iter();
    for i in 0..4 {
        for j in i + 1..4 {
            let v = e.next().unwrap().clone();
            cov[i][j] = v.clone();
            cov[j][i] = v;
        }
    }
    for q in [[2u32, 2, 2, 2], [3, 1, 2, 4], [1, 1, 1, 1], [0, 3, 3, 2], [4, 4, 2, 2]] {
        assert_eq!(joint_hermite_moment(&q, &cov), wick_oracle(&q, &cov).unwrap(), "{q:?}");
    }
    assert!(wick_oracle(&[7u32, 7, 7, 7], &cov).is_err());
}

#[test]
fn graph_extraction_examples() {
    let k = DiagramIndex::from_matrix(vec![vec![0, 2, 0, 0], vec![2, 0, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 0]]);
    let g = extract_graph(&k);
    assert!(g.is_n);
    assert_eq!(g.n_components, 2);
    assert_eq!(g.r, 2);
    let k = DiagramIndex::from_matrix(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]);
    let g = extract_graph(&k);
    assert_eq!(g.n_components, 1);
    assert_eq!(g.is_tree_per_component, vec![false]);
    let b = spanning_tree_bound(2, 10, &k).unwrap();
    assert!((b - tree_bound_constant(2, 3, 1).unwrap() / 100.0).abs() < 1e-15 * b);
}

fn q_vec() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..5, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enumeration_is_complete_and_ordered(q in q_vec()) {
        let got: Vec<DiagramIndex> = enumerate_a(&q).collect();
        prop_assert!(got.iter().all(|k| k.is_valid() && k.row_targets == q));
        let uppers: Vec<Vec<u32>> = got.iter().map(|k| k.upper()).collect();
        prop_assert!(uppers.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(uppers, brute_force(&q));
    }

    #[test]
    fn components_agree_with_search(q in q_vec()) {
        for kappa in enumerate_a(&q) {
            let g = extract_graph(&kappa);
            let comps = dfs_components(g.n, &g.edges);
            prop_assert_eq!(g.n_components, comps.len());
            for c in &comps {
                prop_assert!(c.iter().all(|&x| g.component_of[x] == g.component_of[c[0]]));
                let edges = g.edges.iter().filter(|e| c.contains(&e.0)).count();
                prop_assert!(edges + 1 >= c.len());
            }
            if q.iter().all(|&x| x >= 1) {
                prop_assert!(g.n_components <= g.n / 2);
            }
        }
    }

    #[test]
    fn moments_match_wick_for_random_correlations(
        q in prop::collection::vec(0u32..5, 2..5),
        c in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let n = q.len();
        let mut cov = vec![vec![1.0; n]; n];
        let mut it = c.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().unwrap();
                cov[i][j] = v;
                cov[j][i] = v;
            }
        }
        let a = joint_hermite_moment(&q, &cov);
        let b = wick_oracle(&q, &cov).unwrap();
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{} vs {}", a, b);
    }
}
