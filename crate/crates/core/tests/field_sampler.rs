use hsl::accum::RunningStats;
use hsl::basis::{gegenbauer_eval, sphere_area};
use hsl::field::*;
use std::sync::Arc;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn synthesis_reproduces_the_covariance_kernel() {
    // sum over basis fields T_m(x) T_m(y) must equal G(<x,y>) exactly
    for ell in [0u32, 1, 5, 16] {
        let grid = Arc::new(SphereGrid::gauss_s2(ell, 1).unwrap());
        let h = HarmonicSampler::new(ell, grid.clone()).unwrap();
        let k = 2 * ell as usize + 1;
        let basis: Vec<Vec<f64>> = (0..k)
            .map(|m| {
                let mut a = vec![0.0; k];
                a[m] = 1.0;
                h.synthesize(&a)
            })
            .collect();
        for (i, j) in [(0usize, 0usize), (3, 17), (5, grid.len() - 1), (grid.len() / 2, 1)] {
            let i = i % grid.len();
            let j = j % grid.len();
            let cov: f64 = basis.iter().map(|b| b[i] * b[j]).sum();
            let t = dot(grid.point(i), grid.point(j)).clamp(-1.0, 1.0);
            assert!((cov - gegenbauer_eval(2, ell, t).unwrap()).abs() < 1e-12, "ell={ell}");
        }
    }
}

#[test]
fn zero_degree_is_a_constant_normal() {
    let grid = Arc::new(SphereGrid::gauss_s2(0, 2).unwrap());
    let r = sample_field(2, 0, grid, 9).unwrap();
    assert!(r.values.iter().all(|v| (v - r.coeffs[0]).abs() < 1e-14));
}

#[test]
fn unit_variance_and_covariance_by_monte_carlo() {
    let ell = 6;
    let grid = Arc::new(SphereGrid::gauss_s2(ell, 1).unwrap());
    let s = FieldSampler::new(2, ell, grid.clone()).unwrap();
    let reps = 10_000;
    let pairs = [(0usize, 1usize), (4, 40), (10, 77), (20, 55), (3, 90)];
    let mut var = RunningStats::default();
    let mut prods = vec![RunningStats::default(); pairs.len()];
    for r in 0..reps {
        let f = s.sample(123, r);
        var.push(f.values[7] * f.values[7]);
        for (acc, &(i, j)) in prods.iter_mut().zip(&pairs) {
            acc.push(f.values[i] * f.values[j]);
        }
    }
    let tol = 3.0 * (2.0 / reps as f64).sqrt();
    assert!((var.mean - 1.0).abs() < tol, "{}", var.mean);
    for (acc, &(i, j)) in prods.iter().zip(&pairs) {
        let t = dot(grid.point(i), grid.point(j));
        let g = gegenbauer_eval(2, ell, t.clamp(-1.0, 1.0)).unwrap();
        assert!((acc.mean - g).abs() < 3.5 * acc.std_error(), "pair {i},{j}");
    }
}

#[test]
fn backends_agree_on_shared_nodes() {
    let ell = 8;
    let grid = Arc::new(SphereGrid::gauss_s2(ell, 1).unwrap());
    let idx: Vec<usize> = (0..grid.len()).step_by(grid.len() / 60).take(60).collect();
    let sub = Arc::new(grid.subset(&idx).unwrap());
    let h = FieldSampler::new(2, ell, grid.clone()).unwrap();
    let c = FieldSampler::new(2, ell, sub).unwrap();
    assert!(matches!(c, FieldSampler::Cholesky(_)));
    let reps = 10_000;
    let mut hm = vec![RunningStats::default(); idx.len()];
    let mut cm = vec![RunningStats::default(); idx.len()];
    let mut hv = vec![RunningStats::default(); idx.len()];
    let mut cv = vec![RunningStats::default(); idx.len()];
    for r in 0..reps {
        let a = h.sample(5, r);
        let b = c.sample(6, r);
        for (k, &i) in idx.iter().enumerate() {
            hm[k].push(a.values[i]);
            hv[k].push(a.values[i] * a.values[i]);
            cm[k].push(b.values[k]);
            cv[k].push(b.values[k] * b.values[k]);
        }
    }
    for k in 0..idx.len() {
        let se = (hm[k].std_error().powi(2) + cm[k].std_error().powi(2)).sqrt();
        assert!((hm[k].mean - cm[k].mean).abs() < 4.0 * se);
        let se = (hv[k].std_error().powi(2) + cv[k].std_error().powi(2)).sqrt();
        assert!((hv[k].mean - cv[k].mean).abs() < 4.0 * se);
    }
}

#[test]
fn realizations_are_deterministic() {
    let grid = Arc::new(SphereGrid::gauss_s2(10, 1).unwrap());
    let s = FieldSampler::new(2, 10, grid).unwrap();
    assert_eq!(s.sample(1, 4).values, s.sample(1, 4).values);
    assert_ne!(s.sample(1, 4).values, s.sample(1, 5).values);
}

#[test]
fn projection_of_the_field_itself() {
    let ell = 12;
    let grid = Arc::new(SphereGrid::gauss_s2(ell, 2).unwrap());
    let f = sample_field(2, ell, grid.clone(), 77).unwrap();
    let mu = sphere_area(2);
    let n = (2 * ell + 1) as f64;
    let energy = sh_project(&f, |x| x, ell).unwrap();
    let from_coeffs = mu / n * f.coeffs.iter().map(|a| a * a).sum::<f64>();
    assert!((energy - from_coeffs).abs() < 1e-8 * from_coeffs);
    // dense double quadrature of T(x) T(z) G(<x,z>)
    let mut dense = 0.0;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            let t = dot(grid.point(i), grid.point(j)).clamp(-1.0, 1.0);
            dense += grid.weights[i] * grid.weights[j] * f.values[i] * f.values[j] * gegenbauer_eval(2, ell, t).unwrap();
        }
    }
    assert!((dense - mu / n * energy).abs() < 1e-8 * dense.abs());
    assert!(sh_project(&f, |_| 1.0, ell).unwrap() < 1e-20);
    for other in [ell - 2, ell + 1, ell + 4] {
        assert!(sh_project(&f, |x| x, other).unwrap() < 1e-6 * energy);
    }
}

#[test]
fn general_dimension_backend() {
    let grid = Arc::new(SphereGrid::product(3, 6).unwrap());
    assert!(grid.len() <= MAX_DENSE_NODES);
    let s = FieldSampler::new(3, 3, grid.clone()).unwrap();
    let mut acc = RunningStats::default();
    for r in 0..4000 {
        let f = s.sample(2, r);
        acc.push(f.values[11] * f.values[11]);
    }
    assert!((acc.mean - 1.0).abs() < 3.0 * (2.0f64 / 4000.0).sqrt());
    let big = Arc::new(SphereGrid::product(4, 20).unwrap());
    assert!(FieldSampler::new(4, 5, big).is_err());
}

#[test]
fn binary_export() {
    let grid = Arc::new(SphereGrid::gauss_s2(4, 1).unwrap());
    let s = FieldSampler::new(2, 4, grid).unwrap();
    let reals: Vec<_> = (0..3).map(|r| s.sample(8, r)).collect();
    let dir = std::env::temp_dir().join(format!("hsl-export-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("field.bin");
    export_realizations(&path, &reals).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 3 * reals[0].values.len() * 8);
    let first = f64::from_le_bytes(bytes[..8].try_into().unwrap());
    assert_eq!(first, reals[0].values[0]);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("field.bin.json")).unwrap()).unwrap();
    assert_eq!(side["ell"], 4);
    assert_eq!(side["rows"], 3);
    std::fs::remove_dir_all(dir).ok();
}
