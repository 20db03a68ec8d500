//! Gauss rules built from three-term recurrences.
//!
//! Nodes are eigenvalues of the Jacobi matrix (implicit QL), polished by
//! Newton steps on the orthonormal recurrence; weights come from the
//! Christoffel function 1 / sum_k p_k(t)^2.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use super::sphere_area;
use crate::error::{domain, Error, Result};

/// Largest Gauss rule the library will build.
pub const NODE_BUDGET: usize = 8192;
const HERMITE_MAX_NODES: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeightKind {
    /// (1-t^2)^{(d-2)/2} on [-1,1]: the line measure of S^d.
    Sphere(u32),
    /// Standard normal density on R.
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureRule1D {
    pub kind: WeightKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub exact_degree: usize,
}

/// Eigenvalues of a symmetric tridiagonal matrix, in place.
///
/// `diag` has length n, `off[i]` couples rows i and i+1 (length n, last unused).
pub(crate) fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd || off[m].abs() < f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::NonConvergence("tridiagonal QL iteration".into()));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

/// Symmetric weight with zero diagonal recurrence: s[k] = sqrt(beta_k), k >= 1.
struct Recurrence {
    s: Vec<f64>,
    m0: f64,
}

impl Recurrence {
    /// Orthonormal p_n(t) and p_n'(t), plus sum_{k<n} p_k(t)^2.
    fn eval(&self, n: usize, t: f64) -> (f64, f64, f64) {
        let mut p0 = 0.0;
        let mut p1 = 1.0 / self.m0.sqrt();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        let mut sum = 0.0;
        for k in 0..n {
            sum += p1 * p1;
            let sk = if k == 0 { 0.0 } else { self.s[k] };
            let p2 = (t * p1 - sk * p0) / self.s[k + 1];
            let d2 = (p1 + t * d1 - sk * d0) / self.s[k + 1];
            p0 = p1;
            p1 = p2;
            d0 = d1;
            d1 = d2;
        }
        (p1, d1, sum)
    }

    fn rule(&self, n: usize, kind: WeightKind) -> Result<QuadratureRule1D> {
        let mut diag = vec![0.0; n];
        let mut off: Vec<f64> = (0..n).map(|k| if k + 1 < n { self.s[k + 1] } else { 0.0 }).collect();
        tridiagonal_eigenvalues(&mut diag, &mut off)?;
        diag.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &t0 in &diag {
            let mut t = t0;
            for _ in 0..12 {
                let (p, dp, _) = self.eval(n, t);
                let step = p / dp;
                t -= step;
                if step.abs() <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                    break;
                }
            }
            let (_, _, sum) = self.eval(n, t);
            nodes.push(t);
            weights.push(1.0 / sum);
        }
        // the weight is even: enforce exact mirror symmetry
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let t = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -t;
            nodes[j] = t;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(QuadratureRule1D { kind, nodes, weights, exact_degree: 2 * n - 1 })
    }
}

impl QuadratureRule1D {
    /// n-point Gauss rule for the weight (1-t^2)^{(d-2)/2}; d = 1 gives Gauss-Chebyshev.
    pub fn gegenbauer(d: u32, n: usize) -> Result<Self> {
        if d < 1 {
            return domain("weight dimension must be >= 1");
        }
        if n == 0 {
            return domain("rule needs at least one node");
        }
        if n > NODE_BUDGET {
            return Err(Error::QuadratureBudget { needed: n, budget: NODE_BUDGET });
        }
        let kind = WeightKind::Sphere(d);
        if d == 1 {
            let nodes: Vec<f64> = (0..n)
                .map(|i| -((2 * i + 1) as f64 * PI / (2 * n) as f64).cos())
                .collect();
            let weights = vec![PI / n as f64; n];
            return Ok(QuadratureRule1D { kind, nodes, weights, exact_degree: 2 * n - 1 });
        }
        let alpha = (d as f64 - 1.0) / 2.0;
        let s = (0..=n)
            .map(|k| {
                if k == 0 {
                    return 0.0;
                }
                let kf = k as f64;
                (kf * (kf + 2.0 * alpha - 1.0) / (4.0 * (kf + alpha) * (kf + alpha - 1.0))).sqrt()
            })
            .collect();
        let m0 = sphere_area(d) / sphere_area(d - 1);
        Recurrence { s, m0 }.rule(n, kind)
    }

    /// n-point Gauss-Hermite rule for the standard normal density (weights sum to 1).
    pub fn hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("rule needs at least one node");
        }
        if n > HERMITE_MAX_NODES {
            return Err(Error::QuadratureBudget { needed: n, budget: HERMITE_MAX_NODES });
        }
        let s = (0..=n).map(|k| (k as f64).sqrt()).collect();
        Recurrence { s, m0: 1.0 }.rule(n, WeightKind::Gaussian)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// CSV with header `node,weight`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "node,weight")?;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            writeln!(out, "{t:.17e},{w:.17e}")?;
        }
        Ok(())
    }
}

type Cache = Mutex<HashMap<(WeightKind, usize), Arc<QuadratureRule1D>>>;

fn cache() -> &'static Cache {
    static C: OnceLock<Cache> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(kind: WeightKind, n: usize) -> Result<Arc<QuadratureRule1D>> {
    if let Some(r) = cache().lock().unwrap().get(&(kind, n)) {
        return Ok(r.clone());
    }
    let rule = Arc::new(match kind {
        WeightKind::Sphere(d) => QuadratureRule1D::gegenbauer(d, n)?,
        WeightKind::Gaussian => QuadratureRule1D::hermite(n)?,
    });
    cache().lock().unwrap().insert((kind, n), rule.clone());
    Ok(rule)
}

/// Shared n-point rule for the line measure of S^d.
pub fn gegenbauer_rule(d: u32, n: usize) -> Result<Arc<QuadratureRule1D>> {
    cached(WeightKind::Sphere(d), n)
}

/// Shared n-point Gauss-Hermite rule.
pub fn hermite_rule(n: usize) -> Result<Arc<QuadratureRule1D>> {
    cached(WeightKind::Gaussian, n)
}

/// Node count used for polynomial integrands of the given degree (with a safety margin).
pub fn nodes_for_degree(degree: usize) -> usize {
    (degree + 2).div_ceil(2) + 5
}

/// Rule for the line measure of S^d exact for polynomials of degree `degree`.
pub fn rule_for_degree(d: u32, degree: usize) -> Result<Arc<QuadratureRule1D>> {
    let n = nodes_for_degree(degree);
    if n > NODE_BUDGET {
        return Err(Error::QuadratureBudget { needed: n, budget: NODE_BUDGET });
    }
    gegenbauer_rule(d, n)
}

/// Gauss-Legendre nodes and weights mapped to [a, b].
pub fn legendre_on(a: f64, b: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    let r = gegenbauer_rule(2, n)?;
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    Ok(r.nodes.iter().zip(&r.weights).map(|(&t, &w)| (c + h * t, h * w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_small() {
        let r = QuadratureRule1D::gegenbauer(2, 2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14);
        let r = QuadratureRule1D::gegenbauer(2, 3).unwrap();
        assert!((r.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_small() {
        let r = QuadratureRule1D::hermite(3).unwrap();
        assert!((r.nodes[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!((r.weights[1] - 2.0 / 3.0).abs() < 1e-14);
        let r = QuadratureRule1D::hermite(40).unwrap();
        // E[Z^8] = 105
        assert!((r.integrate(|x| x.powi(8)) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn tridiagonal_known() {
        // path graph Laplacian-like: eigenvalues 2cos(k pi/(n+1))
        let n = 7;
        let mut d = vec![0.0; n];
        let mut e = vec![1.0; n];
        tridiagonal_eigenvalues(&mut d, &mut e).unwrap();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, v) in d.iter().enumerate() {
            let want = -2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            assert!((v - want).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_export() {
        let r = QuadratureRule1D::gegenbauer(3, 4).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("node,weight\n"));
        assert_eq!(s.lines().count(), 5);
    }

    #[test]
    fn budget() {
        assert!(matches!(rule_for_degree(2, 40_000), Err(Error::QuadratureBudget { .. })));
    }
}
