use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::basis::gegenbauer::{geg, geg_all};
use crate::basis::quadrature::rule_for_degree;
use crate::basis::{n_f64, sphere_moment, SphereDim};
use crate::error::Result;

/// f(<x,y>) = sum_j c_j G_{j;d}(<x,y>).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEdge {
    pub d: u32,
    pub coeffs: Vec<f64>,
}

impl SpectralEdge {
    pub fn constant(d: u32, c: f64) -> Self {
        SpectralEdge { d, coeffs: vec![c] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let alpha = (self.d as f64 - 1.0) / 2.0;
        let mut g = vec![0.0; self.coeffs.len()];
        geg_all(alpha, t, &mut g);
        self.coeffs.iter().zip(&g).map(|(c, g)| c * g).sum()
    }

    /// Project a function of degree at most `degree` onto G_0..G_degree.
    pub fn from_fn(d: u32, degree: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let s = SphereDim::new(d)?;
        let alpha = s.alpha();
        let rule = rule_for_degree(d, 2 * degree)?;
        let mut c = vec![0.0; degree + 1];
        let mut g = vec![0.0; degree + 1];
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = w * f(t);
            geg_all(alpha, t, &mut g);
            for (cj, gj) in c.iter_mut().zip(&g) {
                *cj += v * gj;
            }
        }
        for (j, cj) in c.iter_mut().enumerate() {
            *cj *= n_f64(d, j as u32) * s.mu_dm1 / s.mu_d;
        }
        let mut e = SpectralEdge { d, coeffs: c };
        e.trim(1e-14 * e.max_abs());
        Ok(e)
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Zero entries below `tol` and drop the vanishing tail.
    pub fn trim(&mut self, tol: f64) {
        for c in self.coeffs.iter_mut() {
            if c.abs() < tol {
                *c = 0.0;
            }
        }
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
    }

    /// Pointwise product, re-expanded by quadrature.
    pub fn product(&self, other: &SpectralEdge) -> Result<SpectralEdge> {
        if self.is_zero() || other.is_zero() {
            return Ok(SpectralEdge::constant(self.d, 0.0));
        }
        if self.coeffs.len() == 1 {
            return Ok(other.scaled(self.coeffs[0]));
        }
        if other.coeffs.len() == 1 {
            return Ok(self.scaled(other.coeffs[0]));
        }
        let deg = self.degree() + other.degree();
        let alpha = (self.d as f64 - 1.0) / 2.0;
        let mut g = vec![0.0; deg + 1];
        let s = SphereDim::new(self.d)?;
        let rule = rule_for_degree(self.d, 2 * deg)?;
        let mut c = vec![0.0; deg + 1];
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            geg_all(alpha, t, &mut g);
            let fa: f64 = self.coeffs.iter().zip(&g).map(|(a, b)| a * b).sum();
            let fb: f64 = other.coeffs.iter().zip(&g).map(|(a, b)| a * b).sum();
            let v = w * fa * fb;
            for (cj, gj) in c.iter_mut().zip(&g) {
                *cj += v * gj;
            }
        }
        for (j, cj) in c.iter_mut().enumerate() {
            *cj *= n_f64(self.d, j as u32) * s.mu_dm1 / s.mu_d;
        }
        let mut e = SpectralEdge { d: self.d, coeffs: c };
        e.trim(1e-14 * e.max_abs());
        Ok(e)
    }

    pub fn scaled(&self, a: f64) -> SpectralEdge {
        SpectralEdge { d: self.d, coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// int f(<x,z>) g(<z,y>) dz: coefficient-wise with factor mu_d / n_j.
    pub fn convolve(&self, other: &SpectralEdge) -> SpectralEdge {
        let mu = crate::basis::sphere_area(self.d);
        let len = self.coeffs.len().min(other.coeffs.len());
        let coeffs = (0..len)
            .map(|j| self.coeffs[j] * other.coeffs[j] * mu / n_f64(self.d, j as u32))
            .collect();
        let mut e = SpectralEdge { d: self.d, coeffs };
        e.trim(0.0);
        e
    }
}

fn power_cache() -> &'static Mutex<HashMap<(u32, u32, u32), Arc<SpectralEdge>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32, u32), Arc<SpectralEdge>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients gamma_{j,ell;r} of G_ell^r in the Gegenbauer basis.
pub fn expand_power(d: u32, ell: u32, r: u32) -> Result<Arc<SpectralEdge>> {
    if let Some(e) = power_cache().lock().unwrap().get(&(d, ell, r)) {
        return Ok(e.clone());
    }
    let s = SphereDim::new(d)?;
    let alpha = s.alpha();
    let deg = (r * ell) as usize;
    let rule = rule_for_degree(d, deg + deg.max(ell as usize))?;
    let mut c = vec![0.0; deg + 1];
    let mut g = vec![0.0; deg + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        geg_all(alpha, t, &mut g);
        let v = w * geg(alpha, ell, t).powi(r as i32);
        for (cj, gj) in c.iter_mut().zip(&g) {
            *cj += v * gj;
        }
    }
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= n_f64(d, j as u32) * s.mu_dm1 / s.mu_d;
    }
    let mut e = SpectralEdge { d, coeffs: c };
    e.trim(1e-14);
    let e = Arc::new(e);
    power_cache().lock().unwrap().insert((d, ell, r), e.clone());
    Ok(e)
}

/// gamma-hat_{ell;r} = (n_{ell;d} / mu_d) int G^{r+1} dx.
pub fn gamma_hat(d: u32, ell: u32, r: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    Ok(n_f64(d, ell) / s.mu_d * sphere_moment(d, ell, r + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_power_is_delta() {
        let e = expand_power(3, 5, 1).unwrap();
        for (j, c) in e.coeffs.iter().enumerate() {
            let want = if j == 5 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-12);
        }
    }

    #[test]
    fn square_of_p2() {
        // P_2^2 = 1/5 + (2/7) P_2 + (18/35) P_4
        let e = expand_power(2, 2, 2).unwrap();
        let want = [0.2, 0.0, 2.0 / 7.0, 0.0, 18.0 / 35.0];
        assert_eq!(e.coeffs.len(), 5);
        for (c, w) in e.coeffs.iter().zip(want) {
            assert!((c - w).abs() < 1e-14);
        }
        let e = expand_power(4, 7, 2).unwrap();
        assert!((e.coeffs[0] - 1.0 / n_f64(4, 7)).abs() < 1e-14);
    }

    #[test]
    fn gamma_hat_values() {
        assert!((gamma_hat(2, 6, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(gamma_hat(3, 4, 0).unwrap().abs() < 1e-13);
    }

    #[test]
    fn product_resynthesis() {
        let a = expand_power(2, 3, 2).unwrap();
        let b = expand_power(2, 4, 1).unwrap();
        let p = a.product(&b).unwrap();
        for i in 0..=20 {
            let t = -1.0 + 0.1 * i as f64;
            assert!((p.eval(t) - a.eval(t) * b.eval(t)).abs() < 1e-12);
        }
    }
}
