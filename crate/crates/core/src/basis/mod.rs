//! Sphere constants, Gegenbauer polynomials, weighted Gauss rules and
//! single-polynomial moments on S^d.

pub mod bessel;
pub mod gegenbauer;
pub mod moments;
pub mod quadrature;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

pub use gegenbauer::{gegenbauer_all, gegenbauer_eval};
pub use moments::{asymptotic_constant, moment_asymptote, reproducing_check, sphere_moment};
pub use quadrature::QuadratureRule1D;

/// Surface measure of the unit sphere S^k embedded in R^{k+1}.
///
/// Uses mu_0 = 2, mu_1 = 2pi and mu_k = 2pi/(k-1) mu_{k-2}.
pub fn sphere_area(k: u32) -> f64 {
    let (mut m, start) = if k % 2 == 0 { (2.0, 0) } else { (2.0 * PI, 1) };
    let mut j = start;
    while j < k {
        j += 2;
        m *= 2.0 * PI / (j as f64 - 1.0);
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereDim {
    pub d: u32,
    pub mu_d: f64,
    pub mu_dm1: f64,
}

impl SphereDim {
    pub fn new(d: u32) -> Result<Self> {
        if d < 2 {
            return domain(format!("sphere dimension must be >= 2, got {d}"));
        }
        Ok(SphereDim { d, mu_d: sphere_area(d), mu_dm1: sphere_area(d - 1) })
    }

    /// Gegenbauer parameter alpha = (d-1)/2.
    pub fn alpha(&self) -> f64 {
        (self.d as f64 - 1.0) / 2.0
    }

    /// Total mass of the line weight (1-t^2)^{(d-2)/2} on [-1,1].
    pub fn line_mass(&self) -> f64 {
        self.mu_d / self.mu_dm1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenIndex {
    pub ell: u32,
    pub d: u32,
    pub n_ell_d: u128,
    pub lambda: u64,
}

impl EigenIndex {
    pub fn new(d: u32, ell: u32) -> Result<Self> {
        let n_ell_d = eigenspace_dim(d, ell)?;
        let lambda = ell as u64 * (ell as u64 + d as u64 - 1);
        Ok(EigenIndex { ell, d, n_ell_d, lambda })
    }
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        // c * (n - k + i) / i stays an integer at every step
        let num = n as u128 - k as u128 + i;
        let g = gcd(c, i);
        let (c1, i1) = (c / g, i / g);
        let num1 = num / i1;
        c = c1.checked_mul(num1)?;
    }
    Some(c)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Dimension n_{ell;d} of the degree-ell eigenspace on S^d.
pub fn eigenspace_dim(d: u32, ell: u32) -> Result<u128> {
    if d < 2 {
        return domain(format!("sphere dimension must be >= 2, got {d}"));
    }
    if ell == 0 {
        return Ok(1);
    }
    let (l, dd) = (ell as u64, d as u64);
    let overflow = || Error::Domain(format!("n_(ell;d) overflows for d={d}, ell={ell}"));
    let c = binomial_u128(l + dd - 2, dd - 1).ok_or_else(overflow)?;
    let top = c.checked_mul((2 * l + dd - 1) as u128).ok_or_else(overflow)?;
    Ok(top / l as u128)
}

/// Same as [`eigenspace_dim`] as a float, for use in formulas.
pub fn eigenspace_dim_f64(d: u32, ell: u32) -> Result<f64> {
    eigenspace_dim(d, ell).map(|n| n as f64)
}

pub(crate) fn n_f64(d: u32, ell: u32) -> f64 {
    eigenspace_dim(d, ell).expect("d >= 2 checked by caller") as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn areas() {
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert_eq!(sphere_area(0), 2.0);
    }

    #[test]
    fn dims() {
        assert_eq!(eigenspace_dim(2, 3).unwrap(), 7);
        assert_eq!(eigenspace_dim(2, 0).unwrap(), 1);
        assert_eq!(eigenspace_dim(3, 1).unwrap(), 4);
        assert_eq!(eigenspace_dim(3, 2).unwrap(), 9);
        assert!(eigenspace_dim(1, 2).is_err());
        // d=10, ell=10^4 fits
        assert!(eigenspace_dim(10, 10_000).is_ok());
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial_u128(5, 2), Some(10));
        assert_eq!(binomial_u128(10, 0), Some(1));
        assert_eq!(binomial_u128(52, 5), Some(2_598_960));
    }
}
