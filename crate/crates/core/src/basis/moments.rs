//! Moments of a single Gegenbauer polynomial over S^d and their large-ell behaviour.

use super::bessel::bessel_power_integral;
use super::gegenbauer::{geg, geg_all};
use super::quadrature::rule_for_degree;
use super::{n_f64, SphereDim};
use crate::error::{domain, Error, Result};

/// int_{S^d} G_{ell;d}(<x,y>)^q dx, exact up to rounding.
pub fn sphere_moment(d: u32, ell: u32, q: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    if q == 0 || ell == 0 {
        return Ok(s.mu_d);
    }
    let rule = rule_for_degree(d, q as usize * ell as usize)?;
    let alpha = s.alpha();
    let v = rule.integrate(|t| geg(alpha, ell, t).powi(q as i32));
    Ok(s.mu_dm1 * v)
}

/// The constant c_{q;d} governing int G^q at large ell.
pub fn asymptotic_constant(d: u32, q: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    if q < 2 {
        return domain(format!("asymptotic constant needs q >= 2, got {q}"));
    }
    if q == 2 {
        let fact: f64 = (1..d).map(|k| k as f64).product();
        return Ok(fact * s.mu_d / (4.0 * s.mu_dm1));
    }
    // the integrand decays like u^{(d-1)(1-q/2)}; even q needs absolute convergence
    if q % 2 == 0 && (d - 1) * (q - 2) <= 2 {
        return Err(Error::Divergent { d, q });
    }
    bessel_power_integral(d, q)
}

/// ell^d int G^q dx / (2 mu_{d-1}): tends to c_{q;d} for q >= 3.
pub fn asymptotic_constant_limit(d: u32, q: u32, ell: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    Ok((ell as f64).powi(d as i32) * sphere_moment(d, ell, q)? / (2.0 * s.mu_dm1))
}

/// Leading-order prediction for `sphere_moment(d, ell, q)`.
pub fn moment_asymptote(d: u32, q: u32, ell: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    if q < 2 {
        return domain(format!("moment asymptote needs q >= 2, got {q}"));
    }
    let l = ell as f64;
    if q == 2 {
        return Ok(2.0 * s.mu_dm1 * asymptotic_constant(d, 2)? / l.powi(d as i32 - 1));
    }
    if d == 2 && q == 4 {
        return Ok(12.0 * l.ln() / (std::f64::consts::PI * l * l));
    }
    Ok(2.0 * s.mu_dm1 * asymptotic_constant(d, q)? / l.powi(d as i32))
}

/// Max defect of int G(<x,z>) G(<z,y>) dz = (mu_d / n) G(<x,y>) over a grid of <x,y>.
///
/// The left side is a convolution, computed on Gegenbauer coefficients
/// obtained by quadrature projection.
pub fn reproducing_check(d: u32, ell: u32) -> Result<f64> {
    let s = SphereDim::new(d)?;
    let alpha = s.alpha();
    let jmax = 2 * ell as usize;
    let rule = rule_for_degree(d, ell as usize + jmax)?;
    // projection coefficients of G_ell onto G_0..G_{2 ell}
    let mut coef = vec![0.0; jmax + 1];
    let mut gj = vec![0.0; jmax + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        geg_all(alpha, t, &mut gj);
        let g = gj[ell as usize];
        for (c, &b) in coef.iter_mut().zip(&gj) {
            *c += w * g * b;
        }
    }
    for (j, c) in coef.iter_mut().enumerate() {
        *c *= n_f64(d, j as u32) * s.mu_dm1 / s.mu_d;
    }
    let target = s.mu_d / n_f64(d, ell);
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let t = -1.0 + i as f64 / 100.0;
        geg_all(alpha, t.clamp(-1.0, 1.0), &mut gj);
        let lhs: f64 = coef
            .iter()
            .enumerate()
            .map(|(j, &c)| c * c * s.mu_d / n_f64(d, j as u32) * gj[j])
            .sum();
        worst = worst.max((lhs - target * gj[ell as usize]).abs());
    }
    Ok(worst)
}
