//! Gegenbauer polynomials G_{ell;d} normalized so that G_{ell;d}(1) = 1.
//!
//! With alpha = (d-1)/2 the normalized three-term recurrence reads
//! (n + 2 alpha) g_{n+1} = 2 (n + alpha) t g_n - n g_{n-1},
//! which keeps every iterate bounded by 1 on [-1,1].

use crate::error::{domain, Result};

#[inline]
pub(crate) fn geg(alpha: f64, ell: u32, t: f64) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let (mut g0, mut g1) = (1.0, t);
    for n in 1..ell {
        let nf = n as f64;
        let g2 = (2.0 * (nf + alpha) * t * g1 - nf * g0) / (nf + 2.0 * alpha);
        g0 = g1;
        g1 = g2;
    }
    g1
}

/// Fill `out[j] = G_{j;d}(t)` for j = 0..out.len().
#[inline]
pub(crate) fn geg_all(alpha: f64, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = t;
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        out[n + 1] = (2.0 * (nf + alpha) * t * out[n] - nf * out[n - 1]) / (nf + 2.0 * alpha);
    }
}

fn check(d: u32, t: f64) -> Result<f64> {
    if d < 2 {
        return domain(format!("sphere dimension must be >= 2, got {d}"));
    }
    if !(t.abs() <= 1.0) {
        return domain(format!("argument {t} outside [-1,1]"));
    }
    Ok((d as f64 - 1.0) / 2.0)
}

/// G_{ell;d}(t); equals the Legendre polynomial P_ell(t) when d = 2.
pub fn gegenbauer_eval(d: u32, ell: u32, t: f64) -> Result<f64> {
    let alpha = check(d, t)?;
    Ok(geg(alpha, ell, t))
}

/// G_{j;d}(t) for all j = 0..=max_degree.
pub fn gegenbauer_all(d: u32, max_degree: u32, t: f64) -> Result<Vec<f64>> {
    let alpha = check(d, t)?;
    let mut out = vec![0.0; max_degree as usize + 1];
    geg_all(alpha, t, &mut out);
    Ok(out)
}
