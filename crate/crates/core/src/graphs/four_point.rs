//! Exact contraction of 4-node Legendre graph integrals on S^2.
//!
//! Node 3 is rotated to the pole and node 0 to azimuth zero. The remaining
//! integrand is a trigonometric polynomial in the two free azimuths, so the
//! azimuthal double integral collapses to a sum over Fourier modes of the
//! three edges among nodes 0, 1, 2. The polar variables are handled by
//! Gauss-Legendre rules that are exact for the polynomial degree in each.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use crate::basis::gegenbauer::geg;
use crate::basis::quadrature::legendre_on;
use crate::error::{Error, Result};

/// Work limit on (polar nodes)^3 x (Fourier modes).
pub const FOUR_POINT_BUDGET: f64 = 4e9;

fn legendre_pow(ell: u32, e: u32, t: f64) -> f64 {
    if e == 0 {
        1.0
    } else {
        geg(0.5, ell, t.clamp(-1.0, 1.0)).powi(e as i32)
    }
}

/// Fourier modes 0..=k of phi -> P(t_a t_b + s_a s_b cos phi)^e for every node pair.
fn mode_table(
    ell: u32,
    e: u32,
    ra: &[(f64, f64)],
    rb: &[(f64, f64)],
    nfft: usize,
    k: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; ra.len() * rb.len() * (k + 1)];
    if e == 0 {
        for c in out.chunks_mut(k + 1) {
            c[0] = 1.0;
        }
        return out;
    }
    let cosines: Vec<f64> = (0..nfft).map(|n| (2.0 * PI * n as f64 / nfft as f64).cos()).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nfft);
    let mut buf = vec![Complex::new(0.0, 0.0); rb.len() * nfft];
    for (i, &(ta, _)) in ra.iter().enumerate() {
        let sa = (1.0 - ta * ta).max(0.0).sqrt();
        for (j, &(tb, _)) in rb.iter().enumerate() {
            let sb = (1.0 - tb * tb).max(0.0).sqrt();
            for (n, c) in cosines.iter().enumerate() {
                buf[j * nfft + n] = Complex::new(legendre_pow(ell, e, ta * tb + sa * sb * c), 0.0);
            }
        }
        fft.process(&mut buf);
        for j in 0..rb.len() {
            let dst = &mut out[(i * rb.len() + j) * (k + 1)..(i * rb.len() + j + 1) * (k + 1)];
            for (p, v) in dst.iter_mut().enumerate() {
                *v = buf[j * nfft + p].re / nfft as f64;
            }
        }
    }
    out
}

/// int over (S^2)^4 of prod_{a<b} P_ell(<x_a,x_b>)^{e[a][b]}, exact up to rounding.
pub fn four_point_s2(ell: u32, e: &[[u32; 4]; 4]) -> Result<f64> {
    let l = ell as usize;
    let deg = |a: usize| -> usize { (0..4).filter(|&b| b != a).map(|b| l * e[a][b] as usize).sum() };
    let rules: Vec<Vec<(f64, f64)>> = (0..3).map(|a| legendre_on(-1.0, 1.0, deg(a) / 2 + 1)).collect::<Result<_>>()?;
    let (d01, d02, d12) = (l * e[0][1] as usize, l * e[0][2] as usize, l * e[1][2] as usize);
    let k = d01.min(d02).min(d12);
    let nfft = d01.max(d02).max(d12) + k + 1;
    let work = rules.iter().map(|r| r.len() as f64).product::<f64>() * (k + 1) as f64;
    if work > FOUR_POINT_BUDGET {
        return Err(Error::QuadratureBudget { needed: work as usize, budget: FOUR_POINT_BUDGET as usize });
    }
    let a01 = mode_table(ell, e[0][1], &rules[0], &rules[1], nfft, k);
    let a02 = mode_table(ell, e[0][2], &rules[0], &rules[2], nfft, k);
    let a12 = mode_table(ell, e[1][2], &rules[1], &rules[2], nfft, k);
    let pole: Vec<Vec<f64>> = (0..3)
        .map(|a| rules[a].iter().map(|&(t, w)| w * legendre_pow(ell, e[a][3], t)).collect())
        .collect();
    let (n0, n1, n2) = (rules[0].len(), rules[1].len(), rules[2].len());
    let kk = k + 1;
    let mut total = 0.0;
    for i0 in 0..n0 {
        let w0 = pole[0][i0];
        if w0 == 0.0 {
            continue;
        }
        for i1 in 0..n1 {
            let w01 = w0 * pole[1][i1];
            let ra = &a01[(i0 * n1 + i1) * kk..(i0 * n1 + i1 + 1) * kk];
            let mut inner = 0.0;
            for i2 in 0..n2 {
                let rb = &a02[(i0 * n2 + i2) * kk..(i0 * n2 + i2 + 1) * kk];
                let rc = &a12[(i1 * n2 + i2) * kk..(i1 * n2 + i2 + 1) * kk];
                let mut s = ra[0] * rb[0] * rc[0];
                for p in 1..kk {
                    s += 2.0 * ra[p] * rb[p] * rc[p];
                }
                inner += pole[2][i2] * s;
            }
            total += w01 * inner;
        }
    }
    // pole placement, azimuth of node 0, and the two free azimuths
    Ok(4.0 * PI * 2.0 * PI * (2.0 * PI).powi(2) * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_edges() {
        let v = four_point_s2(3, &[[0; 4]; 4]).unwrap();
        assert!((v - (4.0 * PI).powi(4)).abs() < 1e-9);
    }
}
