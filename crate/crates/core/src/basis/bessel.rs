//! Reduced Bessel functions j_nu(u) = Gamma(nu+1) (2/u)^nu J_nu(u) for
//! half-integer nu >= 0, and the oscillatory integrals defining the
//! asymptotic moment constants.

use std::f64::consts::PI;

use super::quadrature::{gegenbauer_rule, legendre_on};
use crate::error::{Error, Result};

const SWITCH: f64 = 30.0;
const SMALL_NODES: usize = 72;

/// Gamma(nu + 1) for nu = nu2 / 2.
pub(crate) fn gamma_half_plus_one(nu2: u32) -> f64 {
    let (mut g, mut x) = if nu2 % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt() / 2.0, 1.5) };
    let target = nu2 as f64 / 2.0 + 1.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// j_nu(u) with nu = nu2/2. Equals 1 at u = 0.
///
/// For moderate u uses the Poisson integral
/// j_nu(u) = (1/m0) int cos(u t) (1-t^2)^{nu-1/2} dt,
/// beyond that the Hankel expansion.
pub fn reduced_bessel(nu2: u32, u: f64) -> f64 {
    let u = u.abs();
    if u <= SWITCH {
        // weight (1-t^2)^{nu-1/2} is the line measure of S^{nu2+1}
        let rule = gegenbauer_rule(nu2 + 1, SMALL_NODES).expect("small fixed rule");
        let m0: f64 = rule.weights.iter().sum();
        return rule.integrate(|t| (u * t).cos()) / m0;
    }
    let nu = nu2 as f64 / 2.0;
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (0.0, 0.0);
    let mut a = 1.0; // a_k(nu) / u^k
    let mut last = f64::INFINITY;
    for k in 0..80usize {
        if k > 0 {
            let j = k as f64;
            a *= (mu - (2.0 * j - 1.0).powi(2)) / (j * 8.0 * u);
        }
        if a.abs() > last && k > 2 {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        if a.abs() < 1e-18 * (p.abs() + q.abs()) {
            break;
        }
    }
    let chi = u - (nu / 2.0 + 0.25) * PI;
    let jnu = (2.0 / (PI * u)).sqrt() * (p * chi.cos() - q * chi.sin());
    gamma_half_plus_one(nu2) * (2.0 / u).powf(nu) * jnu
}

fn find_zero(nu2: u32, guess: f64, lo_bound: f64) -> Result<f64> {
    let f = |x: f64| reduced_bessel(nu2, x);
    let h = 0.4;
    let (mut a, mut b) = ((guess - h).max(lo_bound + 1e-9), guess + h);
    let mut tries = 0;
    while f(a) * f(b) > 0.0 {
        a = (a - h).max(lo_bound + 1e-9);
        b += h;
        tries += 1;
        if tries > 40 {
            return Err(Error::NonConvergence(format!("Bessel zero near {guess}")));
        }
    }
    // Illinois regula falsi
    let (mut fa, mut fb) = (f(a), f(b));
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < 1e-15 * c.abs() {
            return Ok(c);
        }
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

/// First `count` positive zeros of j_nu.
pub fn bessel_zeros(nu2: u32, count: usize) -> Result<Vec<f64>> {
    let nu = nu2 as f64 / 2.0;
    let mu = 4.0 * nu * nu;
    let mut zeros: Vec<f64> = Vec::with_capacity(count);
    for k in 1..=count {
        let beta = (k as f64 + nu / 2.0 - 0.25) * PI;
        let e = 8.0 * beta;
        let guess = beta - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e.powi(3));
        let lo = zeros.last().copied().unwrap_or(0.0);
        let z = find_zero(nu2, guess.max(lo + 0.5), lo)?;
        if z <= lo + 1e-6 {
            return Err(Error::NonConvergence(format!("zero {k} of j_nu did not advance")));
        }
        zeros.push(z);
    }
    Ok(zeros)
}

/// Iterated pairwise averaging of the last partial sums (Euler transform).
fn euler_average(partials: &[f64]) -> f64 {
    let mut v = partials.to_vec();
    while v.len() > 1 {
        v = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    v[0]
}

/// Levin u-transform of the series whose terms are `terms`.
fn levin_u(terms: &[f64], start: usize, k: usize) -> f64 {
    let mut partial = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for &a in terms {
        s += a;
        partial.push(s);
    }
    let (mut num, mut den) = (0.0, 0.0);
    let mut binom = 1.0;
    let n = start;
    for j in 0..=k {
        if j > 0 {
            binom *= (k - j + 1) as f64 / j as f64;
        }
        let m = n + j;
        let omega = (m as f64 + 1.0) * terms[m];
        let ratio = ((n + j + 1) as f64 / (n + k + 1) as f64).powi(k as i32 - 1);
        let c = if j % 2 == 0 { binom } else { -binom } * ratio;
        num += c * partial[m] / omega;
        den += c / omega;
    }
    num / den
}

/// int_0^inf j_nu(u)^q u^{d-1} du with nu = d/2 - 1, via segments between zeros.
pub(crate) fn bessel_power_integral(d: u32, q: u32) -> Result<f64> {
    let nu2 = d - 2;
    let seg_count = 96;
    let zeros = bessel_zeros(nu2, seg_count)?;
    let nodes = legendre_on(0.0, 1.0, 48)?;
    let mut terms = Vec::with_capacity(seg_count);
    let mut a = 0.0;
    for &b in &zeros {
        let h = b - a;
        let s: f64 = nodes
            .iter()
            .map(|&(x, w)| {
                let u = a + h * x;
                w * h * reduced_bessel(nu2, u).powi(q as i32) * u.powi(d as i32 - 1)
            })
            .sum();
        terms.push(s);
        a = b;
    }
    let estimate = |upto: usize| -> f64 {
        if q % 2 == 1 {
            let mut partial = Vec::with_capacity(upto);
            let mut s = 0.0;
            for &t in &terms[..upto] {
                s += t;
                partial.push(s);
            }
            euler_average(&partial[upto - 24..])
        } else if upto == seg_count {
            levin_u(&terms, 1, 10)
        } else {
            levin_u(&terms, 2, 12)
        }
    };
    // the two estimates use different windows of the same segment sums
    let e1 = estimate(seg_count - 24);
    let e2 = estimate(seg_count);
    let tol = 1e-9 * e2.abs().max(1e-300);
    if !((e1 - e2).abs() <= tol) {
        return Err(Error::NonConvergence(format!(
            "tail acceleration for d={d}, q={q}: {e1} vs {e2}"
        )));
    }
    Ok(e2)
}
