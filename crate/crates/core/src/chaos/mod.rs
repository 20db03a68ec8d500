//! Hermite chaos expansions phi(z) = sum_q b_q H_q(z) / q! of test functions.

pub mod hermite;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

use crate::basis::quadrature::hermite_rule;
use crate::error::{domain, Error, Result};
pub use hermite::{hermite_eval, hermite_monomials};
use hermite::hermite_scaled_all;

/// Relative tail tolerance used when choosing a truncation order.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;
const MAX_AUTO_Q: usize = 160;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ChaosKind {
    Exponential { t: f64 },
    Hermite { q: u32 },
    /// Monomial coefficients a_0, a_1, ... of phi(z) = sum_m a_m z^m.
    Polynomial { monomials: Vec<f64> },
    Tabulated,
    Indicator { level: f64 },
}

/// Geometric envelope |b_q| <= c r^q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub c: f64,
    pub r: f64,
}

impl Growth {
    /// Upper bound on sum_{q > big_q} b_q^2 / q!, or None when the bound is not summable.
    pub fn tail_bound(&self, big_q: usize) -> Option<f64> {
        let r2 = self.r * self.r;
        let m = big_q as f64 + 2.0;
        if r2 >= m {
            return None;
        }
        // c^2 r^{2(Q+1)} / (Q+1)!, then a geometric majorant of the rest
        let mut lead = self.c * self.c;
        for k in 1..=big_q + 1 {
            lead *= r2 / k as f64;
        }
        Some(lead / (1.0 - r2 / m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosSpec {
    #[serde(flatten)]
    pub kind: ChaosKind,
    /// b_0 .. b_Q
    pub coeffs: Vec<f64>,
    #[serde(rename = "Q")]
    pub truncation: usize,
    pub growth: Option<Growth>,
    /// Certified bound on the discarded tail sum_{q>Q} b_q^2/q!, when known.
    #[serde(default)]
    pub tail: Option<f64>,
}

/// phi-hat: absolute coefficients |b_q| for q >= 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsChaosSpec {
    /// coeffs[i] = |b_{i+2}|
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeVariant {
    /// sum_{q>=k} b_q H_{q-k} / (q-k)!
    Plain,
    /// derivative after the generator: factor -q
    Generator,
    /// phi-hat: |b_q|, q >= max(2, k)
    Abs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub b2_nonzero: bool,
    pub supported: bool,
    pub finite_expansion: bool,
    pub growth: Option<Growth>,
    pub passed: bool,
    pub notes: Vec<String>,
}

fn std_normal_sf(u: f64) -> f64 {
    0.5 * erfc(u / SQRT_2)
}

fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

fn sum_sq_over_fact(coeffs: &[f64]) -> f64 {
    let mut f = 1.0;
    let mut s = 0.0;
    for (q, b) in coeffs.iter().enumerate() {
        if q > 0 {
            f *= q as f64;
        }
        s += b * b / f;
    }
    s
}

impl ChaosSpec {
    /// phi(z) = e^{tz}; truncation chosen so the certified tail is below 1e-12 of the total.
    pub fn exponential(t: f64) -> Result<Self> {
        if !t.is_finite() {
            return domain("exponential parameter must be finite");
        }
        let growth = Growth { c: (t * t / 2.0).exp(), r: t.abs() };
        let total = (2.0 * t * t).exp();
        let q = (2..=MAX_AUTO_Q)
            .find(|&q| growth.tail_bound(q).is_some_and(|b| b <= DEFAULT_TAIL_EPS * total))
            .ok_or_else(|| Error::TruncationNotCertified(format!("exponential t={t}")))?;
        Self::exponential_with(t, q)
    }

    /// phi(z) = e^{tz} truncated at a given order.
    pub fn exponential_with(t: f64, big_q: usize) -> Result<Self> {
        let c = (t * t / 2.0).exp();
        let coeffs = (0..=big_q).map(|q| c * t.powi(q as i32)).collect();
        let growth = Growth { c, r: t.abs() };
        Ok(ChaosSpec {
            kind: ChaosKind::Exponential { t },
            coeffs,
            truncation: big_q,
            growth: Some(growth),
            tail: growth.tail_bound(big_q),
        })
    }

    /// phi = H_p.
    pub fn hermite(p: u32) -> Self {
        let mut coeffs = vec![0.0; p as usize + 1];
        coeffs[p as usize] = (1..=p).map(|k| k as f64).product();
        ChaosSpec { kind: ChaosKind::Hermite { q: p }, coeffs, truncation: p as usize, growth: None, tail: Some(0.0) }
    }

    /// phi(z) = sum_m a_m z^m; coefficients are exact and vanish above the degree.
    pub fn polynomial(monomials: Vec<f64>) -> Self {
        let m = monomials.len().saturating_sub(1);
        let mut coeffs = vec![0.0; m + 1];
        for (deg, &a) in monomials.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            // z^m = sum_k m!/(2^k k! (m-2k)!) H_{m-2k}, so b_{m-2k} += a m!/(2^k k!)
            let mut c = a;
            for j in 1..=deg {
                c *= j as f64;
            }
            let mut k = 0;
            while 2 * k <= deg {
                coeffs[deg - 2 * k] += c;
                k += 1;
                c /= 2.0 * k as f64;
            }
        }
        ChaosSpec { kind: ChaosKind::Polynomial { monomials }, coeffs, truncation: m, growth: None, tail: Some(0.0) }
    }

    /// phi = sum_q w_q H_q given as (q, w_q) pairs, stored as a polynomial.
    pub fn hermite_sum(terms: &[(u32, f64)]) -> Self {
        let deg = terms.iter().map(|t| t.0).max().unwrap_or(0) as usize;
        let mut mono = vec![0.0; deg + 1];
        for &(q, w) in terms {
            for (p, c) in hermite_monomials(q) {
                mono[p as usize] += w * c as f64;
            }
        }
        Self::polynomial(mono)
    }

    /// Coefficients given directly; the tail is certified only through a fitted envelope.
    pub fn tabulated(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return domain("tabulated expansion needs at least b_0");
        }
        let mut spec = ChaosSpec {
            kind: ChaosKind::Tabulated,
            truncation: coeffs.len() - 1,
            coeffs,
            growth: None,
            tail: None,
        };
        spec.growth = fit_growth(&spec.coeffs);
        spec.tail = spec.growth.and_then(|g| g.tail_bound(spec.truncation));
        Ok(spec)
    }

    /// 1{z >= level}. Coefficients are closed form; downstream moment code rejects it.
    pub fn indicator(level: f64, big_q: usize) -> Self {
        let mut coeffs = vec![std_normal_sf(level)];
        let pdf = std_normal_pdf(level);
        for q in 1..=big_q {
            coeffs.push(pdf * hermite_eval(q as u32 - 1, level));
        }
        ChaosSpec { kind: ChaosKind::Indicator { level }, coeffs, truncation: big_q, growth: None, tail: None }
    }

    /// Coefficients of an arbitrary function by Gauss-Hermite quadrature with a
    /// node-doubling check on the scale b_q / sqrt(q!).
    pub fn from_function(phi: impl Fn(f64) -> f64, big_q: usize) -> Result<Self> {
        if big_q < 2 {
            return domain("truncation must be at least 2");
        }
        let n = big_q + 16;
        let a = gauss_hermite_coeffs(&phi, big_q, n)?;
        let b = gauss_hermite_coeffs(&phi, big_q, 2 * n)?;
        let mut fact = 1.0f64;
        for q in 0..=big_q {
            if q > 0 {
                fact *= q as f64;
            }
            let gap = (a[q] - b[q]).abs() / fact.sqrt();
            if gap > 1e-9 {
                return Err(Error::NonConvergence(format!(
                    "Gauss-Hermite coefficient b_{q} changes by {gap:e} under node doubling"
                )));
            }
        }
        Self::tabulated(b)
    }

    pub fn b(&self, q: usize) -> f64 {
        self.coeffs.get(q).copied().unwrap_or(0.0)
    }

    pub fn is_finite_expansion(&self) -> bool {
        matches!(self.kind, ChaosKind::Hermite { .. } | ChaosKind::Polynomial { .. })
    }

    /// E[phi(Z)^2] restricted to the stored coefficients.
    pub fn norm_sq(&self) -> f64 {
        sum_sq_over_fact(&self.coeffs)
    }

    /// True when the discarded tail is provably below `DEFAULT_TAIL_EPS` of the total.
    pub fn tail_certified(&self) -> bool {
        if matches!(self.kind, ChaosKind::Indicator { .. }) {
            return false;
        }
        match self.tail {
            Some(t) => t <= DEFAULT_TAIL_EPS * self.norm_sq().max(f64::MIN_POSITIVE),
            None => false,
        }
    }

    /// phi(x), closed form when available.
    pub fn phi(&self, x: f64) -> f64 {
        match &self.kind {
            ChaosKind::Exponential { t } => (t * x).exp(),
            ChaosKind::Hermite { q } => hermite_eval(*q, x),
            ChaosKind::Polynomial { monomials } => monomials.iter().rev().fold(0.0, |acc, a| acc * x + a),
            ChaosKind::Indicator { level } => {
                if x >= *level {
                    1.0
                } else {
                    0.0
                }
            }
            ChaosKind::Tabulated => self.series(x),
        }
    }

    /// Truncated series sum_{q<=Q} b_q H_q(x)/q!.
    pub fn series(&self, x: f64) -> f64 {
        self.derivative_raw(0, x, DerivativeVariant::Plain)
    }

    /// psi(u) = sum_{q>=2} b_q H_{q-1}(u)/(q-1)!, the pointwise kernel of the
    /// Malliavin covariance.
    pub fn psi(&self, u: f64) -> f64 {
        match &self.kind {
            ChaosKind::Exponential { t } => t * (t * u).exp() - self.b(1),
            ChaosKind::Hermite { q } => {
                if *q >= 2 {
                    *q as f64 * hermite_eval(q - 1, u)
                } else {
                    0.0
                }
            }
            _ => {
                let mut e = vec![0.0; self.coeffs.len().max(1)];
                hermite_scaled_all(u, &mut e);
                (2..self.coeffs.len()).map(|q| self.coeffs[q] * e[q - 1]).sum()
            }
        }
    }

    fn derivative_raw(&self, k: usize, x: f64, variant: DerivativeVariant) -> f64 {
        let big_q = self.coeffs.len().saturating_sub(1);
        if k > big_q {
            return 0.0;
        }
        let mut e = vec![0.0; big_q - k + 1];
        hermite_scaled_all(x, &mut e);
        let start = match variant {
            DerivativeVariant::Abs => k.max(2),
            _ => k,
        };
        (start..=big_q)
            .map(|q| {
                let b = self.coeffs[q];
                let w = match variant {
                    DerivativeVariant::Plain => b,
                    DerivativeVariant::Generator => -(q as f64) * b,
                    DerivativeVariant::Abs => b.abs(),
                };
                w * e[q - k]
            })
            .sum()
    }

    pub fn abs_spec(&self) -> AbsChaosSpec {
        AbsChaosSpec { coeffs: self.coeffs.iter().skip(2).map(|b| b.abs()).collect() }
    }
}

/// k-th Malliavin-type derivative series evaluated at x.
pub fn derivative_series(spec: &ChaosSpec, k: usize, x: f64, variant: DerivativeVariant) -> f64 {
    if !spec.tail_certified() && !spec.is_finite_expansion() {
        log::warn!("derivative series of a {:?} expansion uses an uncertified tail", spec.kind);
    }
    spec.derivative_raw(k, x, variant)
}

fn gauss_hermite_coeffs(phi: &impl Fn(f64) -> f64, big_q: usize, n: usize) -> Result<Vec<f64>> {
    let rule = hermite_rule(n)?;
    let mut out = vec![0.0; big_q + 1];
    let mut e = vec![0.0; big_q + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let f = phi(x);
        hermite_scaled_all(x, &mut e);
        for (o, v) in out.iter_mut().zip(&e) {
            *o += w * f * v;
        }
    }
    // b_q = E[phi H_q] = q! E[phi H_q / q!]
    let mut fact = 1.0;
    for (q, o) in out.iter_mut().enumerate() {
        if q > 0 {
            fact *= q as f64;
        }
        *o *= fact;
    }
    Ok(out)
}

/// Least-squares fit of log|b_q| = log c + q log r over nonzero entries,
/// then c raised so the envelope holds on the whole table.
fn fit_growth(coeffs: &[f64]) -> Option<Growth> {
    let pts: Vec<(f64, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0 && b.is_finite())
        .map(|(q, b)| (q as f64, b.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let r = (sxy / sxx).exp();
    let c = coeffs
        .iter()
        .enumerate()
        .map(|(q, b)| b.abs() / r.powi(q as i32))
        .fold(0.0, f64::max);
    Some(Growth { c, r })
}

/// Checks the rank-2 condition b_2 != 0 and a geometric coefficient envelope.
pub fn check_assumption(spec: &ChaosSpec) -> AssumptionReport {
    let mut notes = Vec::new();
    let supported = !matches!(spec.kind, ChaosKind::Indicator { .. });
    if !supported {
        notes.push("indicator functionals do not satisfy the regularity assumption".into());
    }
    let b2_nonzero = spec.b(2) != 0.0;
    if !b2_nonzero {
        notes.push("b_2 = 0: Hermite rank is not 2".into());
    }
    let finite_expansion = spec.is_finite_expansion()
        || (matches!(spec.kind, ChaosKind::Tabulated) && spec.tail == Some(0.0));
    let growth = spec.growth.or_else(|| fit_growth(&spec.coeffs));
    if !finite_expansion && growth.is_none() {
        notes.push("no geometric envelope could be fitted".into());
    }
    let passed = supported && b2_nonzero && (finite_expansion || growth.is_some());
    AssumptionReport { b2_nonzero, supported, finite_expansion, growth, passed, notes }
}
