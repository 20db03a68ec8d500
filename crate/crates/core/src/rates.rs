//! Distances of empirical samples to the standard Gaussian and log-log rate fits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Half-width of the integration window of the smoothed TV proxy.
pub const TV_WINDOW: f64 = 6.0;

fn std_normal() -> Normal {
    Normal::standard()
}

/// Antiderivative of Phi: x Phi(x) + phi(x).
fn big_psi(n: &Normal, x: f64) -> f64 {
    x * n.cdf(x) + n.pdf(x)
}

fn check_finite(sample: &[f64]) -> Result<()> {
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Invalid("sample contains non-finite values".into()));
    }
    Ok(())
}

fn sorted(sample: &[f64]) -> Vec<f64> {
    let mut s = sample.to_vec();
    if !s.is_sorted() {
        s.sort_by(f64::total_cmp);
    }
    s
}

/// int_a^b |Phi(x) - c| dx.
fn abs_gap(n: &Normal, a: f64, b: f64, c: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let above = |a: f64, b: f64| big_psi(n, b) - big_psi(n, a) - c * (b - a);
    if c <= n.cdf(a) {
        above(a, b)
    } else if c >= n.cdf(b) {
        -above(a, b)
    } else {
        let x = n.inverse_cdf(c).clamp(a, b);
        -above(a, x) + above(x, b)
    }
}

/// Exact W1 between the empirical law of `sample` and N(0,1): int |F_n - Phi|.
pub fn wasserstein1_to_gauss(sample: &[f64]) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::Invalid("Wasserstein distance needs at least 2 points".into()));
    }
    check_finite(sample)?;
    let s = sorted(sample);
    let n = std_normal();
    let m = s.len() as f64;
    let mut total = big_psi(&n, s[0]) + big_psi(&n, -s[s.len() - 1]);
    for (k, w) in s.windows(2).enumerate() {
        total += abs_gap(&n, w[0], w[1], (k + 1) as f64 / m);
    }
    Ok(total)
}

/// Exact W1 between two empirical laws: int |F_a - F_b|.
pub fn wasserstein1_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("empty sample".into()));
    }
    check_finite(a)?;
    check_finite(b)?;
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut last = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (x - last);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        last = x;
    }
    Ok(total)
}

/// Smoothed total variation proxy: half the L1 distance between the Gaussian
/// kernel density estimate with bandwidth `h` and N(0, 1 + h^2), the target
/// smoothed by the same kernel.
///
/// Trapezoid rule on [-6, 6] with step at most h/5; the mass each density puts
/// beyond the window is added per tail in closed form.
pub fn smoothed_tv_to_gauss(sample: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("bandwidth must be positive, got {h}")));
    }
    if sample.is_empty() {
        return Err(Error::Invalid("empty sample".into()));
    }
    check_finite(sample)?;
    let s = sorted(sample);
    let n = std_normal();
    let m = s.len() as f64;
    let ts = (1.0 + h * h).sqrt();
    let cells = ((2.0 * TV_WINDOW) / (h / 5.0)).ceil() as usize;
    let step = 2.0 * TV_WINDOW / cells as f64;
    let reach = 9.0 * h;
    let kde = |x: f64| {
        let lo = s.partition_point(|&v| v < x - reach);
        let hi = s.partition_point(|&v| v <= x + reach);
        s[lo..hi].iter().map(|&v| n.pdf((x - v) / h)).sum::<f64>() / (m * h)
    };
    let mut l1 = 0.0;
    for i in 0..=cells {
        let x = -TV_WINDOW + i as f64 * step;
        let w = if i == 0 || i == cells { 0.5 } else { 1.0 };
        l1 += w * (kde(x) - n.pdf(x / ts) / ts).abs();
    }
    l1 *= step;
    let target_tail = n.cdf(-TV_WINDOW / ts);
    let left = s.iter().map(|&v| n.cdf((-TV_WINDOW - v) / h)).sum::<f64>() / m;
    let right = s.iter().map(|&v| n.cdf((v - TV_WINDOW) / h)).sum::<f64>() / m;
    l1 += (left - target_tail).abs() + (right - target_tail).abs();
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub ell: u32,
    pub y: f64,
    pub y_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Measured decay of some quantity in ell with its log-log fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub theory_slope: Option<f64>,
}

impl RateSeries {
    pub fn new(points: Vec<RatePoint>, theory_slope: Option<f64>) -> Result<Self> {
        let fit = rate_fit(&points)?;
        Ok(RateSeries { points, slope: fit.slope, intercept: fit.intercept, slope_se: fit.slope_se, theory_slope })
    }

    /// |slope - target| <= tol.
    pub fn slope_within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }
}

/// Ordinary least squares of log y on log ell.
pub fn rate_fit(points: &[RatePoint]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::Invalid(format!("rate fit needs at least 4 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| w[1].ell <= w[0].ell) {
        return Err(Error::Invalid("ell must be strictly increasing".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.y > 0.0 && p.y.is_finite())) {
        return Err(Error::Invalid(format!("non-positive value {} at ell={}", p.y, p.ell)));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.ell as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_se = (rss / (n - 2.0) / sxx).sqrt();
    Ok(RateFit { slope, intercept, slope_se })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateQuantity {
    /// W1 of the standardized functional to N(0,1)
    W1Standardized,
    /// W1 of the Malliavin covariance to the constant 2
    W1Sigma,
}

/// Predicted log-log slope of a distance in ell.
pub fn theory_slope(quantity: RateQuantity, d: u32) -> f64 {
    match quantity {
        RateQuantity::W1Standardized => -0.5,
        RateQuantity::W1Sigma => match d {
            0..=3 => -0.5,
            4 => -0.75,
            _ => -1.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_at_zero() {
        let w = wasserstein1_to_gauss(&[0.0; 10]).unwrap();
        assert!((w - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn gap_pieces() {
        let n = std_normal();
        // crossing inside the interval
        let v = abs_gap(&n, -1.0, 1.0, 0.5);
        let direct = 2.0 * (big_psi(&n, 1.0) - big_psi(&n, 0.0) - 0.5);
        assert!((v - direct).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(wasserstein1_to_gauss(&[1.0]).is_err());
        assert!(wasserstein1_to_gauss(&[1.0, f64::NAN]).is_err());
        assert!(smoothed_tv_to_gauss(&[1.0], 0.0).is_err());
        let pts: Vec<RatePoint> = [8, 16, 32].iter().map(|&ell| RatePoint { ell, y: 1.0, y_err: 0.0 }).collect();
        assert!(rate_fit(&pts).is_err());
    }
}
