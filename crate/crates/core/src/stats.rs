//! The functional X_ell, its standardization, chaos projections and Malliavin covariance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::accum::jackknife_variance;
use crate::basis::gegenbauer::geg;
use crate::basis::{eigenspace_dim_f64, sphere_area, sphere_moment};
use crate::chaos::{hermite_eval, ChaosKind, ChaosSpec};
use crate::error::{domain, Error, Result};
use crate::field::{sh_project, FieldRealization, FieldSampler, GridSpec, SphereGrid};
use crate::rates::{RatePoint, RateSeries};

/// Largest grid for the direct double quadrature of the Malliavin covariance.
pub const DENSE_SIGMA_NODES: usize = 600;

/// Anything evaluable pointwise as phi(T(x)).
pub trait Pointwise: Sync {
    fn eval(&self, x: f64) -> f64;
}

impl Pointwise for ChaosSpec {
    fn eval(&self, x: f64) -> f64 {
        self.phi(x)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Pointwise for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// X_ell = int phi(T(x)) dx by the realization's grid weights.
pub fn integrate_functional(real: &FieldRealization, phi: &impl Pointwise) -> f64 {
    let g = real.grid();
    real.values.iter().zip(&g.weights).map(|(&v, w)| w * phi.eval(v)).sum()
}

/// X_ell[q] = (b_q/q!) int H_q(T(x)) dx.
pub fn chaos_projection(real: &FieldRealization, spec: &ChaosSpec, q: u32) -> f64 {
    let b = spec.b(q as usize);
    if b == 0.0 {
        return 0.0;
    }
    let fact: f64 = (1..=q).map(|k| k as f64).product();
    let g = real.grid();
    let s: f64 = real.values.iter().zip(&g.weights).map(|(&v, w)| w * hermite_eval(q, v)).sum();
    b / fact * s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceShare {
    pub q: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMoments {
    pub d: u32,
    pub ell: u32,
    pub mean: f64,
    pub variance: f64,
    /// (b_q^2/q!) mu_d int G^q for q = 2..=Q
    pub shares: Vec<VarianceShare>,
    pub sigma_mean: f64,
    pub eta_rate: f64,
}

impl AnalyticMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mean) / self.std_dev()
    }
}

fn check_even(ell: u32) -> Result<()> {
    if ell == 0 || ell % 2 == 1 {
        return domain(format!("functionals are studied along even ell >= 2, got {ell}"));
    }
    Ok(())
}

/// Convergence rate of E[sigma_ell] to 2.
pub fn eta_rate(d: u32, ell: u32, b4: f64) -> f64 {
    let l = ell as f64;
    if d == 2 && b4 != 0.0 {
        l.ln() / l
    } else {
        1.0 / l
    }
}

/// Mean, variance and E[sigma_ell] from the chaos coefficients and exact moments of G.
pub fn analytic_moments(d: u32, ell: u32, spec: &ChaosSpec) -> Result<AnalyticMoments> {
    check_even(ell)?;
    if matches!(spec.kind, ChaosKind::Indicator { .. }) || !spec.tail_certified() {
        return Err(Error::TruncationNotCertified(format!(
            "{:?} truncated at Q={}",
            spec.kind, spec.truncation
        )));
    }
    let mu = sphere_area(d);
    let mut shares = Vec::new();
    let mut sigma_num = 0.0;
    let mut fact = 1.0f64;
    for q in 1..=spec.truncation as u32 {
        fact *= q as f64;
        if q < 2 {
            continue;
        }
        let b = spec.b(q as usize);
        let value = if b == 0.0 { 0.0 } else { b * b / fact * mu * sphere_moment(d, ell, q)? };
        // b_q^2/(q-1)! = q b_q^2/q!
        sigma_num += value * q as f64;
        shares.push(VarianceShare { q, value });
    }
    let variance: f64 = shares.iter().map(|s| s.value).sum();
    if variance <= 0.0 {
        return domain("the functional has no chaos component of order >= 2");
    }
    Ok(AnalyticMoments {
        d,
        ell,
        mean: spec.b(0) * mu,
        variance,
        shares,
        sigma_mean: sigma_num / variance,
        eta_rate: eta_rate(d, ell, spec.b(4)),
    })
}

/// One replicate of the functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSample {
    pub ell: u32,
    pub seed: u64,
    pub replicate: u64,
    #[serde(rename = "X")]
    pub value: f64,
    #[serde(rename = "Xtilde")]
    pub standardized: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaPath {
    /// spectral on Gauss S^2 grids, dense otherwise
    Auto,
    /// one harmonic analysis of psi(T)
    Spectral,
    /// direct double sum over grid nodes
    Dense,
}

/// Evaluates X_ell, its standardization and sigma_ell against fixed analytic moments.
#[derive(Debug, Clone)]
pub struct FunctionalEvaluator {
    pub spec: ChaosSpec,
    pub moments: AnalyticMoments,
}

impl FunctionalEvaluator {
    pub fn new(d: u32, ell: u32, spec: ChaosSpec) -> Result<Self> {
        let moments = analytic_moments(d, ell, &spec)?;
        Ok(FunctionalEvaluator { spec, moments })
    }

    fn check(&self, real: &FieldRealization) -> Result<()> {
        if real.d != self.moments.d || real.ell != self.moments.ell {
            return Err(Error::Invalid(format!(
                "realization is (d={}, ell={}) but moments are for (d={}, ell={})",
                real.d, real.ell, self.moments.d, self.moments.ell
            )));
        }
        Ok(())
    }

    /// sigma_ell = (1/v^2) int int psi(T(x)) psi(T(z)) G(<x,z>) dx dz.
    pub fn sigma(&self, real: &FieldRealization, path: SigmaPath) -> Result<f64> {
        self.check(real)?;
        let grid = real.grid();
        let s2 = matches!(grid.spec, GridSpec::GaussS2 { .. });
        let path = match path {
            SigmaPath::Auto if s2 => SigmaPath::Spectral,
            SigmaPath::Auto => SigmaPath::Dense,
            p => p,
        };
        let m = &self.moments;
        match path {
            SigmaPath::Spectral => {
                if !s2 {
                    return Err(Error::GridMismatch {
                        ell: real.ell,
                        reason: "spectral sigma needs a Gauss S^2 grid".into(),
                    });
                }
                let n = eigenspace_dim_f64(m.d, m.ell)?;
                let energy = sh_project(real, |u| self.spec.psi(u), m.ell)?;
                Ok(sphere_area(m.d) / (n * m.variance) * energy)
            }
            _ => {
                if grid.len() > DENSE_SIGMA_NODES {
                    return Err(Error::GridMismatch {
                        ell: real.ell,
                        reason: format!("{} nodes exceed the dense sigma budget {DENSE_SIGMA_NODES}", grid.len()),
                    });
                }
                Ok(dense_sigma(grid, real, &self.spec) / m.variance)
            }
        }
    }

    pub fn sample(&self, real: &FieldRealization, with_sigma: bool) -> Result<StatSample> {
        self.check(real)?;
        let value = integrate_functional(real, &self.spec);
        let sigma = if with_sigma { Some(self.sigma(real, SigmaPath::Auto)?) } else { None };
        Ok(StatSample {
            ell: real.ell,
            seed: real.seed,
            replicate: real.replicate,
            value,
            standardized: self.moments.standardize(value),
            sigma,
        })
    }
}

fn dense_sigma(grid: &SphereGrid, real: &FieldRealization, spec: &ChaosSpec) -> f64 {
    let alpha = (grid.d as f64 - 1.0) / 2.0;
    let f: Vec<f64> = real.values.iter().zip(&grid.weights).map(|(&v, w)| w * spec.psi(v)).collect();
    let mut total = 0.0;
    for i in 0..grid.len() {
        let xi = grid.point(i);
        total += f[i] * f[i];
        for j in i + 1..grid.len() {
            let t: f64 = xi.iter().zip(grid.point(j)).map(|(a, b)| a * b).sum();
            total += 2.0 * f[i] * f[j] * geg(alpha, real.ell, t.clamp(-1.0, 1.0));
        }
    }
    total
}

/// sigma_ell for a single realization.
pub fn sigma_sample(real: &FieldRealization, spec: &ChaosSpec) -> Result<f64> {
    FunctionalEvaluator::new(real.d, real.ell, spec.clone())?.sigma(real, SigmaPath::Auto)
}

/// Grid used by the simulation drivers: Gauss rings on S^2, a product rule
/// exact to degree 2 ell * oversample elsewhere.
pub fn default_grid(d: u32, ell: u32, oversample: usize) -> Result<Arc<SphereGrid>> {
    let os = oversample.max(1);
    let g = if d == 2 { SphereGrid::gauss_s2(ell, os)? } else { SphereGrid::product(d, 2 * ell as usize * os)? };
    Ok(Arc::new(g))
}

/// `reps` replicates of the functional at one ell, in replicate order.
pub fn simulate_batch(
    eval: &FunctionalEvaluator,
    grid: Arc<SphereGrid>,
    reps: u64,
    seed: u64,
    with_sigma: bool,
) -> Result<Vec<StatSample>> {
    let m = &eval.moments;
    let sampler = FieldSampler::new(m.d, m.ell, grid)?;
    (0..reps).into_par_iter().map(|r| eval.sample(&sampler.sample(seed, r), with_sigma)).collect()
}

/// Seed for one ell of a multi-ell scan.
pub fn ell_seed(seed: u64, ell: u32) -> u64 {
    seed ^ (ell as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Monte Carlo variance of sigma_ell per ell with jackknife error bars.
pub fn sigma_variance_scan(
    d: u32,
    ell_list: &[u32],
    spec: &ChaosSpec,
    reps: u64,
    seed: u64,
    oversample: usize,
) -> Result<RateSeries> {
    if reps < 500 {
        return domain(format!("sigma variance scan needs at least 500 replicates, got {reps}"));
    }
    let mut points = Vec::with_capacity(ell_list.len());
    for &ell in ell_list {
        let eval = FunctionalEvaluator::new(d, ell, spec.clone())?;
        let batch = simulate_batch(&eval, default_grid(d, ell, oversample)?, reps, ell_seed(seed, ell), true)?;
        let sig: Vec<f64> = batch.iter().map(|s| s.sigma.unwrap_or(f64::NAN)).collect();
        let (y, y_err) = jackknife_variance(&sig);
        log::debug!("sigma variance ell={ell}: {y:e} +- {y_err:e}");
        points.push(RatePoint { ell, y, y_err });
    }
    RateSeries::new(points, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_second_chaos_sigma_mean_is_two() {
        for ell in [2u32, 10, 64] {
            let m = analytic_moments(2, ell, &ChaosSpec::hermite(2)).unwrap();
            assert!((m.sigma_mean - 2.0).abs() < 1e-12);
            assert_eq!(m.shares.len(), 1);
            assert_eq!(m.eta_rate, 1.0 / ell as f64);
        }
    }

    #[test]
    fn rejects_odd_and_uncertified() {
        assert!(analytic_moments(2, 3, &ChaosSpec::hermite(2)).is_err());
        assert!(analytic_moments(2, 4, &ChaosSpec::indicator(0.0, 20)).is_err());
        assert!(analytic_moments(2, 4, &ChaosSpec::exponential_with(1.0, 4).unwrap()).is_err());
    }
}
