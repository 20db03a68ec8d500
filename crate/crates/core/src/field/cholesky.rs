use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

use super::{replicate_rng, Backend, FieldRealization, SphereGrid};
use crate::basis::gegenbauer::geg;
use crate::error::{Error, Result};

pub const MAX_DENSE_NODES: usize = 2000;
const JITTER: [f64; 4] = [0.0, 1e-12, 1e-11, 1e-10];

/// Gaussian vector with covariance [G_ell(<x_i, x_j>)] by Cholesky factorization.
pub struct CholeskySampler {
    pub d: u32,
    pub ell: u32,
    pub grid: Arc<SphereGrid>,
    pub jitter: f64,
    factor: DMatrix<f64>,
}

impl CholeskySampler {
    pub fn new(d: u32, ell: u32, grid: Arc<SphereGrid>) -> Result<Self> {
        let n = grid.len();
        if n > MAX_DENSE_NODES {
            return Err(Error::GridMismatch { ell, reason: format!("{n} nodes exceed the dense cap {MAX_DENSE_NODES}") });
        }
        let alpha = (d as f64 - 1.0) / 2.0;
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let t: f64 = grid.point(i).iter().zip(grid.point(j)).map(|(a, b)| a * b).sum();
            geg(alpha, ell, t.clamp(-1.0, 1.0))
        });
        for &jitter in &JITTER {
            let mut m = cov.clone();
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            if let Some(ch) = m.cholesky() {
                return Ok(CholeskySampler { d, ell, grid, jitter, factor: ch.l() });
            }
        }
        Err(Error::Factorization { jitter: *JITTER.last().unwrap() })
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldRealization {
        let mut rng = replicate_rng(seed, replicate);
        let n = self.grid.len();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let v = &self.factor * z;
        FieldRealization {
            grid: Some(self.grid.clone()),
            d: self.d,
            ell: self.ell,
            backend: Backend::Cholesky,
            seed,
            replicate,
            values: v.iter().copied().collect(),
            coeffs: Vec::new(),
        }
    }
}
