use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

use super::legendre::normalized_legendre_row;
use super::{replicate_rng, Backend, FieldRealization, GridSpec, SphereGrid};
use crate::error::{Error, Result};

/// Synthesis of T_ell on S^2 from 2 ell + 1 real harmonic coefficients:
/// T = sqrt(2/(2 ell+1)) [a_0 p_0 + sqrt 2 sum_m p_m (a_m cos m phi + a_{-m} sin m phi)].
pub struct HarmonicSampler {
    pub ell: u32,
    pub grid: Arc<SphereGrid>,
    azimuths: usize,
    /// p_{ell,m}(t_ring), ring-major
    plm: Vec<f64>,
}

fn check_grid(grid: &SphereGrid, ell: u32) -> Result<usize> {
    match grid.spec {
        GridSpec::GaussS2 { rings, azimuths } => {
            if rings < ell as usize + 1 || azimuths < 2 * ell as usize + 1 {
                return Err(Error::GridMismatch {
                    ell,
                    reason: format!("{rings} rings x {azimuths} azimuths"),
                });
            }
            Ok(azimuths)
        }
        _ => Err(Error::GridMismatch { ell, reason: "harmonic backend needs a Gauss S^2 grid".into() }),
    }
}

fn legendre_table(grid: &SphereGrid, ell: u32) -> Vec<f64> {
    let w = ell as usize + 1;
    let mut plm = vec![0.0; grid.rings.len() * w];
    for (i, &(t, _)) in grid.rings.iter().enumerate() {
        normalized_legendre_row(ell, t, &mut plm[i * w..(i + 1) * w]);
    }
    plm
}

impl HarmonicSampler {
    pub fn new(ell: u32, grid: Arc<SphereGrid>) -> Result<Self> {
        let azimuths = check_grid(&grid, ell)?;
        let plm = legendre_table(&grid, ell);
        Ok(HarmonicSampler { ell, grid, azimuths, plm })
    }

    /// Field values for given coefficients (a_0, a_1, a_{-1}, a_2, a_{-2}, ...).
    pub fn synthesize(&self, a: &[f64]) -> Vec<f64> {
        let l = self.ell as usize;
        let w = l + 1;
        let n = self.azimuths;
        let scale = (2.0 / (2 * l + 1) as f64).sqrt();
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
        let mut out = Vec::with_capacity(self.grid.rings.len() * n);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for ring in 0..self.grid.rings.len() {
            let p = &self.plm[ring * w..(ring + 1) * w];
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            buf[0] = Complex::new(a[0] * p[0], 0.0);
            for m in 1..=l {
                let c = std::f64::consts::SQRT_2 * p[m];
                // Re(X e^{i m phi}) = a_m cos + a_{-m} sin for X = a_m - i a_{-m}
                buf[m] = Complex::new(c * a[2 * m - 1], -c * a[2 * m]);
            }
            fft.process(&mut buf);
            out.extend(buf.iter().map(|c| scale * c.re));
        }
        out
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldRealization {
        let mut rng = replicate_rng(seed, replicate);
        let a: Vec<f64> = (0..2 * self.ell as usize + 1).map(|_| StandardNormal.sample(&mut rng)).collect();
        FieldRealization {
            grid: Some(self.grid.clone()),
            d: 2,
            ell: self.ell,
            backend: Backend::Harmonic,
            seed,
            replicate,
            values: self.synthesize(&a),
            coeffs: a,
        }
    }
}

/// sum_m (int g Y_{degree,m})^2 by ring FFTs and Gauss-Legendre latitudes.
pub(super) fn project_energy(grid: &SphereGrid, g: &[f64], degree: u32) -> Result<f64> {
    let azimuths = check_grid(grid, degree)?;
    let l = degree as usize;
    let w = l + 1;
    let plm = legendre_table(grid, degree);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(azimuths);
    let dphi = 2.0 * PI / azimuths as f64;
    // cosine and sine coefficients per order
    let mut cm = vec![0.0; w];
    let mut sm = vec![0.0; w];
    let mut buf = vec![Complex::new(0.0, 0.0); azimuths];
    for (ring, &(_, wt)) in grid.rings.iter().enumerate() {
        let row = &g[ring * azimuths..(ring + 1) * azimuths];
        for (b, &v) in buf.iter_mut().zip(row) {
            *b = Complex::new(v, 0.0);
        }
        fft.process(&mut buf);
        let p = &plm[ring * w..(ring + 1) * w];
        cm[0] += wt * dphi * p[0] * buf[0].re / (2.0 * PI).sqrt();
        for m in 1..=l {
            cm[m] += wt * dphi * p[m] * buf[m].re / PI.sqrt();
            sm[m] -= wt * dphi * p[m] * buf[m].im / PI.sqrt();
        }
    }
    Ok(cm.iter().chain(&sm).map(|c| c * c).sum())
}
