//! Gaussian eigenfunctions T_ell on spherical grids.

mod cholesky;
mod harmonic;
pub mod legendre;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::basis::quadrature::{gegenbauer_rule, legendre_on};
use crate::basis::{sphere_area, SphereDim};
use crate::error::{Error, Result};

pub use cholesky::{CholeskySampler, MAX_DENSE_NODES};
pub use harmonic::HarmonicSampler;

/// Replicate `replicate` of master seed `seed`: stream index = replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridSpec {
    /// Gauss-Legendre rings by equispaced azimuths on S^2.
    GaussS2 { rings: usize, azimuths: usize },
    /// Recursive Gauss-Gegenbauer product rule exact to `degree`.
    Product { degree: usize },
    /// Caller-supplied points and weights.
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub d: u32,
    pub spec: GridSpec,
    /// row-major, d+1 coordinates per node
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// ring heights and weights for `GaussS2`
    #[serde(default)]
    pub rings: Vec<(f64, f64)>,
}

impl SphereGrid {
    /// Default S^2 grid for degree ell: (ell+1) rings by (2 ell + 2) azimuths, each scaled by `oversample`.
    pub fn gauss_s2(ell: u32, oversample: usize) -> Result<Self> {
        let os = oversample.max(1);
        Self::gauss_s2_sized((ell as usize + 1) * os, (2 * ell as usize + 2) * os)
    }

    pub fn gauss_s2_sized(rings: usize, azimuths: usize) -> Result<Self> {
        if rings == 0 || azimuths == 0 {
            return Err(Error::Invalid("empty grid".into()));
        }
        let rule = legendre_on(-1.0, 1.0, rings)?;
        let dphi = 2.0 * std::f64::consts::PI / azimuths as f64;
        let mut points = Vec::with_capacity(3 * rings * azimuths);
        let mut weights = Vec::with_capacity(rings * azimuths);
        for &(t, w) in &rule {
            let s = (1.0 - t * t).max(0.0).sqrt();
            for k in 0..azimuths {
                let phi = k as f64 * dphi;
                points.extend_from_slice(&[s * phi.cos(), s * phi.sin(), t]);
                weights.push(w * dphi);
            }
        }
        Ok(SphereGrid { d: 2, spec: GridSpec::GaussS2 { rings, azimuths }, points, weights, rings: rule })
    }

    /// Product rule on S^d integrating polynomials of the given degree exactly.
    pub fn product(d: u32, degree: usize) -> Result<Self> {
        SphereDim::new(d)?;
        let (points, weights) = product_nodes(d, degree)?;
        Ok(SphereGrid { d, spec: GridSpec::Product { degree }, points, weights, rings: Vec::new() })
    }

    pub fn from_points(d: u32, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() * (d as usize + 1) {
            return Err(Error::Invalid("points and weights disagree in length".into()));
        }
        Ok(SphereGrid { d, spec: GridSpec::Points, points, weights, rings: Vec::new() })
    }

    /// Keep a subset of nodes; weights are rescaled to total mu_d.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let dim = self.d as usize + 1;
        let mut pts = Vec::with_capacity(idx.len() * dim);
        for &i in idx {
            pts.extend_from_slice(self.point(i));
        }
        let w = vec![sphere_area(self.d) / idx.len() as f64; idx.len()];
        Self::from_points(self.d, pts, w)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let dim = self.d as usize + 1;
        &self.points[i * dim..(i + 1) * dim]
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

fn product_nodes(d: u32, degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if d == 1 {
        let n = degree + 1;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let mut p = Vec::with_capacity(2 * n);
        for k in 0..n {
            let a = k as f64 * h;
            p.extend_from_slice(&[a.cos(), a.sin()]);
        }
        return Ok((p, vec![h; n]));
    }
    let rule = gegenbauer_rule(d, degree / 2 + 1)?;
    let (sub_p, sub_w) = product_nodes(d - 1, degree)?;
    let dim = d as usize;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (&t, &wt) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (y, &wy) in sub_p.chunks(dim).zip(&sub_w) {
            points.extend(y.iter().map(|c| c * s));
            points.push(t);
            weights.push(wt * wy);
        }
    }
    Ok((points, weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Harmonic,
    Cholesky,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldRealization {
    #[serde(skip)]
    pub grid: Option<Arc<SphereGrid>>,
    pub d: u32,
    pub ell: u32,
    pub backend: Backend,
    pub seed: u64,
    pub replicate: u64,
    pub values: Vec<f64>,
    /// harmonic coefficients a_m when the harmonic backend produced the field
    #[serde(default)]
    pub coeffs: Vec<f64>,
}

impl FieldRealization {
    pub fn grid(&self) -> &SphereGrid {
        self.grid.as_deref().expect("realization carries its grid")
    }
}

pub enum FieldSampler {
    Harmonic(HarmonicSampler),
    Cholesky(CholeskySampler),
}

impl FieldSampler {
    /// Harmonic synthesis on Gauss S^2 grids, covariance factorization otherwise.
    pub fn new(d: u32, ell: u32, grid: Arc<SphereGrid>) -> Result<Self> {
        if grid.d != d {
            return Err(Error::Invalid(format!("grid is on S^{} but d = {d}", grid.d)));
        }
        match grid.spec {
            GridSpec::GaussS2 { .. } => Ok(FieldSampler::Harmonic(HarmonicSampler::new(ell, grid)?)),
            _ => Ok(FieldSampler::Cholesky(CholeskySampler::new(d, ell, grid)?)),
        }
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldRealization {
        match self {
            FieldSampler::Harmonic(h) => h.sample(seed, replicate),
            FieldSampler::Cholesky(c) => c.sample(seed, replicate),
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        match self {
            FieldSampler::Harmonic(h) => &h.grid,
            FieldSampler::Cholesky(c) => &c.grid,
        }
    }
}

pub fn sample_field(d: u32, ell: u32, grid: Arc<SphereGrid>, seed: u64) -> Result<FieldRealization> {
    Ok(FieldSampler::new(d, ell, grid)?.sample(seed, 0))
}

/// Squared norm of the degree-`degree` projection of psi(T); needs a Gauss S^2 grid.
pub fn sh_project(real: &FieldRealization, psi: impl Fn(f64) -> f64, degree: u32) -> Result<f64> {
    let values: Vec<f64> = real.values.iter().map(|&v| psi(v)).collect();
    harmonic::project_energy(real.grid(), &values, degree)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    d: u32,
    ell: u32,
    grid: &'a GridSpec,
    nodes: usize,
    rows: usize,
    seed: u64,
    replicates: Vec<u64>,
    backend: Backend,
    layout: &'static str,
}

/// Row-major little-endian f64 matrix (one row per realization) plus `<path>.json`.
pub fn export_realizations(path: &Path, reals: &[FieldRealization]) -> Result<()> {
    let first = reals.first().ok_or_else(|| Error::Invalid("nothing to export".into()))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in reals {
        if r.values.len() != first.values.len() {
            return Err(Error::Invalid("realizations differ in node count".into()));
        }
        for v in &r.values {
            f.write_all(&v.to_le_bytes())?;
        }
    }
    f.flush()?;
    let side = Sidecar {
        d: first.d,
        ell: first.ell,
        grid: &first.grid().spec,
        nodes: first.values.len(),
        rows: reals.len(),
        seed: first.seed,
        replicates: reals.iter().map(|r| r.replicate).collect(),
        backend: first.backend,
        layout: "row-major f64 little-endian",
    };
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    std::fs::write(p, serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_weights_sum() {
        let g = SphereGrid::gauss_s2(10, 1).unwrap();
        assert!((g.weights.iter().sum::<f64>() - sphere_area(2)).abs() < 1e-12);
        assert_eq!(g.len(), 11 * 22);
        for d in [3u32, 4] {
            let g = SphereGrid::product(d, 6).unwrap();
            assert!((g.weights.iter().sum::<f64>() - sphere_area(d)).abs() < 1e-11);
            let norm = g.point(3).iter().map(|x| x * x).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_kills_degree_ell() {
        use crate::basis::gegenbauer_eval;
        for (d, g) in [(2u32, SphereGrid::gauss_s2(12, 1).unwrap()), (3, SphereGrid::product(3, 12).unwrap())] {
            let p: Vec<f64> = (0..=d).map(|i| 0.3 + i as f64 * 0.2).collect();
            let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            let vals: Vec<f64> = (0..g.len())
                .map(|i| {
                    let t: f64 = g.point(i).iter().zip(&p).map(|(a, b)| a * b / n).sum();
                    gegenbauer_eval(d, 12, t.clamp(-1.0, 1.0)).unwrap()
                })
                .collect();
            assert!(g.integrate(&vals).abs() < 1e-8 * sphere_area(d));
        }
    }
}
