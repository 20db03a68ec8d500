use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reduce::GraphIntegralSpec;
use crate::accum::RunningStats;
use crate::basis::gegenbauer::geg;
use crate::basis::SphereDim;
use crate::error::{domain, Result};

const SHARD: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Uniform point on S^d.
pub fn uniform_sphere_point(rng: &mut ChaCha8Rng, d: u32, out: &mut [f64]) {
    debug_assert_eq!(out.len(), d as usize + 1);
    loop {
        let mut r2 = 0.0;
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
            r2 += *x * *x;
        }
        if r2 > 1e-300 {
            let r = r2.sqrt();
            out.iter_mut().for_each(|x| *x /= r);
            return;
        }
    }
}

/// Shard-wise statistics of prod G^k at uniform points; shard i uses stream i of the seed.
pub fn mc_shards(spec: &GraphIntegralSpec, samples: usize, seed: u64) -> Vec<RunningStats> {
    let dim = spec.d as usize + 1;
    let alpha = (spec.d as f64 - 1.0) / 2.0;
    let shards = samples.div_ceil(SHARD);
    (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let count = SHARD.min(samples - s * SHARD);
            let mut pts = vec![0.0; spec.n * dim];
            let mut stats = RunningStats::default();
            for _ in 0..count {
                for p in pts.chunks_mut(dim) {
                    uniform_sphere_point(&mut rng, spec.d, p);
                }
                let mut v = 1.0;
                for &(a, b, k) in &spec.edges {
                    let xa = &pts[a * dim..(a + 1) * dim];
                    let xb = &pts[b * dim..(b + 1) * dim];
                    let t: f64 = xa.iter().zip(xb).map(|(u, w)| u * w).sum();
                    v *= geg(alpha, spec.ell, t.clamp(-1.0, 1.0)).powi(k as i32);
                }
                stats.push(v);
            }
            stats
        })
        .collect()
}

/// Plain Monte Carlo estimate of the graph integral with its standard error.
pub fn mc_graph_integral(spec: &GraphIntegralSpec, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return domain("Monte Carlo needs at least one sample");
    }
    let s = SphereDim::new(spec.d)?;
    let scale = s.mu_d.powi(spec.n as i32);
    // sequential fold keeps the result independent of the thread count
    let stats = mc_shards(spec, samples, seed).iter().fold(RunningStats::default(), |a, b| a.merge(b));
    Ok(McEstimate { estimate: scale * stats.mean, std_error: scale * stats.std_error(), samples: stats.count })
}
