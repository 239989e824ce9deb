use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{BridgeMode, SamplerConfig};
use crate::grid::{affine_profile, Grid};

/// `(ε/2L)·min((x₁+L)(L−x₂), (x₂+L)(L−x₁))`.
pub fn bridge_covariance(x1: f64, x2: f64, eps: f64, l: f64) -> f64 {
    let a = (x1 + l) * (l - x2);
    let b = (x2 + l) * (l - x1);
    eps / (2.0 * l) * a.min(b)
}

/// Draws of the centered bridge `√ε·Y` on the nodes of a grid.
#[derive(Clone, Debug)]
pub struct BridgeSampler {
    grid: Grid,
    eps: f64,
    mode: BridgeMode,
    /// Row-major `modes × nodes` table of scaled sine modes for the series.
    basis: Vec<f64>,
}

impl BridgeSampler {
    pub fn new(grid: Grid, eps: f64, mode: BridgeMode) -> Self {
        let basis = match mode {
            BridgeMode::Exact => Vec::new(),
            BridgeMode::Fourier { modes } => {
                let l = grid.half_length();
                let nodes = grid.n_nodes();
                let mut b = Vec::with_capacity(modes * nodes);
                for m in 1..=modes {
                    let amp = 2.0 * l.sqrt() / (PI * m as f64);
                    for i in 0..nodes {
                        let x = grid.x(i);
                        let s = if i == 0 || i + 1 == nodes { 0.0 } else { (m as f64 * PI * (x + l) / (2.0 * l)).sin() };
                        b.push(amp * s);
                    }
                }
                b
            }
        };
        Self { grid, eps, mode, basis }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Overwrites `out` (length `n + 2`) with a centered bridge draw.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let nodes = self.grid.n_nodes();
        debug_assert_eq!(out.len(), nodes);
        let root_eps = self.eps.sqrt();
        match self.mode {
            BridgeMode::Exact => {
                let intervals = nodes - 1;
                let h = self.grid.spacing();
                out[0] = 0.0;
                for i in 1..intervals {
                    let rem = (intervals - (i - 1)) as f64;
                    let keep = (rem - 1.0) / rem;
                    let z: f64 = rng.sample(StandardNormal);
                    out[i] = out[i - 1] * keep + (self.eps * h * keep).sqrt() * z;
                }
                out[intervals] = 0.0;
            }
            BridgeMode::Fourier { modes } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for m in 0..modes {
                    let g: f64 = rng.sample(StandardNormal);
                    let row = &self.basis[m * nodes..(m + 1) * nodes];
                    for (o, b) in out.iter_mut().zip(row) {
                        *o += root_eps * g * b;
                    }
                }
            }
        }
    }
}

/// `ℓ^Q + √ε·Y`: a draw of the reference measure pinned at `0` and `2πQ`.
pub fn sample_bridge<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Vec<f64> {
    let sampler = BridgeSampler::new(cfg.grid, cfg.eps, cfg.bridge);
    let mut out = vec![0.0; cfg.grid.n_nodes()];
    sampler.fill(rng, &mut out);
    for (o, a) in out.iter_mut().zip(affine_profile(&cfg.grid, cfg.charge)) {
        *o += a;
    }
    out
}
