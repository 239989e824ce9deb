//! Brownian-bridge reference sampling and a preconditioned Crank–Nicolson
//! chain for the Gibbs measure of a fixed sector.

mod bridge;
mod chain;
mod checkpoint;
mod free_energy;

pub use bridge::{bridge_covariance, sample_bridge, BridgeSampler};
pub use chain::{
    acceptance_probability, pcn_step, run_chain, run_chains, Chain, ChainOutput, ChainState, FnObserver, ManifoldRecorder,
    Observer, PcnKernel, Sample,
    SampleRecord, SampleStats,
};
pub use checkpoint::CHECKPOINT_VERSION;
pub use free_energy::{free_energy_ti, FreeEnergyEstimate, LambdaPoint};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{energy, potential_sum, FieldConfig, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeMode {
    /// Sequential conditional Gaussian construction.
    Exact,
    /// Sine series truncated after the given number of modes.
    Fourier { modes: usize },
}

/// Which potential enters the Gibbs weight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Cosine,
    /// `Φ ≡ 0`: the chain samples the bridge itself.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub eps: f64,
    pub charge: i32,
    pub grid: Grid,
    pub pcn_beta: f64,
    pub n_steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub seed: u64,
    pub bridge: BridgeMode,
    pub potential: PotentialKind,
    /// Multiplies `Φ`; thermodynamic integration sweeps it over `[0, 1]`.
    pub coupling: f64,
    /// Adapt `β` toward the target acceptance during burn-in.
    pub autotune: bool,
}

impl SamplerConfig {
    pub fn new(eps: f64, charge: i32, grid: Grid) -> Self {
        Self {
            eps,
            charge,
            grid,
            pcn_beta: 0.2,
            n_steps: 10_000,
            burn_in: 1_000,
            thinning: 10,
            seed: 0,
            bridge: BridgeMode::Exact,
            potential: PotentialKind::Cosine,
            coupling: 1.0,
            autotune: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(invalid(format!("ε must be positive, got {}", self.eps)));
        }
        if !(self.pcn_beta > 0.0 && self.pcn_beta <= 1.0) {
            return Err(invalid(format!("pcn_beta must lie in (0, 1], got {}", self.pcn_beta)));
        }
        if self.burn_in >= self.n_steps {
            return Err(invalid(format!("burn_in {} must be below n_steps {}", self.burn_in, self.n_steps)));
        }
        if self.thinning == 0 {
            return Err(invalid("thinning must be at least 1"));
        }
        if !(self.coupling >= 0.0) || !self.coupling.is_finite() {
            return Err(invalid(format!("coupling must be finite and non-negative, got {}", self.coupling)));
        }
        if let BridgeMode::Fourier { modes: 0 } = self.bridge {
            return Err(invalid("Fourier bridge needs at least one mode"));
        }
        Ok(())
    }

    pub(crate) fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

/// `E(φ)/ε`: the full Gibbs exponent including the kinetic term of the
/// bridge reference.
pub fn discrete_action(f: &FieldConfig, eps: f64) -> f64 {
    energy(f).total / eps
}

/// `Φ(φ) = (1/ε)·h·Σ(1 − cos φ_i)`, the part of the action seen by pCN.
pub fn pcn_potential(f: &FieldConfig, eps: f64) -> f64 {
    f.grid().spacing() * potential_sum(f.interior()) / eps
}
