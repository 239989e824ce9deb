//! One function per CLI mode. Each fills the report and writes its tables.

pub mod analyze;
pub mod free_energy;
pub mod sample;
pub mod spectrum;
pub mod verify;

use kinkfield::grid::Grid;
use kinkfield::manifold::{collision_scale, ProjectionConfig};
use kinkfield::sampler::{ChainOutput, ManifoldRecorder, SamplerConfig};
use kinkfield::{KinkError, Result};

use crate::config::ExperimentConfig;
use crate::output::{IoError, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum ModeError {
    #[error(transparent)]
    Core(#[from] KinkError),
    #[error(transparent)]
    Io(#[from] IoError),
}

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub threads: usize,
    pub out: &'a mut OutputDir,
}

/// Sampler settings for ladder entry `i`.
pub fn sampler_config(cfg: &ExperimentConfig, i: usize) -> Result<SamplerConfig> {
    let eps = cfg.eps[i];
    let grid = Grid::with_spacing(cfg.half_length(eps), cfg.grid.spacing)?;
    let s = &cfg.sampler;
    let mut sc = SamplerConfig::new(eps, cfg.charge, grid);
    sc.pcn_beta = s.pcn_beta;
    sc.n_steps = s.n_steps;
    sc.burn_in = s.burn_in;
    sc.thinning = s.thinning;
    sc.bridge = s.bridge;
    sc.autotune = s.autotune;
    sc.seed = ladder_seed(cfg.seed, i);
    sc.validate()?;
    Ok(sc)
}

/// Distinct streams per ladder entry; chain `c` then uses `seed ⊕ c`.
pub fn ladder_seed(seed: u64, i: usize) -> u64 {
    seed ^ ((i as u64) << 48)
}

pub fn min_gap(cfg: &ExperimentConfig, eps: f64) -> f64 {
    cfg.analysis.min_gap.unwrap_or_else(|| collision_scale(eps))
}

pub struct LadderRun {
    pub eps: f64,
    pub sampler: SamplerConfig,
    pub chains: Vec<ChainOutput<ManifoldRecorder>>,
}

/// Runs every configured chain at every `ε`, projecting each sample.
pub fn sample_ladder(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<LadderRun>> {
    (0..cfg.eps.len())
        .map(|i| {
            let sampler = sampler_config(cfg, i)?;
            let eps = sampler.eps;
            let projection = ProjectionConfig {
                min_gap: min_gap(cfg, eps),
                tube_radius: cfg.analysis.tube_radius,
                ..ProjectionConfig::default()
            };
            let probes = cfg.analysis.probes.clone();
            let chains = kinkfield::sampler::run_chains(&sampler, cfg.sampler.chains, threads, |_| {
                ManifoldRecorder::new(projection).with_probes(probes.clone())
            })?;
            Ok(LadderRun { eps, sampler, chains })
        })
        .collect()
}

/// Order-preserving map over `items` on up to `threads` scoped threads.
pub fn parallel_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..threads)
            .map(|t| scope.spawn(move || (t..items.len()).step_by(threads).map(|i| (i, f(&items[i]))).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every item ran")).collect()
}
