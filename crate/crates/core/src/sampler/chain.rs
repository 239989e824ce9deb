use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::bridge::BridgeSampler;
use super::checkpoint;
use super::{PotentialKind, SamplerConfig};
use crate::error::{invalid, KinkError, Result};
use crate::grid::{affine_profile, energy_of_values, l2_norm, potential_sum, EnergyReport, FieldConfig};
use crate::manifold::{project_to_manifold, NormalDecomposition, ProjectionConfig};
use crate::solitons::{multi_soliton_field, SolitonParams};
use crate::stats::{autocorrelation_time, mean};

const TARGET_ACCEPTANCE: f64 = 0.3;
const TUNE_WINDOW: u64 = 100;
const BETA_MIN: f64 = 1e-4;
/// Steps between recomputations of the stored potential.
const REFRESH_EVERY: u64 = 1000;

/// Mutable state of one chain. Fields are stored for the sector `|Q|`.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub values: Vec<f64>,
    /// `Φ` of `values`, including the coupling.
    pub potential: f64,
    pub step: u64,
    pub accepted: u64,
    pub proposed: u64,
    /// Counters restricted to post burn-in steps.
    pub accepted_sampling: u64,
    pub proposed_sampling: u64,
    pub window_accepted: u64,
    pub window_proposed: u64,
    pub beta: f64,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    pub fn acceptance(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// `min(1, exp(Φ(φ) − Φ(φ')))`.
pub fn acceptance_probability(current: f64, proposed: f64) -> f64 {
    (current - proposed).exp().min(1.0)
}

/// Proposal machinery shared by all steps of a chain.
#[derive(Clone, Debug)]
pub struct PcnKernel {
    cfg: SamplerConfig,
    bridge: BridgeSampler,
    /// `ℓ^{|Q|}`
    mean: Vec<f64>,
    noise: Vec<f64>,
    proposal: Vec<f64>,
}

impl PcnKernel {
    pub fn new(cfg: SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.grid.n_nodes();
        Ok(Self {
            bridge: BridgeSampler::new(cfg.grid, cfg.eps, cfg.bridge),
            mean: affine_profile(&cfg.grid, cfg.charge.abs()),
            noise: vec![0.0; n],
            proposal: vec![0.0; n],
            cfg,
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    /// `Φ` including the coupling constant.
    pub fn potential(&self, values: &[f64]) -> f64 {
        match self.cfg.potential {
            PotentialKind::Zero => 0.0,
            PotentialKind::Cosine => {
                let n = values.len();
                self.cfg.coupling * self.cfg.grid.spacing() * potential_sum(&values[1..n - 1]) / self.cfg.eps
            }
        }
    }

    /// One pCN move; returns whether the proposal was accepted.
    pub fn step(&mut self, st: &mut ChainState) -> bool {
        self.bridge.fill(&mut st.rng, &mut self.noise);
        let keep = (1.0 - st.beta * st.beta).max(0.0).sqrt();
        for i in 0..self.mean.len() {
            let m = self.mean[i];
            self.proposal[i] = m + keep * (st.values[i] - m) + st.beta * self.noise[i];
        }
        // the endpoints are exactly pinned by construction of ℓ and the noise
        let last = self.proposal.len() - 1;
        self.proposal[0] = self.mean[0];
        self.proposal[last] = self.mean[last];
        let phi_new = self.potential(&self.proposal);
        let u: f64 = st.rng.random();
        let accept = u < acceptance_probability(st.potential, phi_new);
        st.proposed += 1;
        st.window_proposed += 1;
        if accept {
            std::mem::swap(&mut st.values, &mut self.proposal);
            st.potential = phi_new;
            st.accepted += 1;
            st.window_accepted += 1;
        }
        accept
    }
}

/// One `pcn_step` on a state with a kernel built for `cfg`.
pub fn pcn_step(state: &mut ChainState, kernel: &mut PcnKernel) -> bool {
    kernel.step(state)
}

/// A thinned sample handed to observers.
#[derive(Debug)]
pub struct Sample<'a> {
    pub chain_id: u64,
    pub step: u64,
    pub field: &'a FieldConfig,
    pub energy: EnergyReport,
    pub acceptance_cum: f64,
}

pub trait Observer {
    fn observe(&mut self, sample: &Sample<'_>) -> std::result::Result<(), String>;
}

/// Adapter turning a closure into an observer.
pub struct FnObserver<F>(pub F);

impl<F> Observer for FnObserver<F>
where
    F: FnMut(&Sample<'_>) -> std::result::Result<(), String>,
{
    fn observe(&mut self, sample: &Sample<'_>) -> std::result::Result<(), String> {
        (self.0)(sample)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub step: u64,
    pub energy: f64,
    pub acceptance_cum: f64,
    pub distance: Option<f64>,
    pub centers: Option<Vec<f64>>,
    pub converged: bool,
    pub out_of_tube: bool,
    /// Normal field at the recorder's probe points.
    pub probe_values: Vec<f64>,
}

/// Projects every sample onto the manifold and keeps a compact record.
#[derive(Clone, Debug)]
pub struct ManifoldRecorder {
    pub projection: ProjectionConfig,
    pub probes: Vec<f64>,
    pub records: Vec<SampleRecord>,
    keep_decompositions: bool,
    pub decompositions: Vec<NormalDecomposition>,
}

impl ManifoldRecorder {
    pub fn new(projection: ProjectionConfig) -> Self {
        Self { projection, probes: Vec::new(), records: Vec::new(), keep_decompositions: false, decompositions: Vec::new() }
    }

    pub fn with_probes(mut self, probes: Vec<f64>) -> Self {
        self.probes = probes;
        self
    }

    /// Also retain the full decompositions (memory grows with `n` per sample).
    pub fn keeping_decompositions(mut self) -> Self {
        self.keep_decompositions = true;
        self
    }
}

impl Observer for ManifoldRecorder {
    fn observe(&mut self, s: &Sample<'_>) -> std::result::Result<(), String> {
        let grid = s.field.grid();
        let mut record = SampleRecord {
            step: s.step,
            energy: s.energy.total,
            acceptance_cum: s.acceptance_cum,
            distance: None,
            centers: None,
            converged: false,
            out_of_tube: false,
            probe_values: Vec::new(),
        };
        if s.field.charge() == 0 {
            // the sector-zero manifold is the vacuum itself
            let d = l2_norm(s.field.values(), grid).map_err(|e| e.to_string())?;
            record.distance = Some(d);
            record.centers = Some(Vec::new());
            record.converged = true;
            record.probe_values = self.probes.iter().map(|&x| grid.interpolate(s.field.values(), x)).collect();
        } else {
            match project_to_manifold(s.field, None, &self.projection) {
                Ok(d) => {
                    record.distance = Some(d.distance);
                    record.centers = Some(d.centers().to_vec());
                    record.converged = d.converged;
                    record.out_of_tube = d.out_of_tube;
                    record.probe_values = self.probes.iter().map(|&x| grid.interpolate(&d.normal, x)).collect();
                    if self.keep_decompositions {
                        self.decompositions.push(d);
                    }
                }
                Err(KinkError::ExtractionFailure(_)) | Err(KinkError::DegenerateFrame(_)) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
        self.records.push(record);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleStats {
    pub chain_id: u64,
    pub steps: u64,
    pub n_samples: usize,
    /// Post burn-in acceptance rate.
    pub acceptance_rate: f64,
    pub energy_mean: f64,
    pub energy_autocorr_time: f64,
    pub final_beta: f64,
}

impl SampleStats {
    pub fn effective_samples(&self) -> f64 {
        self.n_samples as f64 / self.energy_autocorr_time
    }
}

/// A pCN chain with its configuration and state.
#[derive(Clone, Debug)]
pub struct Chain {
    id: u64,
    kernel: PcnKernel,
    state: ChainState,
}

impl Chain {
    /// Starts from evenly spaced solitons; the RNG seed is `seed ⊕ id`.
    pub fn new(cfg: SamplerConfig, id: u64) -> Result<Self> {
        let kernel = PcnKernel::new(cfg.clone())?;
        let k = cfg.charge.unsigned_abs() as usize;
        let grid = cfg.grid;
        let values = if k == 0 {
            vec![0.0; grid.n_nodes()]
        } else {
            let l = grid.half_length();
            let centers = (1..=k).map(|j| -l + 2.0 * l * j as f64 / (k + 1) as f64).collect();
            multi_soliton_field(&SolitonParams::kinks(centers)?, &grid)?
        };
        let potential = kernel.potential(&values);
        let state = ChainState {
            values,
            potential,
            step: 0,
            accepted: 0,
            proposed: 0,
            accepted_sampling: 0,
            proposed_sampling: 0,
            window_accepted: 0,
            window_proposed: 0,
            beta: cfg.pcn_beta,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ id),
        };
        Ok(Self { id, kernel, state })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn config(&self) -> &SamplerConfig {
        self.kernel.config()
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn finished(&self) -> bool {
        self.state.step >= self.config().n_steps
    }

    /// Current field in the configured sector (reflected when `Q < 0`).
    pub fn field(&self) -> FieldConfig {
        let cfg = self.config();
        let values = if cfg.charge < 0 {
            self.state.values.iter().map(|v| -v).collect()
        } else {
            self.state.values.clone()
        };
        FieldConfig::new(cfg.grid, values, cfg.charge).expect("chain states stay in their sector")
    }

    /// Advances one step, tuning `β` during burn-in; returns acceptance.
    pub fn step(&mut self) -> bool {
        let burn_in = self.config().burn_in;
        let autotune = self.config().autotune;
        let accepted = self.kernel.step(&mut self.state);
        let st = &mut self.state;
        st.step += 1;
        if st.step > burn_in {
            st.proposed_sampling += 1;
            st.accepted_sampling += accepted as u64;
        } else if autotune && st.window_proposed >= TUNE_WINDOW {
            let rate = st.window_accepted as f64 / st.window_proposed as f64;
            st.beta = (st.beta * (rate - TARGET_ACCEPTANCE).exp()).clamp(BETA_MIN, 1.0);
        }
        if st.window_proposed >= TUNE_WINDOW {
            st.window_accepted = 0;
            st.window_proposed = 0;
        }
        if st.step.is_multiple_of(REFRESH_EVERY) {
            let fresh = self.kernel.potential(&self.state.values);
            debug_assert!((fresh - self.state.potential).abs() <= 1e-9 * fresh.abs().max(1.0));
            self.state.potential = fresh;
        }
        accepted
    }

    fn is_sample_step(&self) -> bool {
        let cfg = self.config();
        self.state.step > cfg.burn_in && (self.state.step - cfg.burn_in).is_multiple_of(cfg.thinning)
    }

    /// Runs to `n_steps`, streaming thinned samples to the observers. On an
    /// observer error the chain stops with its state intact.
    pub fn run(&mut self, observers: &mut [&mut dyn Observer]) -> Result<SampleStats> {
        let mut energies = Vec::new();
        while !self.finished() {
            self.step();
            if !self.is_sample_step() {
                continue;
            }
            let field = self.field();
            let energy = energy_of_values(field.grid(), field.values());
            energies.push(energy.total);
            let sample = Sample {
                chain_id: self.id,
                step: self.state.step,
                field: &field,
                energy,
                acceptance_cum: self.state.acceptance(),
            };
            for obs in observers.iter_mut() {
                obs.observe(&sample)
                    .map_err(|message| KinkError::Observer { step: self.state.step, message })?;
            }
        }
        Ok(self.stats(&energies))
    }

    fn stats(&self, energies: &[f64]) -> SampleStats {
        let st = &self.state;
        SampleStats {
            chain_id: self.id,
            steps: st.step,
            n_samples: energies.len(),
            acceptance_rate: if st.proposed_sampling == 0 {
                0.0
            } else {
                st.accepted_sampling as f64 / st.proposed_sampling as f64
            },
            energy_mean: mean(energies),
            energy_autocorr_time: autocorrelation_time(energies),
            final_beta: st.beta,
        }
    }

    pub fn checkpoint(&self) -> Vec<u8> {
        checkpoint::encode(self.id, self.config(), &self.state)
    }

    pub fn resume(cfg: SamplerConfig, bytes: &[u8]) -> Result<Self> {
        let kernel = PcnKernel::new(cfg.clone())?;
        let (id, state) = checkpoint::decode(&cfg, bytes)?;
        Ok(Self { id, kernel, state })
    }
}

/// Single chain with id 0.
pub fn run_chain(cfg: &SamplerConfig, observers: &mut [&mut dyn Observer]) -> Result<SampleStats> {
    Chain::new(cfg.clone(), 0)?.run(observers)
}

/// Outcome of one chain of [`run_chains`].
#[derive(Clone, Debug)]
pub struct ChainOutput<O> {
    pub stats: SampleStats,
    pub observer: O,
    /// Final state, as written by [`Chain::checkpoint`].
    pub checkpoint: Vec<u8>,
}

/// Runs `n_chains` independent chains on at most `threads` worker threads.
/// Results come back ordered by chain id whatever the thread count.
pub fn run_chains<O, F>(cfg: &SamplerConfig, n_chains: usize, threads: usize, make: F) -> Result<Vec<ChainOutput<O>>>
where
    O: Observer + Send,
    F: Fn(u64) -> O + Sync,
{
    if n_chains == 0 {
        return Err(invalid("at least one chain is required"));
    }
    let cfg = cfg.clone().validated()?;
    let threads = threads.clamp(1, n_chains);
    let run_one = |id: u64| -> Result<ChainOutput<O>> {
        let mut observer = make(id);
        let mut chain = Chain::new(cfg.clone(), id)?;
        let stats = chain.run(&mut [&mut observer])?;
        Ok(ChainOutput { stats, observer, checkpoint: chain.checkpoint() })
    };
    if threads == 1 {
        return (0..n_chains as u64).map(run_one).collect();
    }
    let mut slots: Vec<Option<Result<ChainOutput<O>>>> = (0..n_chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let run_one = &run_one;
                scope.spawn(move || {
                    (t..n_chains).step_by(threads).map(|id| (id, run_one(id as u64))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (id, r) in h.join().expect("chain worker panicked") {
                slots[id] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every chain ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::sampler::{bridge_covariance, BridgeMode};
    use crate::stats::{standard_error, variance};

    fn small_cfg() -> SamplerConfig {
        let mut c = SamplerConfig::new(0.5, 1, Grid::with_spacing(3.0, 0.1).unwrap());
        c.n_steps = 3000;
        c.burn_in = 500;
        c.thinning = 5;
        c.seed = 17;
        c
    }

    fn stream(cfg: &SamplerConfig) -> Vec<(u64, f64)> {
        let mut out = Vec::new();
        let mut obs = FnObserver(|s: &Sample<'_>| {
            out.push((s.step, s.energy.total));
            Ok(())
        });
        run_chain(cfg, &mut [&mut obs]).unwrap();
        out
    }

    #[test]
    fn seeded_runs_are_bitwise_identical() {
        let cfg = small_cfg();
        let a = stream(&cfg);
        let b = stream(&cfg);
        assert_eq!(a.len(), 500);
        assert!(a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits()));
        let mut other = cfg.clone();
        other.seed = 18;
        assert_ne!(stream(&other), a);
    }

    #[test]
    fn tiny_beta_always_accepts() {
        let mut cfg = small_cfg();
        cfg.pcn_beta = 1e-12;
        cfg.autotune = false;
        let stats = run_chain(&cfg, &mut []).unwrap();
        assert_eq!(stats.acceptance_rate, 1.0);
    }

    #[test]
    fn zero_potential_always_accepts() {
        let mut cfg = small_cfg();
        cfg.potential = PotentialKind::Zero;
        cfg.pcn_beta = 0.9;
        let stats = run_chain(&cfg, &mut []).unwrap();
        assert_eq!(stats.acceptance_rate, 1.0);
    }

    #[test]
    fn acceptance_ignores_constant_shifts() {
        for &(a, b) in &[(1.0, 2.5), (3.0, 0.5), (10.0, 10.25)] {
            for c in [-7.5, 0.0, 100.0] {
                let p = acceptance_probability(a, b);
                let q = acceptance_probability(a + c, b + c);
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn proposals_stay_pinned_and_in_sector() {
        let mut cfg = small_cfg();
        cfg.charge = -2;
        let mut chain = Chain::new(cfg, 3).unwrap();
        for _ in 0..2000 {
            chain.step();
            let s = chain.state();
            assert_eq!(s.values[0], 0.0);
            assert_eq!(*s.values.last().unwrap(), 2.0 * crate::grid::TWO_PI);
        }
        let f = chain.field();
        assert_eq!(f.charge(), -2);
        assert_eq!(*f.values().last().unwrap(), -2.0 * crate::grid::TWO_PI);
    }

    #[test]
    fn autotuned_acceptance_is_moderate() {
        let mut cfg = SamplerConfig::new(0.1, 1, Grid::with_spacing(15.0, 0.2).unwrap());
        cfg.n_steps = 20_000;
        cfg.burn_in = 5_000;
        cfg.pcn_beta = 0.9;
        let stats = run_chain(&cfg, &mut []).unwrap();
        assert!(stats.acceptance_rate > 0.1 && stats.acceptance_rate < 0.9, "{}", stats.acceptance_rate);
        assert!(stats.final_beta < 0.9);
    }

    #[test]
    fn zero_potential_chain_preserves_the_bridge() {
        let g = Grid::with_spacing(2.0, 0.1).unwrap();
        let mut cfg = SamplerConfig::new(1.0, 0, g);
        cfg.potential = PotentialKind::Zero;
        cfg.pcn_beta = 0.5;
        cfg.autotune = false;
        cfg.n_steps = 201_000;
        cfg.burn_in = 1_000;
        cfg.thinning = 2;
        let pairs = [(-1.5, -1.0), (-1.0, 0.0), (0.0, 0.0), (0.5, 1.5), (-1.9, 1.9)];
        let idx: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (g.nearest_index(a), g.nearest_index(b))).collect();
        let mut prods = vec![Vec::new(); pairs.len()];
        let mut kinetic = Vec::new();
        let mut obs = FnObserver(|s: &Sample<'_>| {
            for (k, &(i, j)) in idx.iter().enumerate() {
                prods[k].push(s.field.values()[i] * s.field.values()[j]);
            }
            kinetic.push(s.energy.kinetic);
            Ok(())
        });
        run_chain(&cfg, &mut [&mut obs]).unwrap();
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let target = bridge_covariance(a, b, 1.0, 2.0);
            let m = mean(&prods[k]);
            assert!((m - target).abs() < 3.0 * standard_error(&prods[k]), "pair {k}: {m} vs {target}");
        }
        // reference kinetic energy: N increments of variance εh(1 − 1/N)
        let intervals = (g.n_nodes() - 1) as f64;
        let expect = (intervals - 1.0) / 2.0;
        assert!((mean(&kinetic) - expect).abs() < 3.0 * standard_error(&kinetic));
        assert!(variance(&kinetic) > 0.0);
    }

    /// Target density of the three interior nodes of a five-node grid,
    /// integrated on a tensor grid to get the marginal of the middle node.
    #[test]
    fn five_node_chain_matches_quadrature() {
        let g = Grid::new(1.0, 3).unwrap();
        let h = g.spacing();
        let eps = 1.0;
        let q = 1;
        let end = crate::grid::TWO_PI;
        let log_density = |p: [f64; 3]| {
            let v = [0.0, p[0], p[1], p[2], end];
            let kin: f64 = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2.0 * h);
            let pot = h * p.iter().map(|&x| crate::grid::cosine_potential(x)).sum::<f64>();
            -(kin + pot) / eps
        };
        let edges: Vec<f64> = (0..=12).map(|i| -1.0 + 8.0 * i as f64 / 12.0).collect();
        let nb = edges.len() - 1;
        // midpoint rule; the middle coordinate uses cells that tile the bins
        let m = 150;
        let (lo, hi) = (-6.0, 12.0);
        let dx = (hi - lo) / m as f64;
        let width = edges[1] - edges[0];
        let dy = width / 8.0;
        let y_lo = edges[0] - 8.0 * width;
        let my = (nb + 16) * 8;
        let mut mass = vec![0.0; nb];
        let mut total = 0.0;
        for b in 0..my {
            let x2 = y_lo + (b as f64 + 0.5) * dy;
            let bin = (b / 8).checked_sub(8).filter(|&k| k < nb);
            for a in 0..m {
                let x1 = lo + (a as f64 + 0.5) * dx;
                for c in 0..m {
                    let x3 = lo + (c as f64 + 0.5) * dx;
                    let w = log_density([x1, x2, x3]).exp();
                    total += w;
                    if let Some(k) = bin {
                        mass[k] += w;
                    }
                }
            }
        }
        let mut cfg = SamplerConfig::new(eps, q, g);
        cfg.n_steps = 1_000_000;
        cfg.burn_in = 10_000;
        cfg.thinning = 1;
        cfg.pcn_beta = 0.8;
        cfg.seed = 5;
        let mut indicators = vec![Vec::new(); nb];
        let mut obs = FnObserver(|s: &Sample<'_>| {
            let x2 = s.field.values()[2];
            for (k, e) in edges.windows(2).enumerate() {
                indicators[k].push(if x2 >= e[0] && x2 < e[1] { 1.0 } else { 0.0 });
            }
            Ok(())
        });
        run_chain(&cfg, &mut [&mut obs]).unwrap();
        for k in 0..nb {
            let p = mass[k] / total;
            let est = mean(&indicators[k]);
            let se = standard_error(&indicators[k]);
            assert!((est - p).abs() < 3.0 * se.max(1e-4), "bin {k}: {est} vs {p} (se {se})");
        }
    }

    #[test]
    fn fourier_mode_chain_runs() {
        let mut cfg = small_cfg();
        cfg.bridge = BridgeMode::Fourier { modes: 32 };
        let stats = run_chain(&cfg, &mut []).unwrap();
        assert!(stats.n_samples == 500 && stats.acceptance_rate > 0.0);
    }

    #[test]
    fn observer_failure_keeps_state() {
        let cfg = small_cfg();
        let mut chain = Chain::new(cfg, 0).unwrap();
        let mut obs = FnObserver(|s: &Sample<'_>| if s.step >= 1000 { Err("disk full".to_string()) } else { Ok(()) });
        let err = chain.run(&mut [&mut obs]).unwrap_err();
        assert!(matches!(err, KinkError::Observer { step: 1000, .. }));
        assert_eq!(chain.state().step, 1000);
        // the chain continues from where it stopped
        chain.run(&mut []).unwrap();
        assert!(chain.finished());
    }

    #[test]
    fn parallel_chains_match_serial() {
        let cfg = small_cfg();
        let make = |_id: u64| ManifoldRecorder::new(ProjectionConfig::default());
        let serial = run_chains(&cfg, 3, 1, make).unwrap();
        let parallel = run_chains(&cfg, 3, 3, make).unwrap();
        for (a, b) in serial.iter().zip(&parallel) {
            assert_eq!(a.stats, b.stats);
            assert_eq!(a.observer.records, b.observer.records);
            assert_eq!(a.checkpoint, b.checkpoint);
        }
        assert_ne!(serial[0].observer.records, serial[1].observer.records);
        let resumed = Chain::resume(cfg.clone(), &serial[2].checkpoint).unwrap();
        assert!(resumed.finished() && resumed.id() == 2);
        let r = &serial[0].observer.records;
        assert!(r.iter().all(|x| x.centers.as_ref().map(|c| c.len()) == Some(1)));
    }
}
