use kinkfield::stats::effective_sample_size;

use crate::output::{cell, Table};
use crate::params;
use crate::report::Report;

use super::{sample_ladder, Context, LadderRun, ModeError};

/// A chain with fewer effective energy samples is reported as unconverged.
pub const MIN_EFFECTIVE_SAMPLES: f64 = 100.0;

pub fn samples_table(name: String, q: usize, run: &kinkfield::sampler::ManifoldRecorder) -> Table {
    let mut header = vec!["step".to_string(), "energy".into(), "acceptance_cum".into(), "dist_to_manifold".into()];
    header.extend((1..=q).map(|j| format!("xi_{j}")));
    let mut t = Table::new(name, header);
    for r in &run.records {
        let mut row = vec![r.step.to_string(), r.energy.to_string(), r.acceptance_cum.to_string(), cell(r.distance)];
        match &r.centers {
            Some(c) if c.len() == q => row.extend(c.iter().map(f64::to_string)),
            _ => row.extend(std::iter::repeat_n(String::new(), q)),
        }
        t.push(row);
    }
    t
}

/// Per-chain diagnostics shared with analyze mode.
pub fn chain_diagnostics(runs: &[LadderRun], report: &mut Report) {
    for (i, run) in runs.iter().enumerate() {
        for c in &run.chains {
            let cfg = || params![("eps", run.eps), ("L", run.sampler.grid.half_length()), ("chain", c.stats.chain_id)];
            let rate = c.stats.acceptance_rate;
            report.push("chain_acceptance_rate", rate, None, rate > 0.0 && rate < 1.0, c.stats.n_samples, cfg());
            let energies: Vec<f64> = c.observer.records.iter().map(|r| r.energy).collect();
            let ess = effective_sample_size(&energies);
            if ess < MIN_EFFECTIVE_SAMPLES {
                report.warn(format!(
                    "unconverged: ε = {} chain {} has {ess:.1} effective energy samples (ladder entry {i})",
                    run.eps, c.stats.chain_id
                ));
            }
            let failures = c.observer.records.iter().filter(|r| r.distance.is_none()).count();
            if failures > 0 {
                report.warn(format!(
                    "ε = {} chain {}: center extraction failed on {failures} of {} samples",
                    run.eps,
                    c.stats.chain_id,
                    c.observer.records.len()
                ));
            }
        }
    }
}

pub fn run(ctx: &mut Context<'_>, report: &mut Report) -> Result<(), ModeError> {
    let cfg = ctx.config;
    let runs = sample_ladder(cfg, ctx.threads)?;
    let q = cfg.charge.unsigned_abs() as usize;
    for (i, run) in runs.iter().enumerate() {
        for c in &run.chains {
            let id = c.stats.chain_id;
            ctx.out.write_table(&samples_table(format!("samples_e{i}_c{id}.csv"), q, &c.observer))?;
            if cfg.sampler.checkpoint {
                ctx.out.write_file(&format!("chain_e{i}_c{id}.ckpt"), &c.checkpoint)?;
            }
        }
    }
    chain_diagnostics(&runs, report);
    Ok(())
}
