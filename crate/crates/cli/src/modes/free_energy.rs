use kinkfield::sampler::{free_energy_ti, FreeEnergyEstimate};
use kinkfield::solitons::KINK_ENERGY;

use crate::output::Table;
use crate::params;
use crate::report::Report;

use super::{parallel_map, sampler_config, Context, ModeError};

pub fn run(ctx: &mut Context<'_>, report: &mut Report) -> Result<(), ModeError> {
    let cfg = ctx.config;
    let lambdas = &cfg.free_energy.lambdas;
    let ladder: Vec<usize> = (0..cfg.eps.len()).collect();
    let results = parallel_map(&ladder, ctx.threads, |&i| -> kinkfield::Result<FreeEnergyEstimate> {
        free_energy_ti(&sampler_config(cfg, i)?, lambdas)
    })
    .into_iter()
    .collect::<kinkfield::Result<Vec<_>>>()?;
    let limit = -KINK_ENERGY * cfg.charge.unsigned_abs() as f64;
    let mut t = Table::new(
        "free_energy.csv",
        ["eps", "lambda", "mean", "std_error", "effective_samples", "acceptance", "converged"],
    );
    for (&eps, r) in cfg.eps.iter().zip(&results) {
        for p in &r.points {
            t.push(vec![
                eps.to_string(),
                p.lambda.to_string(),
                p.mean.to_string(),
                p.std_error.to_string(),
                p.effective_samples.to_string(),
                p.acceptance.to_string(),
                p.converged.to_string(),
            ]);
        }
        report.push(
            "free_energy",
            r.estimate,
            None,
            r.estimate.is_finite(),
            r.points.len(),
            params![("eps", eps), ("L", cfg.half_length(eps)), ("std_error", r.std_error)],
        );
        if r.unconverged {
            let bad: Vec<String> = r.points.iter().filter(|p| !p.converged).map(|p| p.lambda.to_string()).collect();
            report.warn(format!("unconverged: ε = {eps} sub-chains at λ = {}", bad.join(", ")));
        }
    }
    ctx.out.write_table(&t)?;
    if !cfg.free_energy.trend_test {
        return Ok(());
    }
    if results.len() < 2 {
        report.warn("insufficient-data: the free-energy trend needs at least 2 values of ε");
        return Ok(());
    }
    let first = results[1].estimate - results[0].estimate;
    for (w, e) in results.windows(2).zip(cfg.eps.windows(2)) {
        let cfg_pair = || params![("eps_from", e[0]), ("eps_to", e[1]), ("limit", limit)];
        let step = w[1].estimate - w[0].estimate;
        // monotone: every step heads toward the limit, all in one direction
        let monotone = step * (limit - w[0].estimate) > 0.0 && step.signum() == first.signum();
        report.push("free_energy_step", step, None, monotone, 2, cfg_pair());
        let closer = (w[1].estimate - limit).abs() - (w[0].estimate - limit).abs();
        report.push("free_energy_distance_to_limit_step", closer, None, closer < 0.0, 2, cfg_pair());
        let sigmas = step.abs() / (w[0].std_error + w[1].std_error);
        report.push("free_energy_error_bar_overlap", sigmas, None, sigmas <= 1.0, 2, cfg_pair());
    }
    Ok(())
}
