use kinkfield::grid::Grid;
use kinkfield::manifold::tangent_frame;
use kinkfield::spectral::{build_operator, decay_rate_fit, eigenpairs, ornstein_uhlenbeck, projected_green};
use kinkfield::{KinkError, Sign, SolitonParams};

use crate::output::Table;
use crate::params;
use crate::report::Report;

use super::{Context, ModeError};

/// Dense kernels beyond this many interior nodes are skipped.
const MAX_DENSE_NODES: usize = 8000;
const ZERO_MODE_TOL: f64 = 1e-2;
const CONTINUUM_EDGE: f64 = 0.99;

fn soliton_params(ctx: &Context<'_>, l: f64) -> kinkfield::Result<Option<SolitonParams>> {
    let q = ctx.config.charge;
    let k = q.unsigned_abs() as usize;
    let centers = if ctx.config.spectrum.centers.is_empty() {
        (1..=k).map(|j| -l + 2.0 * l * j as f64 / (k + 1) as f64).collect()
    } else {
        ctx.config.spectrum.centers.clone()
    };
    if centers.is_empty() {
        return Ok(None);
    }
    Ok(Some(SolitonParams::new(centers, Sign::of_charge(q.into()), None)?))
}

pub fn run(ctx: &mut Context<'_>, report: &mut Report) -> Result<(), ModeError> {
    let cfg = ctx.config;
    let eps = cfg.eps[0];
    let l = cfg.half_length(eps);
    let h = cfg.grid.spacing;
    let grid = Grid::with_spacing(l, h)?;
    let params = soliton_params(ctx, l)?;
    let op = match &params {
        Some(p) => build_operator(p, &grid),
        None => ornstein_uhlenbeck(&grid),
    };
    let k = params.as_ref().map_or(0, SolitonParams::len);
    let m = cfg.spectrum.eigenvalues.min(grid.n_interior());
    let spec = eigenpairs(&op, m)?;
    let mut t = Table::new("spectrum.csv", ["index", "eigenvalue", "residual"]);
    for (i, (lam, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
        t.push(vec![(i + 1).to_string(), lam.to_string(), r.to_string()]);
    }
    ctx.out.write_table(&t)?;
    let base = || params![("L", l), ("h", h), ("solitons", k)];
    if k > 0 && m >= k {
        let worst = spec.eigenvalues[..k].iter().fold(0.0f64, |a, b| a.max(b.abs()));
        report.push("zero_mode_cluster_max_abs", worst, None, worst <= ZERO_MODE_TOL, k, base());
    }
    if m > k {
        let edge = spec.eigenvalues[k];
        report.push("continuum_edge", edge, None, edge >= CONTINUUM_EDGE, 1, base());
    }
    let worst_residual = spec.residuals.iter().fold(0.0f64, |a, b| a.max(*b));
    report.push("eigen_residual_max", worst_residual, None, worst_residual <= 1e-6, m, base());

    if !cfg.spectrum.green {
        return Ok(());
    }
    if grid.n_interior() > MAX_DENSE_NODES {
        ctx.out.gap(format!("green.csv skipped: {} interior nodes exceed {MAX_DENSE_NODES}", grid.n_interior()));
        return Ok(());
    }
    let frame = params.as_ref().map(|p| tangent_frame(p, &grid)).transpose()?;
    let g = projected_green(&op, frame.as_ref())?;
    let asym = g.max_asymmetry();
    report.push("green_max_asymmetry", asym, None, asym <= 1e-8, g.n(), base());
    let w = cfg.spectrum.bulk_window.min(l);
    match decay_rate_fit(&g, (-w, w)) {
        Ok(rate) => report.push("bulk_decay_rate", rate, None, (rate - 1.0).abs() <= 0.05, 1, base()),
        Err(KinkError::FitFailure(msg)) => report.warn(format!("bulk decay fit skipped: {msg}")),
        Err(e) => return Err(e.into()),
    }
    let idx: Vec<usize> = (1..=g.n()).filter(|&i| grid.x(i).abs() <= w).collect();
    let stride = idx.len().div_ceil(cfg.spectrum.green_points).max(1);
    let picked: Vec<usize> = idx.iter().step_by(stride).copied().collect();
    let mut t = Table::new("green.csv", ["x", "y", "value"]);
    for &i in &picked {
        for &j in &picked {
            t.push_numbers(&[grid.x(i), grid.x(j), g.node_value(i, j)]);
        }
    }
    ctx.out.write_table(&t)?;
    Ok(())
}
