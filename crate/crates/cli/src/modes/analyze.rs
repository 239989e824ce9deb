use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use kinkfield::analysis::{
    center_histogram, concentration_curve, fluctuation_covariance, ks_meta_test, order_statistics_test, CenterSamples,
    ConcentrationInput, FluctuationCovariance, FluctuationSample,
};
use kinkfield::manifold::tangent_frame;
use kinkfield::spectral::{build_operator, projected_green};
use kinkfield::stats::autocorrelation_time;
use kinkfield::{KinkError, Sign, SolitonParams};

use crate::output::Table;
use crate::params;
use crate::report::Report;

use super::sample::chain_diagnostics;
use super::{min_gap, sample_ladder, Context, LadderRun, ModeError};

const META_ROWS: usize = 2000;
const META_SEEDS: u64 = 100;
const META_REQUIRED: usize = 95;
/// Largest interior size for the dense eigen-decomposition of the loop-closing test.
const MAX_LOOP_NODES: usize = 1500;

pub fn run(ctx: &mut Context<'_>, report: &mut Report) -> Result<(), ModeError> {
    let runs = sample_ladder(ctx.config, ctx.threads)?;
    chain_diagnostics(&runs, report);
    concentration(ctx, &runs, report)?;
    centers(ctx, &runs, report)?;
    covariance(ctx, &runs, report)?;
    Ok(())
}

fn concentration(ctx: &mut Context<'_>, runs: &[LadderRun], report: &mut Report) -> Result<(), ModeError> {
    let a = &ctx.config.analysis;
    let inputs: Vec<ConcentrationInput> = runs
        .iter()
        .map(|run| {
            let records = run.chains.iter().flat_map(|c| &c.observer.records);
            let distances = records.clone().filter_map(|r| r.distance).collect();
            let min_gaps = records
                .filter_map(|r| r.centers.as_ref())
                .filter(|c| c.len() >= 2)
                .map(|c| c.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min))
                .collect();
            ConcentrationInput { eps: run.eps, distances, min_gaps }
        })
        .collect();
    let curve = concentration_curve(&inputs, &a.deltas);
    let mut t = Table::new("tails.csv", ["eps", "delta", "p", "n"]);
    for row in &curve.tails {
        t.push(vec![row.eps.to_string(), row.delta.to_string(), row.p.to_string(), row.n.to_string()]);
    }
    ctx.out.write_table(&t)?;
    for d in &curve.distances {
        report.push("mean_distance", d.mean, None, d.mean.is_finite(), d.n, params![("eps", d.eps), ("std_error", d.std_error)]);
    }
    for c in &curve.collisions {
        report.push("collision_fraction", c.fraction, None, true, c.n, params![("eps", c.eps), ("scale", c.scale)]);
    }
    if a.slope_test {
        match &curve.insufficient_data {
            Some(msg) => report.warn(format!("insufficient-data: {msg}")),
            None => {
                for s in &curve.slopes {
                    match s.slope {
                        Some(v) => report.push("tail_slope", v, None, s.negative, s.points, params![("delta", s.delta)]),
                        None => report.warn(format!(
                            "insufficient-data: tail at δ = {} is nonzero at {} value(s) of ε",
                            s.delta, s.points
                        )),
                    }
                }
            }
        }
    }
    let ladder_pairs = || curve.distances.windows(2);
    if a.distance_trend {
        if curve.distances.len() < 2 {
            report.warn("insufficient-data: distance trend needs at least 2 values of ε");
        }
        for w in ladder_pairs() {
            let step = w[1].mean - w[0].mean;
            report.push("mean_distance_step", step, None, step < 0.0, w[1].n, params![("eps_from", w[0].eps), ("eps_to", w[1].eps)]);
        }
    }
    if let Some(min_ratio) = a.tail_ratio {
        if curve.distances.len() < 2 {
            report.warn("insufficient-data: tail ratio needs at least 2 values of ε");
        }
        for w in ladder_pairs() {
            let p0 = tail(&inputs, w[0].eps, a.ratio_delta);
            let p1 = tail(&inputs, w[1].eps, a.ratio_delta);
            let ratio = if p1 > 0.0 { p0 / p1 } else if p0 > 0.0 { f64::INFINITY } else { f64::NAN };
            report.push(
                "tail_ratio",
                ratio,
                None,
                ratio >= min_ratio,
                w[1].n,
                params![("eps_from", w[0].eps), ("eps_to", w[1].eps), ("delta", a.ratio_delta), ("p_from", p0), ("p_to", p1)],
            );
        }
    }
    Ok(())
}

fn tail(inputs: &[ConcentrationInput], eps: f64, delta: f64) -> f64 {
    let d = &inputs.iter().find(|i| i.eps == eps).expect("ladder entry").distances;
    if d.is_empty() {
        0.0
    } else {
        d.iter().filter(|&&x| x >= delta).count() as f64 / d.len() as f64
    }
}

/// Centers of one ladder entry, each chain thinned by its largest
/// integrated autocorrelation time; returns the samples and their
/// effective count.
fn center_samples(ctx: &Context<'_>, run: &LadderRun) -> kinkfield::Result<(CenterSamples, f64)> {
    let q = ctx.config.charge.unsigned_abs() as usize;
    let lbar = run.sampler.grid.half_length() - ctx.config.analysis.window_trim;
    let gap = min_gap(ctx.config, run.eps);
    let mut pooled = CenterSamples::new(Vec::new(), lbar)?;
    let mut effective = 0.0;
    for c in &run.chains {
        let cs = CenterSamples::from_records(&c.observer.records, q, lbar, gap)?;
        let tau = (0..q).map(|j| autocorrelation_time(&cs.column(j))).fold(1.0f64, f64::max);
        if !cs.is_empty() {
            effective += cs.len() as f64 / tau;
        }
        let thinned = cs.thinned(tau.ceil() as usize);
        pooled.extraction_failures += cs.extraction_failures;
        pooled.collision_filtered += cs.collision_filtered;
        pooled.outside_window += cs.outside_window;
        pooled.rows.extend(thinned.rows);
    }
    Ok((pooled, effective))
}

fn centers(ctx: &mut Context<'_>, runs: &[LadderRun], report: &mut Report) -> Result<(), ModeError> {
    let q = ctx.config.charge.unsigned_abs() as usize;
    let a = ctx.config.analysis.clone();
    let mut header = vec!["bin_left".to_string(), "bin_right".into()];
    header.extend((1..=q).map(|j| format!("count_j{j}")));
    header.extend((1..=q).map(|j| format!("beta_ref_j{j}")));
    let mut hist = Table::new("centers_hist.csv", header);
    if q == 0 {
        ctx.out.gap("centers_hist.csv: sector 0 has no centers");
        ctx.out.write_table(&hist)?;
        return Ok(());
    }
    for (i, run) in runs.iter().enumerate() {
        let (cs, effective) = center_samples(ctx, run)?;
        let lbar = cs.half_length;
        let base = || params![("eps", run.eps), ("L_bar", lbar), ("rows", cs.len())];
        report.push(
            "center_effective_samples",
            effective,
            None,
            effective >= a.min_effective_samples,
            cs.len(),
            params![
                ("eps", run.eps),
                ("extraction_failures", cs.extraction_failures),
                ("collision_filtered", cs.collision_filtered),
                ("outside_window", cs.outside_window)
            ],
        );
        match order_statistics_test(&cs, a.alpha, a.gap_tolerance) {
            Ok(r) => {
                for o in r.outcomes() {
                    let mut p = base();
                    if o.test == "mean_gap_relative_error" {
                        p.insert("mean_gap".into(), r.mean_gap.into());
                        p.insert("expected_gap".into(), r.expected_gap.into());
                    }
                    report.push_outcome(&o, p);
                }
            }
            Err(KinkError::InsufficientData(msg)) => report.warn(format!("insufficient-data: ε = {}: {msg}", run.eps)),
            Err(e) => return Err(e.into()),
        }
        if i + 1 == runs.len() && !cs.is_empty() {
            // the histogram is written for the smallest ε of the ladder
            for row in center_histogram(&cs, a.histogram_bins)? {
                let mut cells = vec![row.left.to_string(), row.right.to_string()];
                cells.extend(row.counts.iter().map(usize::to_string));
                cells.extend(row.reference.iter().map(f64::to_string));
                hist.push(cells);
            }
        }
    }
    ctx.out.write_table(&hist)?;
    if a.meta_test {
        let lbar = runs[0].sampler.grid.half_length() - a.window_trim;
        let passes = ks_meta_test(q, lbar, META_ROWS, 0..META_SEEDS, a.alpha)?;
        report.push(
            "ks_meta_test_passes",
            passes as f64,
            None,
            passes >= META_REQUIRED,
            META_SEEDS as usize,
            params![("Q", q), ("L_bar", lbar), ("rows", META_ROWS), ("alpha", a.alpha)],
        );
    }
    Ok(())
}

fn pairs(ctx: &Context<'_>) -> Vec<(usize, usize)> {
    let a = &ctx.config.analysis;
    if !a.probe_pairs.is_empty() {
        return a.probe_pairs.clone();
    }
    let p = a.probes.len();
    (0..p).flat_map(|i| [(i, i), (i, i + 1)]).filter(|&(_, j)| j < p).collect()
}

fn covariance_rows(t: &mut Table, eps: f64, c: &FluctuationCovariance) {
    for (a, &x) in c.probes.iter().enumerate() {
        for (b, &y) in c.probes.iter().enumerate() {
            t.push(vec![
                eps.to_string(),
                x.to_string(),
                y.to_string(),
                c.matrix[a][b].to_string(),
                c.std_errors[a][b].to_string(),
                c.counts[a][b].to_string(),
                c.reference[a][b].to_string(),
                c.ratios[a][b].to_string(),
            ]);
        }
    }
}

fn covariance(ctx: &mut Context<'_>, runs: &[LadderRun], report: &mut Report) -> Result<(), ModeError> {
    let a = ctx.config.analysis.clone();
    let mut t = Table::new("covariance.csv", ["eps", "x", "y", "covariance", "std_error", "count", "reference", "ratio"]);
    if a.probes.is_empty() {
        ctx.out.gap("covariance.csv: no probes configured");
        ctx.out.write_table(&t)?;
        return Ok(());
    }
    let pairs = pairs(ctx);
    for run in runs {
        let samples: Vec<FluctuationSample> = run
            .chains
            .iter()
            .flat_map(|c| &c.observer.records)
            .filter_map(|r| {
                let centers = r.centers.clone()?;
                (r.probe_values.len() == a.probes.len()).then(|| FluctuationSample { centers, values: r.probe_values.clone() })
            })
            .collect();
        match fluctuation_covariance(&samples, run.eps, &a.probes, a.margin) {
            Ok(c) => {
                covariance_rows(&mut t, run.eps, &c);
                for &(i, j) in &pairs {
                    let ratio = c.ratios[i][j];
                    report.push(
                        "covariance_ratio",
                        ratio,
                        None,
                        (ratio - 1.0).abs() <= a.covariance_tolerance,
                        c.counts[i][j],
                        params![
                            ("eps", run.eps),
                            ("x", a.probes[i]),
                            ("y", a.probes[j]),
                            ("covariance", c.matrix[i][j]),
                            ("std_error", c.std_errors[i][j]),
                            ("margin", a.margin)
                        ],
                    );
                }
            }
            Err(KinkError::InsufficientData(msg)) => report.warn(format!("insufficient-data: ε = {}: {msg}", run.eps)),
            Err(e) => return Err(e.into()),
        }
    }
    ctx.out.write_table(&t)?;
    if a.loop_closing_draws > 0 {
        loop_closing(ctx, runs.last().expect("non-empty ladder"), &pairs, report)?;
    }
    Ok(())
}

/// Exact Gaussian draws with the projected kernel as covariance, fed back
/// through `fluctuation_covariance` and compared with the kernel itself.
fn loop_closing(ctx: &Context<'_>, run: &LadderRun, pairs: &[(usize, usize)], report: &mut Report) -> Result<(), ModeError> {
    let a = &ctx.config.analysis;
    let grid = run.sampler.grid;
    let q = ctx.config.charge;
    let k = q.unsigned_abs() as usize;
    if k == 0 || grid.n_interior() > MAX_LOOP_NODES {
        report.warn(format!("loop-closing test skipped: needs 1 ≤ |Q| and at most {MAX_LOOP_NODES} interior nodes"));
        return Ok(());
    }
    let l = grid.half_length();
    let centers: Vec<f64> = (1..=k).map(|j| -l + 2.0 * l * j as f64 / (k + 1) as f64).collect();
    let p = SolitonParams::new(centers.clone(), Sign::of_charge(q.into()), None)?;
    let frame = tangent_frame(&p, &grid)?;
    let g = projected_green(&build_operator(&p, &grid), Some(&frame))?;
    let eig = g.values.clone().symmetric_eigen();
    let idx: Vec<usize> = a.probes.iter().map(|&x| grid.nearest_index(x) - 1).collect();
    let modes: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &lam)| lam > 1e-10)
        .map(|(m, &lam)| ((lam * run.eps).sqrt(), idx.iter().map(|&i| eig.eigenvectors[(i, m)]).collect()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let samples: Vec<FluctuationSample> = (0..a.loop_closing_draws)
        .map(|_| {
            let mut values = vec![0.0; idx.len()];
            for (s, u) in &modes {
                let z: f64 = StandardNormal.sample(&mut rng);
                for (v, c) in values.iter_mut().zip(u) {
                    *v += s * z * c;
                }
            }
            FluctuationSample { centers: centers.clone(), values }
        })
        .collect();
    match fluctuation_covariance(&samples, run.eps, &a.probes, a.margin) {
        Ok(c) => {
            for &(i, j) in pairs {
                let target = g.at(a.probes[i], a.probes[j]);
                let z = (c.matrix[i][j] - target).abs() / c.std_errors[i][j];
                report.push(
                    "loop_closing_z",
                    z,
                    None,
                    z <= 3.0,
                    c.counts[i][j],
                    params![("eps", run.eps), ("x", a.probes[i]), ("y", a.probes[j]), ("kernel", target), ("covariance", c.matrix[i][j])],
                );
            }
        }
        Err(KinkError::InsufficientData(msg)) => report.warn(format!("insufficient-data: loop-closing test: {msg}")),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}
