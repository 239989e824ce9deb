//! Deterministic and seeded checks run by `verify-deterministic`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinkfield::grid::{energy, energy_of_values, FieldConfig, Grid};
use kinkfield::manifold::{project_to_manifold, tangent_frame, ProjectionConfig};
use kinkfield::sampler::{bridge_covariance, sample_bridge, SamplerConfig};
use kinkfield::solitons::{fq_direct, fq_expansion, multi_soliton_config, multi_soliton_field, Sign};
use kinkfield::spectral::{
    build_operator, decay_rate_fit, eigenpairs, ornstein_uhlenbeck, projected_green, resolvent_residual,
};
use kinkfield::stats::{iid_standard_error, linear_fit, mean};
use kinkfield::{Result, SolitonParams};

use crate::params;
use crate::report::ReportEntry;

fn entry(
    test: &str,
    statistic: f64,
    pass: bool,
    n: usize,
    config: serde_json::Map<String, serde_json::Value>,
) -> ReportEntry {
    ReportEntry { test: test.to_string(), statistic, p_value: None, pass, n, config }
}

/// Energy of the exact kink on `L = 30`, `h = 10⁻³`.
pub fn kink_energy() -> Result<Vec<ReportEntry>> {
    let g = Grid::with_spacing(30.0, 1e-3)?;
    let f = multi_soliton_config(&SolitonParams::kinks(vec![0.0])?, &g)?;
    let err = (energy(&f).total - 8.0).abs();
    Ok(vec![entry("kink_energy_error", err, err < 1e-5, 1, params![("L", 30.0), ("h", 1e-3)])])
}

fn random_sector_field(g: &Grid, q: i32, rng: &mut ChaCha8Rng) -> Result<FieldConfig> {
    let l = g.half_length();
    let mut v = if rng.random_bool(0.5) {
        // smooth sine modes on top of the affine profile
        FieldConfig::affine(*g, q).into_values()
    } else {
        let mut c: Vec<f64> = (0..q).map(|_| rng.random_range(-0.6 * l..0.6 * l)).collect();
        c.sort_by(f64::total_cmp);
        multi_soliton_field(&SolitonParams::kinks(c)?, g)?
    };
    let modes: Vec<f64> = (1..=8).map(|m| rng.random_range(-1.0..1.0) / m as f64).collect();
    let last = v.len() - 1;
    for (i, vi) in v.iter_mut().enumerate().take(last).skip(1) {
        let s = (g.x(i) + l) / (2.0 * l);
        *vi += modes.iter().enumerate().map(|(m, a)| a * ((m + 1) as f64 * PI * s).sin()).sum::<f64>();
    }
    FieldConfig::new(*g, v, q)
}

/// `E(φ) ≥ 8|Q|` on random smooth fields in sectors 1 to 3.
pub fn bogomolny(seed: u64) -> Result<Vec<ReportEntry>> {
    let g = Grid::with_spacing(12.0, 0.01)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for k in 0..100 {
        let q = 1 + k % 3;
        let f = random_sector_field(&g, q, &mut rng)?;
        worst = worst.min(energy(&f).total - 8.0 * q as f64);
    }
    Ok(vec![entry("bogomolny_min_excess", worst, worst >= -1e-3, 100, params![("L", 12.0), ("h", 0.01)])])
}

/// Slope of `log(E(m_{0,d}) − 16)` against `d ∈ {5, …, 12}`.
pub fn energy_gap_scaling() -> Result<Vec<ReportEntry>> {
    let g = Grid::with_spacing(30.0, 1e-3)?;
    let ds: Vec<f64> = (5..=12).map(f64::from).collect();
    let mut logs = Vec::with_capacity(ds.len());
    for &d in &ds {
        let v = multi_soliton_field(&SolitonParams::kinks(vec![-d / 2.0, d / 2.0])?, &g)?;
        logs.push((energy_of_values(&g, &v).total - 16.0).ln());
    }
    let slope = linear_fit(&ds, &logs).map_or(f64::NAN, |(_, b)| b);
    Ok(vec![entry("energy_gap_slope", slope, (slope + 1.0).abs() <= 0.05, ds.len(), params![("L", 30.0), ("h", 1e-3)])])
}

/// Many-body expansion of the energy-density gap against the direct form.
pub fn fq_identity(seed: u64) -> Result<Vec<ReportEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_diff = 0.0f64;
    let mut min_value = f64::INFINITY;
    let draws = 10_000;
    for _ in 0..draws {
        let k = rng.random_range(1..=4usize);
        let mut c: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
        c.sort_by(f64::total_cmp);
        let sign = if rng.random_bool(0.5) { Sign::Kink } else { Sign::Antikink };
        let p = SolitonParams::new(c, sign, None)?;
        let x = rng.random_range(-15.0..15.0);
        let direct = fq_direct(&p, x);
        worst_diff = worst_diff.max((direct - fq_expansion(&p, x)).abs());
        min_value = min_value.min(direct);
    }
    Ok(vec![
        entry("fq_expansion_max_difference", worst_diff, worst_diff < 1e-10, draws, params![]),
        entry("fq_direct_min", min_value, min_value >= -1e-12, draws, params![]),
    ])
}

/// Low spectrum of the one- and two-kink operators on `L = 20`, `h = 0.01`.
pub fn spectrum() -> Result<Vec<ReportEntry>> {
    let g = Grid::with_spacing(20.0, 0.01)?;
    let one = eigenpairs(&build_operator(&SolitonParams::kinks(vec![0.0])?, &g), 2)?;
    let two = eigenpairs(&build_operator(&SolitonParams::kinks(vec![-5.0, 5.0])?, &g), 3)?;
    let cfg = || params![("L", 20.0), ("h", 0.01)];
    let cluster = two.eigenvalues[0].abs().max(two.eigenvalues[1].abs());
    Ok(vec![
        entry("single_kink_lambda1_abs", one.eigenvalues[0].abs(), one.eigenvalues[0].abs() < 1e-3, 1, cfg()),
        entry("single_kink_lambda2", one.eigenvalues[1], one.eigenvalues[1] >= 0.99, 1, cfg()),
        entry("two_kink_cluster_max_abs", cluster, cluster <= 1e-2, 2, params![("L", 20.0), ("h", 0.01), ("gap", 10.0)]),
        entry("two_kink_lambda3", two.eigenvalues[2], two.eigenvalues[2] >= 0.99, 1, params![("L", 20.0), ("h", 0.01), ("gap", 10.0)]),
    ])
}

/// OU diagonal, resolvent identity and bulk decay rates on `L = 20`, `h = 0.01`.
pub fn green_functions() -> Result<Vec<ReportEntry>> {
    let l = 20.0;
    let g = Grid::with_spacing(l, 0.01)?;
    let ou = ornstein_uhlenbeck(&g);
    let free = projected_green(&ou, None)?;
    let diag_err = (free.at(0.0, 0.0) - l.tanh() / 2.0).abs();
    let ou_rate = decay_rate_fit(&free, (-5.0, 5.0))?;
    drop(free);
    // kink well away from the bulk window so the fit sees the free decay
    let p = SolitonParams::kinks(vec![10.0])?;
    let frame = tangent_frame(&p, &g)?;
    let gk = projected_green(&build_operator(&p, &g), Some(&frame))?;
    let kink_rate = decay_rate_fit(&gk, (-5.0, 5.0))?;
    let g_ou = projected_green(&ou, Some(&frame))?;
    let residual = resolvent_residual(&gk, &g_ou, &p)?;
    let cfg = || params![("L", l), ("h", 0.01)];
    Ok(vec![
        entry("ou_diagonal_error", diag_err, diag_err <= 1e-4, 1, cfg()),
        entry("resolvent_residual", residual, residual <= 1e-6, g.n_interior(), params![("L", l), ("h", 0.01), ("center", 10.0)]),
        entry("ou_decay_rate", ou_rate, (ou_rate - 1.0).abs() <= 0.05, 1, params![("L", l), ("h", 0.01), ("window", [-5.0, 5.0])]),
        entry(
            "projected_decay_rate",
            kink_rate,
            (kink_rate - 1.0).abs() <= 0.05,
            1,
            params![("L", l), ("h", 0.01), ("window", [-5.0, 5.0]), ("center", 10.0)],
        ),
    ])
}

/// Bridge covariance at probe pairs and the mean squared `L²` norm.
pub fn bridge_moments(seed: u64) -> Result<Vec<ReportEntry>> {
    let (l, h, eps) = (5.0, 0.05, 0.5);
    let g = Grid::with_spacing(l, h)?;
    let cfg = SamplerConfig::new(eps, 0, g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = [(-4.0, -3.0), (-2.0, 0.0), (0.0, 0.0), (1.0, 3.5), (-4.5, 4.5)];
    let idx: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (g.nearest_index(a), g.nearest_index(b))).collect();
    let draws = 100_000;
    let mut prods = vec![Vec::with_capacity(draws); pairs.len()];
    let mut norms = Vec::with_capacity(draws);
    for _ in 0..draws {
        let v = sample_bridge(&cfg, &mut rng);
        for (k, &(i, j)) in idx.iter().enumerate() {
            prods[k].push(v[i] * v[j]);
        }
        norms.push(h * v.iter().map(|x| x * x).sum::<f64>());
    }
    let mut out = Vec::new();
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let z = (mean(&prods[k]) - bridge_covariance(a, b, eps, l)).abs() / iid_standard_error(&prods[k]);
        out.push(entry("bridge_covariance_z", z, z <= 3.0, draws, params![("x", a), ("y", b), ("eps", eps), ("L", l)]));
    }
    let z = (mean(&norms) - 2.0 / 3.0 * eps * l * l).abs() / iid_standard_error(&norms);
    out.push(entry("bridge_second_moment_z", z, z <= 3.0, draws, params![("eps", eps), ("L", l), ("h", h)]));
    Ok(out)
}

/// Gauss–Newton projection of perturbed single kinks against a scan.
pub fn projection(seed: u64) -> Result<Vec<ReportEntry>> {
    let (l, h) = (10.0, 0.02);
    let g = Grid::with_spacing(l, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_center = 0.0f64;
    let mut worst_residual = 0.0f64;
    let fields = 5;
    for _ in 0..fields {
        let c = rng.random_range(-3.0..3.0);
        let target = rng.random_range(0.05..0.5);
        let bumps: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| (rng.random_range(-6.0..6.0), rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut v = multi_soliton_field(&SolitonParams::kinks(vec![c])?, &g)?;
        let bump: Vec<f64> = (0..g.n_nodes())
            .map(|i| {
                if i == 0 || i + 1 == g.n_nodes() {
                    return 0.0;
                }
                let x = g.x(i);
                bumps.iter().map(|(b, w, a)| a * (-((x - b) / w).powi(2)).exp()).sum()
            })
            .collect();
        let norm = (h * bump.iter().map(|x| x * x).sum::<f64>()).sqrt();
        for (vi, b) in v.iter_mut().zip(&bump) {
            *vi += target * b / norm;
        }
        let f = FieldConfig::new(g, v, 1)?;
        let d = project_to_manifold(&f, None, &ProjectionConfig::default())?;
        let xi = d.centers()[0];
        let scan = scan_minimizer(&f, xi - 1.0, xi + 1.0, 1e-4)?;
        worst_center = worst_center.max((xi - scan).abs());
        worst_residual = worst_residual.max(d.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs())));
    }
    let cfg = || params![("L", l), ("h", h), ("max_distance", 0.5)];
    Ok(vec![
        entry("projection_center_vs_scan", worst_center, worst_center <= 10.0 * h, fields, cfg()),
        entry("projection_orthogonality_residual", worst_residual, worst_residual <= 1e-8, fields, cfg()),
    ])
}

fn scan_minimizer(f: &FieldConfig, lo: f64, hi: f64, step: f64) -> Result<f64> {
    let g = f.grid();
    let h = g.spacing();
    let mut best = (lo, f64::INFINITY);
    let steps = ((hi - lo) / step).round() as usize;
    for k in 0..=steps {
        let xi = lo + k as f64 * step;
        let m = multi_soliton_field(&SolitonParams::kinks(vec![xi])?, g)?;
        let d: f64 = f.values().iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * h;
        if d < best.1 {
            best = (xi, d);
        }
    }
    Ok(best.0)
}

pub type Check = fn(u64) -> Result<Vec<ReportEntry>>;

/// Criterion number, name and check, in order.
pub fn all_checks() -> Vec<(u8, &'static str, Check)> {
    vec![
        (1, "kink energy", |_| kink_energy()),
        (2, "Bogomolny bound", bogomolny),
        (3, "energy-gap scaling", |_| energy_gap_scaling()),
        (4, "F_Q identity", fq_identity),
        (5, "spectrum", |_| spectrum()),
        (6, "Green functions", |_| green_functions()),
        (7, "bridge sampler", bridge_moments),
        (8, "projection", projection),
    ]
}
