//! Experiment runner for the `kinkfield` toolkit.

// NaN must fail the range checks, hence `!(x > 0.0)` style comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod modes;
pub mod output;
pub mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use config::{ConfigError, ExperimentConfig, Mode};
use modes::{Context, ModeError};
use output::OutputDir;
use report::Report;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_WARN: i32 = 2;
pub const EXIT_CONFIG: i32 = 64;
pub const EXIT_IO: i32 = 74;

pub const THREADS_ENV: &str = "KINKFIELD_THREADS";

#[derive(Clone, Debug, Parser)]
#[command(name = "kinkfield", version, about = "Lattice sine-Gordon experiments")]
pub struct Args {
    /// verify-deterministic, spectrum, sample, analyze or free-energy
    pub mode: String,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output directory of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub code: i32,
    pub report: Option<Report>,
    pub messages: Vec<String>,
}

impl RunOutcome {
    fn early(code: i32, message: String) -> Self {
        Self { code, report: None, messages: vec![message] }
    }
}

/// Worker threads: `KINKFIELD_THREADS` if set, the machine's parallelism otherwise.
pub fn thread_budget(var: Option<&str>) -> Result<usize, ConfigError> {
    match var {
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(ConfigError::Field { field: THREADS_ENV.into(), message: format!("expected a positive integer, got {v:?}") }),
        },
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn load(args: &Args) -> Result<(Mode, ExperimentConfig), ConfigError> {
    let mode = Mode::parse(&args.mode).ok_or_else(|| ConfigError::Field {
        field: "mode".into(),
        message: format!(
            "unknown mode {:?}, expected one of {}",
            args.mode,
            Mode::ALL.map(Mode::name).join(", ")
        ),
    })?;
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(ConfigError::Field {
                field: "mode".into(),
                message: format!("config is for {m}, command line asks for {mode}"),
            });
        }
    }
    cfg.mode = Some(mode);
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok((mode, cfg))
}

/// Executes one mode and writes `report.json` and `manifest.json`.
pub fn run(args: &Args, threads_var: Option<&str>) -> RunOutcome {
    let started = Instant::now();
    let (mode, cfg) = match load(args) {
        Ok(v) => v,
        Err(e) => return RunOutcome::early(EXIT_CONFIG, format!("config error: {e}")),
    };
    let threads = match thread_budget(threads_var) {
        Ok(t) => t,
        Err(e) => return RunOutcome::early(EXIT_CONFIG, format!("config error: {e}")),
    };
    let mut out = match OutputDir::create(&cfg.output_dir) {
        Ok(o) => o,
        Err(e) => return RunOutcome::early(EXIT_IO, format!("i/o error: {e}")),
    };
    let mut report = Report::new(mode, cfg.clone());
    let mut ctx = Context { config: &cfg, threads, out: &mut out };
    let result = match mode {
        Mode::VerifyDeterministic => modes::verify::run(&mut ctx, &mut report),
        Mode::Spectrum => modes::spectrum::run(&mut ctx, &mut report),
        Mode::Sample => modes::sample::run(&mut ctx, &mut report),
        Mode::Analyze => modes::analyze::run(&mut ctx, &mut report),
        Mode::FreeEnergy => modes::free_energy::run(&mut ctx, &mut report),
    };
    let mut messages = Vec::new();
    match result {
        Ok(()) => {}
        Err(ModeError::Io(e)) => return RunOutcome { code: EXIT_IO, report: Some(report), messages: vec![format!("i/o error: {e}")] },
        Err(ModeError::Core(e)) => {
            messages.push(format!("error: {e}"));
            report.push("mode_completed", f64::NAN, None, false, 0, params![("error", e.to_string())]);
        }
    }
    let written = out
        .write_file("report.json", report.to_json().as_bytes())
        .and_then(|_| out.write_manifest(mode.name(), started.elapsed().as_secs_f64()).map(|_| ()));
    if let Err(e) = written {
        return RunOutcome { code: EXIT_IO, report: Some(report), messages: vec![format!("i/o error: {e}")] };
    }
    messages.extend(report.summary_lines());
    let code = report.exit_code();
    messages.push(format!(
        "{mode}: {} of {} tests passed, {} warning(s), exit {code}",
        report.results.iter().filter(|r| r.pass).count(),
        report.results.len(),
        report.warnings.len()
    ));
    RunOutcome { code, report: Some(report), messages }
}
