//! Experiment configuration: a versioned JSON document.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kinkfield::sampler::BridgeMode;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    VerifyDeterministic,
    Spectrum,
    Sample,
    Analyze,
    FreeEnergy,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::VerifyDeterministic, Mode::Spectrum, Mode::Sample, Mode::Analyze, Mode::FreeEnergy];

    pub fn name(self) -> &'static str {
        match self {
            Mode::VerifyDeterministic => "verify-deterministic",
            Mode::Spectrum => "spectrum",
            Mode::Sample => "sample",
            Mode::Analyze => "analyze",
            Mode::FreeEnergy => "free-energy",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthPreset {
    PaperScaling,
}

/// Half-length of the domain: fixed, or `L = ε^{−1/2+η}` per ladder entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthSpec {
    Fixed(f64),
    Preset {
        preset: LengthPreset,
        #[serde(default = "default_eta")]
        eta: f64,
    },
}

fn default_eta() -> f64 {
    0.1
}

impl LengthSpec {
    pub fn half_length(&self, eps: f64) -> f64 {
        match *self {
            LengthSpec::Fixed(l) => l,
            LengthSpec::Preset { preset: LengthPreset::PaperScaling, eta } => eps.powf(-0.5 + eta),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub spacing: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { spacing: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerBlock {
    pub pcn_beta: f64,
    pub n_steps: u64,
    pub burn_in: u64,
    pub thinning: u64,
    pub chains: usize,
    pub bridge: BridgeMode,
    pub autotune: bool,
    /// Write a binary checkpoint per chain at the end of sample mode.
    pub checkpoint: bool,
}

impl Default for SamplerBlock {
    fn default() -> Self {
        Self {
            pcn_beta: 0.2,
            n_steps: 20_000,
            burn_in: 2_000,
            thinning: 10,
            chains: 1,
            bridge: BridgeMode::Exact,
            autotune: true,
            checkpoint: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisBlock {
    /// Thresholds of the distance tail `P(dist ≥ δ)`.
    pub deltas: Vec<f64>,
    /// Sign check of the tail slope in `1/ε`.
    pub slope_test: bool,
    /// Minimal ratio of tails between consecutive ladder entries at `ratio_delta`.
    pub tail_ratio: Option<f64>,
    pub ratio_delta: f64,
    /// Require the mean distance to decrease along the ladder.
    pub distance_trend: bool,
    /// Collision threshold; `None` uses `|log √(ε log(1/ε))|`.
    pub min_gap: Option<f64>,
    /// `L̄ = L − window_trim` for the center laws.
    pub window_trim: f64,
    pub alpha: f64,
    pub gap_tolerance: f64,
    pub min_effective_samples: f64,
    pub histogram_bins: usize,
    pub meta_test: bool,
    pub probes: Vec<f64>,
    /// Index pairs into `probes`; empty means diagonal and neighbours.
    pub probe_pairs: Vec<(usize, usize)>,
    pub margin: f64,
    /// Relative tolerance of covariance against `½e^{−|x−y|}`.
    pub covariance_tolerance: f64,
    /// Compare against exact Gaussian draws from the projected kernel.
    pub loop_closing_draws: usize,
    pub tube_radius: Option<f64>,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            deltas: vec![0.5, 1.0, 2.0],
            slope_test: true,
            tail_ratio: None,
            ratio_delta: 1.0,
            distance_trend: false,
            min_gap: None,
            window_trim: 3.0,
            alpha: 0.01,
            gap_tolerance: 0.1,
            min_effective_samples: 0.0,
            histogram_bins: 20,
            meta_test: false,
            probes: Vec::new(),
            probe_pairs: Vec::new(),
            margin: 10.0,
            covariance_tolerance: 0.2,
            loop_closing_draws: 0,
            tube_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumBlock {
    /// Centers of the kinks defining the operator; empty means evenly spaced.
    pub centers: Vec<f64>,
    pub eigenvalues: usize,
    pub green: bool,
    /// Half-width of the window written to `green.csv`.
    pub bulk_window: f64,
    pub green_points: usize,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { centers: Vec::new(), eigenvalues: 8, green: true, bulk_window: 5.0, green_points: 101 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreeEnergyBlock {
    pub lambdas: Vec<f64>,
    /// Require the estimates to approach `−8` along the ladder.
    pub trend_test: bool,
}

impl Default for FreeEnergyBlock {
    fn default() -> Self {
        Self { lambdas: vec![0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 1.0], trend_test: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// When set, must agree with the mode given on the command line.
    pub mode: Option<Mode>,
    pub eps: Vec<f64>,
    pub charge: i32,
    pub length: LengthSpec,
    pub grid: GridSpec,
    pub sampler: SamplerBlock,
    pub analysis: AnalysisBlock,
    pub spectrum: SpectrumBlock,
    pub free_energy: FreeEnergyBlock,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mode: None,
            eps: vec![0.4, 0.2, 0.1],
            charge: 1,
            length: LengthSpec::Fixed(15.0),
            grid: GridSpec::default(),
            sampler: SamplerBlock::default(),
            analysis: AnalysisBlock::default(),
            spectrum: SpectrumBlock::default(),
            free_energy: FreeEnergyBlock::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Syntax { path: PathBuf, line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.eps.is_empty() {
            return Err(field_error("eps", "the ε ladder is empty"));
        }
        for (i, &e) in self.eps.iter().enumerate() {
            if !(e > 0.0 && e.is_finite()) {
                return Err(field_error(format!("eps[{i}]"), format!("ε must be positive, got {e}")));
            }
            if i > 0 && e >= self.eps[i - 1] {
                return Err(field_error(format!("eps[{i}]"), "the ε ladder must be strictly decreasing"));
            }
        }
        match self.length {
            LengthSpec::Fixed(l) if !(l > 0.0 && l.is_finite()) => {
                return Err(field_error("length", format!("half-length must be positive, got {l}")));
            }
            LengthSpec::Preset { eta, .. } if !(eta > 0.0 && eta < 0.5) => {
                return Err(field_error("length.eta", format!("η must lie in (0, 1/2), got {eta}")));
            }
            _ => {}
        }
        if !(self.grid.spacing > 0.0 && self.grid.spacing.is_finite()) {
            return Err(field_error("grid.spacing", "spacing must be positive"));
        }
        for &e in &self.eps {
            let l = self.length.half_length(e);
            if self.grid.spacing >= l {
                return Err(field_error("grid.spacing", format!("spacing {} leaves no interior nodes at L = {l}", self.grid.spacing)));
            }
        }
        let s = &self.sampler;
        if !(s.pcn_beta > 0.0 && s.pcn_beta <= 1.0) {
            return Err(field_error("sampler.pcn_beta", "must lie in (0, 1]"));
        }
        if s.burn_in >= s.n_steps {
            return Err(field_error("sampler.burn_in", "must be below sampler.n_steps"));
        }
        if s.thinning == 0 {
            return Err(field_error("sampler.thinning", "must be at least 1"));
        }
        if s.chains == 0 {
            return Err(field_error("sampler.chains", "must be at least 1"));
        }
        if let BridgeMode::Fourier { modes: 0 } = s.bridge {
            return Err(field_error("sampler.bridge", "Fourier bridge needs at least one mode"));
        }
        let a = &self.analysis;
        if a.deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(field_error("analysis.deltas", "thresholds must be positive"));
        }
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return Err(field_error("analysis.alpha", "must lie in (0, 1)"));
        }
        if a.histogram_bins == 0 {
            return Err(field_error("analysis.histogram_bins", "must be at least 1"));
        }
        if !(a.margin >= 0.0) {
            return Err(field_error("analysis.margin", "must be non-negative"));
        }
        if let Some((i, _)) = a.probe_pairs.iter().enumerate().find(|(_, &(p, q))| p >= a.probes.len() || q >= a.probes.len()) {
            return Err(field_error(format!("analysis.probe_pairs[{i}]"), "index outside analysis.probes"));
        }
        for &e in &self.eps {
            let l = self.length.half_length(e);
            if let Some(x) = a.probes.iter().find(|x| x.abs() >= l) {
                return Err(field_error("analysis.probes", format!("probe {x} outside (−{l}, {l})")));
            }
            if a.window_trim < 0.0 || a.window_trim >= l {
                return Err(field_error("analysis.window_trim", format!("must lie in [0, {l})")));
            }
        }
        let lam = &self.free_energy.lambdas;
        if lam.len() < 2 || lam[0] != 0.0 || *lam.last().unwrap() != 1.0 || lam.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field_error("free_energy.lambdas", "must increase strictly from 0 to 1"));
        }
        if self.spectrum.green_points < 2 {
            return Err(field_error("spectrum.green_points", "must be at least 2"));
        }
        Ok(())
    }

    pub fn half_length(&self, eps: f64) -> f64 {
        self.length.half_length(eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_json(text, Path::new("test.json"))
    }

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(parse("{}").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"{
            "schema_version": 1, "mode": "analyze", "eps": [0.3, 0.1], "charge": -2,
            "length": {"preset": "paper-scaling", "eta": 0.2},
            "grid": {"spacing": 0.05},
            "sampler": {"bridge": {"fourier": {"modes": 64}}, "chains": 3},
            "analysis": {"probes": [-1.0, 0.5], "probe_pairs": [[0, 1]], "tail_ratio": 2.0, "window_trim": 0.1},
            "seed": 12
        }"#;
        let a = parse(text).unwrap();
        let b = parse(&a.to_json()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.length.half_length(0.1), 0.1f64.powf(-0.3));
    }

    #[test]
    fn syntax_errors_report_line() {
        match parse("{\n  \"eps\": [0.1,\n}") {
            Err(ConfigError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse("{\n\n  \"epsilon\": [0.1]\n}") {
            Err(ConfigError::Syntax { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("epsilon"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn field_errors_name_the_field() {
        let field = |t: &str| match parse(t) {
            Err(ConfigError::Field { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field(r#"{"eps": [0.1, 0.2]}"#), "eps[1]");
        assert_eq!(field(r#"{"eps": [-0.1]}"#), "eps[0]");
        assert_eq!(field(r#"{"schema_version": 7}"#), "schema_version");
        assert_eq!(field(r#"{"sampler": {"burn_in": 50, "n_steps": 10}}"#), "sampler.burn_in");
        assert_eq!(field(r#"{"analysis": {"probes": [99.0]}}"#), "analysis.probes");
        assert_eq!(field(r#"{"free_energy": {"lambdas": [0.0, 0.5]}}"#), "free_energy.lambdas");
    }

    #[test]
    fn modes_parse_by_name() {
        for m in Mode::ALL {
            assert_eq!(Mode::parse(m.name()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert_eq!(Mode::parse("bogus"), None);
    }
}
