//! Deterministic test report. Nothing time-dependent goes in here.

use serde::Serialize;
use serde_json::{Map, Value};

use kinkfield::analysis::TestOutcome;

use crate::config::{ExperimentConfig, Mode, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportEntry {
    pub test: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
    pub n: usize,
    /// Parameters the entry was computed at.
    pub config: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub results: Vec<ReportEntry>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

/// Builds a small parameter map: `params![("eps", 0.1), ("delta", 1.0)]`.
#[macro_export]
macro_rules! params {
    ($(($k:expr, $v:expr)),* $(,)?) => {{
        #[allow(unused_mut)]
        let mut m = serde_json::Map::new();
        $( m.insert($k.to_string(), serde_json::json!($v)); )*
        m
    }};
}

/// Compact rendering for terminal lines; the report keeps full precision.
pub fn short(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && a.is_finite() && !(1e-3..1e6).contains(&a) {
        format!("{x:.4e}")
    } else {
        format!("{x:.6}")
    }
}

impl Report {
    pub fn new(mode: Mode, config: ExperimentConfig) -> Self {
        Self { schema_version: SCHEMA_VERSION, mode, config, results: Vec::new(), warnings: Vec::new(), pass: true }
    }

    pub fn push(&mut self, test: impl Into<String>, statistic: f64, p_value: Option<f64>, pass: bool, n: usize, config: Map<String, Value>) {
        self.results.push(ReportEntry { test: test.into(), statistic, p_value, pass, n, config });
        self.pass = self.results.iter().all(|r| r.pass);
    }

    pub fn push_outcome(&mut self, o: &TestOutcome, config: Map<String, Value>) {
        self.push(o.test.clone(), o.statistic, o.p_value, o.pass, o.n, config);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// 0 when everything passed cleanly, 2 with warnings, 1 on any failure.
    pub fn exit_code(&self) -> i32 {
        if !self.pass {
            1
        } else if !self.warnings.is_empty() {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One line per entry for the terminal.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .results
            .iter()
            .map(|r| {
                let p = r.p_value.map(|p| format!(" p={p:.4}")).unwrap_or_default();
                let cfg = if r.config.is_empty() { String::new() } else { format!(" {}", Value::Object(r.config.clone())) };
                format!("[{}] {} statistic={}{p} n={}{cfg}", if r.pass { "PASS" } else { "FAIL" }, r.test, short(r.statistic), r.n)
            })
            .collect();
        lines.extend(self.warnings.iter().map(|w| format!("[WARN] {w}")));
        lines
    }
}
