//! Statistical checks of sampled fields against their limiting laws.

mod beta;
mod centers;
mod concentration;
mod covariance;
mod ks;

pub use beta::{beta_stats, BetaMarginal};
pub use centers::{center_histogram, ks_meta_test, order_statistics_test, CenterSamples, HistogramRow, OrderStatisticsReport};
pub use concentration::{
    concentration_curve, CollisionRow, ConcentrationInput, ConcentrationReport, DistanceSummary, SlopeFit, TailRow,
};
pub use covariance::{fluctuation_covariance, ou_reference, FluctuationCovariance, FluctuationSample};
pub use ks::{kolmogorov_survival, ks_statistic, ks_test, KsResult};

use serde::Serialize;

/// One pass/fail entry of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestOutcome {
    pub test: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
    pub n: usize,
}

impl TestOutcome {
    pub fn new(test: impl Into<String>, statistic: f64, p_value: Option<f64>, pass: bool, n: usize) -> Self {
        Self { test: test.into(), statistic, p_value, pass, n }
    }
}
