use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::beta::beta_stats;
use super::ks::ks_test;
use super::TestOutcome;
use crate::error::{invalid, KinkError, Result};
use crate::sampler::SampleRecord;
use crate::stats::{iid_standard_error, mean};

const MIN_ROWS: usize = 200;

/// Ordered center vectors, one row per retained sample.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSamples {
    pub rows: Vec<Vec<f64>>,
    /// `L̄`, half-length of the window the centers live in.
    pub half_length: f64,
    pub extraction_failures: usize,
    pub collision_filtered: usize,
    pub outside_window: usize,
}

impl CenterSamples {
    pub fn new(rows: Vec<Vec<f64>>, half_length: f64) -> Result<Self> {
        if !(half_length > 0.0) {
            return Err(invalid(format!("half-length must be positive, got {half_length}")));
        }
        let q = rows.first().map_or(0, Vec::len);
        for r in &rows {
            if r.len() != q || r.windows(2).any(|w| w[0] > w[1]) {
                return Err(invalid("center rows must be sorted and of equal length"));
            }
            if r.iter().any(|c| c.abs() > half_length) {
                return Err(invalid("center outside [−L̄, L̄]"));
            }
        }
        Ok(Self { rows, half_length, extraction_failures: 0, collision_filtered: 0, outside_window: 0 })
    }

    /// Keeps samples with `q` extracted centers, all gaps `≥ min_gap` and all
    /// centers inside `[−L̄, L̄]`; the rest are counted by reason.
    pub fn from_records(records: &[SampleRecord], q: usize, half_length: f64, min_gap: f64) -> Result<Self> {
        let mut cs = Self::new(Vec::new(), half_length)?;
        for r in records {
            let Some(c) = r.centers.as_ref().filter(|c| c.len() == q) else {
                cs.extraction_failures += 1;
                continue;
            };
            if c.windows(2).any(|w| w[1] - w[0] < min_gap) {
                cs.collision_filtered += 1;
            } else if c.iter().any(|x| x.abs() > half_length) {
                cs.outside_window += 1;
            } else {
                cs.rows.push(c.clone());
            }
        }
        Ok(cs)
    }

    pub fn q(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Image under `x ↦ −x`, re-sorted.
    pub fn reflected(&self) -> Self {
        let rows = self.rows.iter().map(|r| r.iter().rev().map(|x| -x).collect()).collect();
        Self { rows, ..self.clone() }
    }

    /// Every `stride`-th row.
    pub fn thinned(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        Self { rows: self.rows.iter().step_by(stride).cloned().collect(), ..self.clone() }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderStatisticsReport {
    pub pooled: TestOutcome,
    pub per_j: Vec<TestOutcome>,
    pub gap: Option<TestOutcome>,
    pub mean_gap: Option<f64>,
    pub expected_gap: f64,
    pub gap_std_error: Option<f64>,
}

impl OrderStatisticsReport {
    pub fn ks_pass(&self) -> bool {
        self.pooled.pass && self.per_j.iter().all(|t| t.pass)
    }

    pub fn pass(&self) -> bool {
        self.ks_pass() && self.gap.as_ref().is_none_or(|g| g.pass)
    }

    pub fn outcomes(&self) -> Vec<TestOutcome> {
        let mut v = vec![self.pooled.clone()];
        v.extend(self.per_j.iter().cloned());
        v.extend(self.gap.clone());
        v
    }
}

/// KS tests of the pooled centers against `Uniform(−L̄, L̄)` and of each
/// ordered center against its Beta marginal, plus the mean gap against
/// `2L̄/(Q + 1)` with relative tolerance `gap_tolerance`.
pub fn order_statistics_test(cs: &CenterSamples, alpha: f64, gap_tolerance: f64) -> Result<OrderStatisticsReport> {
    if cs.len() < MIN_ROWS {
        return Err(KinkError::InsufficientData(format!("{} center samples, need {MIN_ROWS}", cs.len())));
    }
    let q = cs.q();
    let l = cs.half_length;
    let pooled: Vec<f64> = cs.rows.iter().flatten().copied().collect();
    let ks = ks_test(&pooled, |x| ((x + l) / (2.0 * l)).clamp(0.0, 1.0))?;
    let pooled = TestOutcome::new("centers_pooled_uniform_ks", ks.statistic, Some(ks.p_value), ks.p_value > alpha, ks.n);
    let mut per_j = Vec::with_capacity(q);
    for j in 0..q {
        let law = beta_stats(j + 1, q, l)?;
        let ks = ks_test(&cs.column(j), |x| law.cdf(x))?;
        per_j.push(TestOutcome::new(
            format!("center_{}_beta_ks", j + 1),
            ks.statistic,
            Some(ks.p_value),
            ks.p_value > alpha,
            ks.n,
        ));
    }
    let expected_gap = 2.0 * l / (q as f64 + 1.0);
    let (gap, mean_gap, gap_std_error) = if q >= 2 {
        let gaps: Vec<f64> = cs.rows.iter().flat_map(|r| r.windows(2).map(|w| w[1] - w[0])).collect();
        let m = mean(&gaps);
        let rel = m / expected_gap - 1.0;
        let outcome = TestOutcome::new("mean_gap_relative_error", rel, None, rel.abs() <= gap_tolerance, gaps.len());
        (Some(outcome), Some(m), Some(iid_standard_error(&gaps)))
    } else {
        (None, None, None)
    };
    Ok(OrderStatisticsReport { pooled, per_j, gap, mean_gap, expected_gap, gap_std_error })
}

fn sorted_uniform_rows(q: usize, half_length: f64, rows: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| {
            let mut r: Vec<f64> = (0..q).map(|_| rng.random_range(-half_length..half_length)).collect();
            r.sort_by(f64::total_cmp);
            r
        })
        .collect()
}

/// Runs the KS part of the order-statistics test on synthetic sorted
/// uniforms for each seed and returns how many seeds pass.
pub fn ks_meta_test(q: usize, half_length: f64, rows: usize, seeds: std::ops::Range<u64>, alpha: f64) -> Result<usize> {
    let mut passes = 0;
    for seed in seeds {
        let cs = CenterSamples::new(sorted_uniform_rows(q, half_length, rows, seed), half_length)?;
        if order_statistics_test(&cs, alpha, f64::INFINITY)?.ks_pass() {
            passes += 1;
        }
    }
    Ok(passes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub left: f64,
    pub right: f64,
    pub counts: Vec<usize>,
    /// Expected counts under the Beta marginals.
    pub reference: Vec<f64>,
}

pub fn center_histogram(cs: &CenterSamples, bins: usize) -> Result<Vec<HistogramRow>> {
    if bins == 0 {
        return Err(invalid("histogram needs at least one bin"));
    }
    let q = cs.q();
    let l = cs.half_length;
    let laws = (1..=q).map(|j| beta_stats(j, q, l)).collect::<Result<Vec<_>>>()?;
    let width = 2.0 * l / bins as f64;
    let n = cs.len() as f64;
    let mut rows: Vec<HistogramRow> = (0..bins)
        .map(|b| {
            let left = -l + b as f64 * width;
            let right = if b + 1 == bins { l } else { left + width };
            let reference = laws.iter().map(|law| n * (law.cdf(right) - law.cdf(left))).collect();
            HistogramRow { left, right, counts: vec![0; q], reference }
        })
        .collect();
    for r in &cs.rows {
        for (j, &x) in r.iter().enumerate() {
            let b = (((x + l) / width) as usize).min(bins - 1);
            rows[b].counts[j] += 1;
        }
    }
    Ok(rows)
}
