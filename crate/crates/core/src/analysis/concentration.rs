use serde::Serialize;

use crate::manifold::collision_scale;
use crate::stats::{linear_fit, mean, standard_error};

/// Distance-to-manifold samples (and minimal center gaps, when `Q ≥ 2`)
/// collected at one `ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationInput {
    pub eps: f64,
    pub distances: Vec<f64>,
    pub min_gaps: Vec<f64>,
}

/// Empirical `P(dist ≥ δ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub eps: f64,
    pub delta: f64,
    pub p: f64,
    pub n: usize,
}

/// Least-squares slope of `log P(dist ≥ δ)` against `1/ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub delta: f64,
    /// `None` when fewer than two `ε` have a nonzero tail.
    pub slope: Option<f64>,
    pub points: usize,
    pub negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollisionRow {
    pub eps: f64,
    /// `d_ε = |log √(ε log(1/ε))|`.
    pub scale: f64,
    pub fraction: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub eps: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub tails: Vec<TailRow>,
    pub slopes: Vec<SlopeFit>,
    /// Set when the slope fits could not be attempted.
    pub insufficient_data: Option<String>,
    pub collisions: Vec<CollisionRow>,
    pub distances: Vec<DistanceSummary>,
}

impl ConcentrationReport {
    pub fn tail(&self, eps: f64, delta: f64) -> Option<&TailRow> {
        self.tails.iter().find(|t| t.eps == eps && t.delta == delta)
    }
}

pub fn concentration_curve(inputs: &[ConcentrationInput], deltas: &[f64]) -> ConcentrationReport {
    let mut tails = Vec::with_capacity(inputs.len() * deltas.len());
    let mut distances = Vec::with_capacity(inputs.len());
    let mut collisions = Vec::new();
    for inp in inputs {
        let n = inp.distances.len();
        for &delta in deltas {
            let hits = inp.distances.iter().filter(|&&d| d >= delta).count();
            let p = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            tails.push(TailRow { eps: inp.eps, delta, p, n });
        }
        distances.push(DistanceSummary {
            eps: inp.eps,
            mean: mean(&inp.distances),
            std_error: standard_error(&inp.distances),
            n,
        });
        if !inp.min_gaps.is_empty() {
            let scale = collision_scale(inp.eps);
            let close = inp.min_gaps.iter().filter(|&&g| g < scale).count();
            collisions.push(CollisionRow {
                eps: inp.eps,
                scale,
                fraction: close as f64 / inp.min_gaps.len() as f64,
                n: inp.min_gaps.len(),
            });
        }
    }
    let mut eps_values: Vec<f64> = inputs.iter().map(|i| i.eps).collect();
    eps_values.sort_by(f64::total_cmp);
    eps_values.dedup();
    let insufficient_data = (eps_values.len() < 2)
        .then(|| format!("slope of the tail in 1/ε needs at least 2 values of ε, got {}", eps_values.len()));
    let slopes = if insufficient_data.is_some() {
        Vec::new()
    } else {
        deltas
            .iter()
            .map(|&delta| {
                let (x, y): (Vec<f64>, Vec<f64>) = tails
                    .iter()
                    .filter(|t| t.delta == delta && t.p > 0.0)
                    .map(|t| (1.0 / t.eps, t.p.ln()))
                    .unzip();
                let slope = linear_fit(&x, &y).map(|(_, b)| b);
                SlopeFit { delta, slope, points: x.len(), negative: slope.is_some_and(|s| s < 0.0) }
            })
            .collect()
    };
    ConcentrationReport { tails, slopes, insufficient_data, collisions, distances }
}
