use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::error::{invalid, Result};

/// Law of the `j`-th of `Q` ordered uniforms on `[−L̄, L̄]`: a
/// `Beta(j, Q + 1 − j)` variable rescaled to the interval.
#[derive(Clone, Debug)]
pub struct BetaMarginal {
    pub j: usize,
    pub q: usize,
    pub half_length: f64,
    pub mean: f64,
    pub variance: f64,
    law: Beta,
}

impl BetaMarginal {
    fn unit(&self, x: f64) -> f64 {
        (x + self.half_length) / (2.0 * self.half_length)
    }

    pub fn density(&self, x: f64) -> f64 {
        let u = self.unit(x);
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        self.law.pdf(u) / (2.0 * self.half_length)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.law.cdf(self.unit(x).clamp(0.0, 1.0))
    }
}

pub fn beta_stats(j: usize, q: usize, half_length: f64) -> Result<BetaMarginal> {
    if j == 0 || j > q {
        return Err(invalid(format!("index {j} outside 1..={q}")));
    }
    if !(half_length > 0.0) {
        return Err(invalid(format!("half-length must be positive, got {half_length}")));
    }
    let (a, b) = (j as f64, (q + 1 - j) as f64);
    let law = Beta::new(a, b).map_err(|e| invalid(e.to_string()))?;
    let width = 2.0 * half_length;
    let mean = -half_length + width * a / (a + b);
    let variance = width * width * a * b / ((a + b).powi(2) * (a + b + 1.0));
    Ok(BetaMarginal { j, q, half_length, mean, variance, law })
}
