//! Small descriptive statistics used by the chain diagnostics and tests.

/// Window constant of the automatic windowing rule.
const SOKAL_C: f64 = 5.0;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Integrated autocorrelation time `τ = 1 + 2Σ_{t≤M} ρ(t)`, with `M` the
/// smallest lag satisfying `M ≥ 5τ(M)`. Constant series give `τ = 1`.
pub fn autocorrelation_time(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for lag in 1..n / 2 {
        let c: f64 = centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        tau += 2.0 * c / c0;
        if lag as f64 >= SOKAL_C * tau {
            break;
        }
    }
    tau.max(1.0)
}

pub fn effective_sample_size(x: &[f64]) -> f64 {
    x.len() as f64 / autocorrelation_time(x)
}

/// Standard error of the mean corrected for autocorrelation.
pub fn standard_error(x: &[f64]) -> f64 {
    (variance(x) * autocorrelation_time(x) / x.len() as f64).sqrt()
}

/// Standard error of the mean for independent samples.
pub fn iid_standard_error(x: &[f64]) -> f64 {
    (variance(x) / x.len() as f64).sqrt()
}

/// Least-squares line `y ≈ a + b x`, returning `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}
