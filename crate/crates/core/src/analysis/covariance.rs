use serde::Serialize;

use crate::error::{invalid, KinkError, Result};
use crate::grid::Grid;
use crate::manifold::NormalDecomposition;
use crate::stats::{mean, standard_error};

/// Normal field values at the probes together with the centers they came with.
#[derive(Clone, Debug, PartialEq)]
pub struct FluctuationSample {
    pub centers: Vec<f64>,
    pub values: Vec<f64>,
}

impl FluctuationSample {
    pub fn from_decomposition(d: &NormalDecomposition, grid: &Grid, probes: &[f64]) -> Self {
        let values = probes.iter().map(|&x| grid.interpolate(&d.normal, x)).collect();
        Self { centers: d.centers().to_vec(), values }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluctuationCovariance {
    pub probes: Vec<f64>,
    pub margin: f64,
    /// Empirical covariance of `v/√ε`.
    pub matrix: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    /// Samples kept for each pair.
    pub counts: Vec<Vec<usize>>,
    /// `½e^{−|x−y|}`.
    pub reference: Vec<Vec<f64>>,
    pub ratios: Vec<Vec<f64>>,
}

impl FluctuationCovariance {
    pub fn n_samples(&self) -> usize {
        self.counts.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let p = self.probes.len();
        let mut worst = 0.0f64;
        for a in 0..p {
            for b in 0..a {
                worst = worst.max((self.matrix[a][b] - self.matrix[b][a]).abs());
            }
        }
        worst
    }
}

pub fn ou_reference(x: f64, y: f64) -> f64 {
    0.5 * (-(x - y).abs()).exp()
}

/// Covariance of `v/√ε` at every probe pair. A sample contributes to a pair
/// only if both probes are at least `margin` away from all of its centers.
/// Standard errors account for autocorrelation along the sample sequence.
pub fn fluctuation_covariance(
    samples: &[FluctuationSample],
    eps: f64,
    probes: &[f64],
    margin: f64,
) -> Result<FluctuationCovariance> {
    if !(eps > 0.0) {
        return Err(invalid(format!("ε must be positive, got {eps}")));
    }
    if probes.is_empty() {
        return Err(invalid("no probes"));
    }
    if samples.iter().any(|s| s.values.len() != probes.len()) {
        return Err(invalid("sample values do not match the probes"));
    }
    let p = probes.len();
    let clear: Vec<Vec<bool>> = samples
        .iter()
        .map(|s| probes.iter().map(|&x| s.centers.iter().all(|c| (x - c).abs() >= margin)).collect())
        .collect();
    let scale = eps.sqrt();
    let mut out = FluctuationCovariance {
        probes: probes.to_vec(),
        margin,
        matrix: vec![vec![0.0; p]; p],
        std_errors: vec![vec![0.0; p]; p],
        counts: vec![vec![0; p]; p],
        reference: vec![vec![0.0; p]; p],
        ratios: vec![vec![0.0; p]; p],
    };
    for a in 0..p {
        for b in a..p {
            let kept: Vec<(f64, f64)> = samples
                .iter()
                .zip(&clear)
                .filter(|(_, c)| c[a] && c[b])
                .map(|(s, _)| (s.values[a] / scale, s.values[b] / scale))
                .collect();
            if kept.len() < 2 {
                return Err(KinkError::InsufficientData(format!(
                    "probe pair ({}, {}) has {} samples clear of the centers",
                    probes[a],
                    probes[b],
                    kept.len()
                )));
            }
            let ma = mean(&kept.iter().map(|k| k.0).collect::<Vec<_>>());
            let mb = mean(&kept.iter().map(|k| k.1).collect::<Vec<_>>());
            let prods: Vec<f64> = kept.iter().map(|(u, w)| (u - ma) * (w - mb)).collect();
            let n = kept.len() as f64;
            let cov = mean(&prods) * n / (n - 1.0);
            let se = standard_error(&prods);
            let r = ou_reference(probes[a], probes[b]);
            for (i, j) in [(a, b), (b, a)] {
                out.matrix[i][j] = cov;
                out.std_errors[i][j] = se;
                out.counts[i][j] = kept.len();
                out.reference[i][j] = r;
                out.ratios[i][j] = cov / r;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::tangent_frame;
    use crate::solitons::SolitonParams;
    use crate::spectral::{build_operator, projected_green};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn reference_values() {
        assert_eq!(ou_reference(1.0, 1.0), 0.5);
        assert!((ou_reference(-1.5, 1.5) - 0.024894).abs() < 1e-6);
    }

    #[test]
    fn exact_gaussian_draws_reproduce_the_projected_kernel() {
        let grid = Grid::with_spacing(10.0, 0.05).unwrap();
        let params = SolitonParams::kinks(vec![0.0]).unwrap();
        let op = build_operator(&params, &grid);
        let frame = tangent_frame(&params, &grid).unwrap();
        let g = projected_green(&op, Some(&frame)).unwrap();
        // Cov(v_i, v_j) = ε G_ij for the weight exp(−h vᵀAv / 2ε)
        let eig = g.values.clone().symmetric_eigen();
        let eps = 0.05;
        let probes = [-6.0, -4.0, 3.0, 3.5, 5.0, 7.0];
        let idx: Vec<usize> = probes.iter().map(|&x| grid.nearest_index(x) - 1).collect();
        let modes: Vec<(f64, Vec<f64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-10)
            .map(|(k, &l)| ((l * eps).sqrt(), idx.iter().map(|&i| eig.eigenvectors[(i, k)]).collect()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let samples: Vec<FluctuationSample> = (0..20_000)
            .map(|_| {
                let mut values = vec![0.0; probes.len()];
                for (s, u) in &modes {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    for (v, c) in values.iter_mut().zip(u) {
                        *v += s * z * c;
                    }
                }
                FluctuationSample { centers: vec![0.0], values }
            })
            .collect();
        let c = fluctuation_covariance(&samples, eps, &probes, 2.5).unwrap();
        for a in 0..probes.len() {
            for b in a..probes.len() {
                let target = g.at(probes[a], probes[b]);
                let err = (c.matrix[a][b] - target).abs();
                assert!(err < 3.5 * c.std_errors[a][b] + 1e-3, "({a},{b}): {} vs {target}", c.matrix[a][b]);
            }
        }
        // bulk diagonal close to the whole-line value
        for a in 0..probes.len() {
            assert!((c.ratios[a][a] - 1.0).abs() < 0.15, "{}", c.ratios[a][a]);
        }
        assert!(c.max_asymmetry() == 0.0);
        assert_eq!(c.counts[0][2], 20_000);
    }

    #[test]
    fn close_centers_exclude_samples() {
        let s = |c: f64| FluctuationSample { centers: vec![c], values: vec![0.1, -0.2] };
        let samples = vec![s(0.0), s(4.5), s(0.0), s(-5.0)];
        let c = fluctuation_covariance(&samples, 1.0, &[-4.0, 4.0], 2.0).unwrap();
        assert_eq!(c.counts[0][0], 3);
        assert_eq!(c.counts[1][1], 3);
        assert_eq!(c.counts[0][1], 2);
        assert!(matches!(
            fluctuation_covariance(&samples[1..2], 1.0, &[-4.0, 4.0], 2.0),
            Err(KinkError::InsufficientData(_))
        ));
    }
}

