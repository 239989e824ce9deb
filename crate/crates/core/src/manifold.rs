//! Tangent frames, level-crossing center estimates and the nearest-point
//! projection of a lattice field onto the multi-soliton manifold.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, KinkError, Result};
use crate::grid::{degree_of_values, dot, l2_norm, FieldConfig, Grid, TWO_PI};
use crate::solitons::{multi_soliton_field, raw_tangents, Sign, SolitonParams};

/// Orthonormalized tangent vectors at a point of the manifold.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    pub grid: Grid,
    pub params: SolitonParams,
    /// `t_1..t_k`, orthonormal in the discrete `L²` product.
    pub orthonormal: Vec<Vec<f64>>,
    /// `∂_{ξ_j} m_ξ`.
    pub raw: Vec<Vec<f64>>,
    pub gram: DMatrix<f64>,
    /// `|γ|`, the determinant of the triangular change of basis.
    pub jacobian: f64,
}

impl TangentFrame {
    pub fn len(&self) -> usize {
        self.orthonormal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orthonormal.is_empty()
    }
}

/// Classical Gram–Schmidt on the raw tangents, in center order.
pub fn tangent_frame(p: &SolitonParams, grid: &Grid) -> Result<TangentFrame> {
    p.check_admissible(grid)?;
    let mut raw = raw_tangents(p, grid);
    // the pinned endpoints do not move with the centers
    for r in raw.iter_mut() {
        let last = r.len() - 1;
        r[0] = 0.0;
        r[last] = 0.0;
    }
    let h = grid.spacing();
    let ip = |a: &[f64], b: &[f64]| h * dot(&a[1..a.len() - 1], &b[1..b.len() - 1]);
    let k = raw.len();
    let gram = DMatrix::from_fn(k, k, |i, j| ip(&raw[i], &raw[j]));
    let mut orthonormal: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut jacobian = 1.0;
    for (j, r) in raw.iter().enumerate() {
        let coeffs: Vec<f64> = orthonormal.iter().map(|t| ip(r, t)).collect();
        let mut w = r.clone();
        for (c, t) in coeffs.iter().zip(&orthonormal) {
            for (wi, ti) in w.iter_mut().zip(t) {
                *wi -= c * ti;
            }
        }
        let norm = ip(&w, &w).sqrt();
        if !(norm > 1e-6 * gram[(j, j)].sqrt()) {
            return Err(KinkError::DegenerateFrame(format!(
                "tangent {j} is numerically dependent on its predecessors"
            )));
        }
        jacobian *= norm;
        w.iter_mut().for_each(|x| *x /= norm);
        orthonormal.push(w);
    }
    Ok(TangentFrame { grid: *grid, params: p.clone(), orthonormal, raw, gram, jacobian: jacobian.abs() })
}

/// `v − Σ ⟨v, t_j⟩ t_j`, for full node vectors or interior-only vectors.
pub fn normal_project(v: &[f64], frame: &TangentFrame) -> Result<Vec<f64>> {
    let n = frame.grid.n_interior();
    let offset = match v.len() {
        l if l == n + 2 => 1,
        l if l == n => 0,
        l => return Err(invalid(format!("vector length {l} does not match the frame grid"))),
    };
    let h = frame.grid.spacing();
    let mut out = v.to_vec();
    for t in &frame.orthonormal {
        let t = &t[1..=n];
        let c = h * dot(&out[offset..offset + n], t);
        for (o, ti) in out[offset..offset + n].iter_mut().zip(t) {
            *o -= c * ti;
        }
    }
    Ok(out)
}

/// Centers estimated as the first crossings of the odd-π levels.
pub fn initial_centers(f: &FieldConfig) -> Result<SolitonParams> {
    let q = degree_of_values(f.values())?;
    if q == 0 {
        return Err(KinkError::ExtractionFailure("sector Q = 0 has no solitons".into()));
    }
    let sign = Sign::of_charge(q);
    let s = sign.value();
    let grid = f.grid();
    let values = f.values();
    let mut centers = Vec::with_capacity(q.unsigned_abs() as usize);
    for j in 0..q.unsigned_abs() {
        let level = TWO_PI * j as f64 + std::f64::consts::PI;
        let crossing = values.windows(2).position(|w| s * w[0] < level && s * w[1] >= level);
        let Some(i) = crossing else {
            return Err(KinkError::ExtractionFailure(format!("field never reaches level {level}")));
        };
        let (a, b) = (s * values[i], s * values[i + 1]);
        centers.push(grid.x(i) + grid.spacing() * (level - a) / (b - a));
    }
    centers.sort_by(f64::total_cmp);
    SolitonParams::new(centers, sign, None)
}

/// Collision scale `|log √(ε log(1/ε))|`.
pub fn collision_scale(eps: f64) -> f64 {
    (eps * (1.0 / eps).ln()).sqrt().ln().abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub min_gap: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Radius of the tube inside which the projection is trusted; decompositions
    /// farther out are flagged, never discarded.
    pub tube_radius: Option<f64>,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { min_gap: 2.0, tol: 1e-8, max_iter: 50, tube_radius: None }
    }
}

impl ProjectionConfig {
    pub fn for_epsilon(eps: f64) -> Self {
        Self { min_gap: collision_scale(eps), ..Self::default() }
    }
}

/// `φ = m_ξ + v` with `v ⟂ ∂_{ξ_j} m_ξ`.
#[derive(Clone, Debug)]
pub struct NormalDecomposition {
    pub params: SolitonParams,
    pub normal: Vec<f64>,
    pub residuals: Vec<f64>,
    pub distance: f64,
    pub converged: bool,
    pub out_of_tube: bool,
    pub iterations: usize,
}

impl NormalDecomposition {
    pub fn centers(&self) -> &[f64] {
        self.params.centers()
    }

    /// `m_ξ + v`.
    pub fn reconstruct(&self, grid: &Grid) -> Result<Vec<f64>> {
        let m = multi_soliton_field(&self.params, grid)?;
        Ok(m.iter().zip(&self.normal).map(|(a, b)| a + b).collect())
    }
}

struct Evaluation {
    normal: Vec<f64>,
    residuals: Vec<f64>,
    tangents: Vec<Vec<f64>>,
    objective: f64,
}

fn evaluate(values: &[f64], p: &SolitonParams, grid: &Grid) -> Result<Evaluation> {
    let m = multi_soliton_field(p, grid)?;
    let normal: Vec<f64> = values.iter().zip(&m).map(|(a, b)| a - b).collect();
    let tangents = raw_tangents(p, grid);
    let h = grid.spacing();
    let n = grid.n_interior();
    let inner = &normal[1..=n];
    let residuals = tangents.iter().map(|t| h * dot(inner, &t[1..=n])).collect();
    let objective = 0.5 * h * dot(inner, inner);
    Ok(Evaluation { normal, residuals, tangents, objective })
}

/// Residuals below this are round-off of `h Σ v_i t_i` for `|v_i| ~ 2π·ulp`.
const RESIDUAL_FLOOR: f64 = 1e-12;

fn feasible(centers: &[f64], min_gap: f64, limit: f64) -> bool {
    centers.iter().all(|c| c.abs() <= limit) && centers.windows(2).all(|w| w[1] - w[0] >= min_gap)
}

/// Gauss–Newton projection onto the ordered multi-soliton manifold with
/// minimal center separation `cfg.min_gap`.
pub fn project_to_manifold(
    f: &FieldConfig,
    init: Option<&SolitonParams>,
    cfg: &ProjectionConfig,
) -> Result<NormalDecomposition> {
    let q = degree_of_values(f.values())?;
    let k = q.unsigned_abs() as usize;
    let grid = *f.grid();
    let mut params = match init {
        Some(p) => p.clone(),
        None => initial_centers(f)?,
    };
    if params.len() != k || (k > 0 && params.sign() != Sign::of_charge(q)) {
        return Err(invalid(format!("initial centers do not match sector Q = {q}")));
    }
    let limit = match params.truncation() {
        Some(r) => grid.half_length() - r - 1.0,
        None => grid.half_length(),
    };
    if !feasible(params.centers(), cfg.min_gap, limit) {
        // spread the initial guess onto the admissible simplex
        let mut c = params.centers().to_vec();
        for j in 1..c.len() {
            c[j] = c[j].max(c[j - 1] + cfg.min_gap);
        }
        for c in c.iter_mut() {
            *c = c.clamp(-limit, limit);
        }
        params = params.with_centers(c)?;
    }
    let values = f.values();
    let mut eval = evaluate(values, &params, &grid)?;
    let mut iterations = 1;
    let mut converged = false;
    loop {
        let vnorm = (2.0 * eval.objective).sqrt();
        let rmax = eval.residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        // on the manifold itself v and r both sit at round-off
        if rmax <= cfg.tol * vnorm.min(1.0) || rmax <= RESIDUAL_FLOOR {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        let h = grid.spacing();
        let n = grid.n_interior();
        let gram = DMatrix::from_fn(k, k, |i, j| {
            h * dot(&eval.tangents[i][1..=n], &eval.tangents[j][1..=n])
        });
        let rhs = DVector::from_column_slice(&eval.residuals);
        let step = gram
            .cholesky()
            .ok_or_else(|| KinkError::DegenerateFrame("Gram matrix is not positive definite".into()))?
            .solve(&rhs);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = params.centers().iter().zip(step.iter()).map(|(c, d)| c + scale * d).collect();
            if feasible(&trial, cfg.min_gap, limit) {
                let tp = params.with_centers(trial)?;
                let te = evaluate(values, &tp, &grid)?;
                // near the optimum the decrease drops below round-off of the objective
                if te.objective <= eval.objective * (1.0 + 8.0 * f64::EPSILON) {
                    accepted = Some((tp, te));
                    break;
                }
            }
            scale *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((tp, te)) => {
                params = tp;
                eval = te;
            }
            // the step runs into the collision boundary or cannot decrease
            // the objective: keep the last iterate unconverged
            None => break,
        }
    }
    let distance = l2_norm(&eval.normal, &grid)?;
    let out_of_tube = cfg.tube_radius.is_some_and(|r| distance >= r);
    Ok(NormalDecomposition {
        params,
        normal: eval.normal,
        residuals: eval.residuals,
        distance,
        converged,
        out_of_tube,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_inner;
    use crate::solitons::multi_soliton_config;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::with_spacing(20.0, 0.02).unwrap()
    }

    #[test]
    fn single_kink_frame() {
        let g = grid();
        let p = SolitonParams::kinks(vec![1.0]).unwrap();
        let fr = tangent_frame(&p, &g).unwrap();
        assert_abs_diff_eq!(fr.gram[(0, 0)], 8.0, epsilon = 1e-4);
        assert_abs_diff_eq!(fr.jacobian, 8f64.sqrt(), epsilon = 1e-4);
        for i in 0..g.n_nodes() {
            let expect = -crate::solitons::sech(g.x(i) - 1.0) / 2f64.sqrt();
            assert!((fr.orthonormal[0][i] - expect).abs() < 1e-4);
        }
        let t = &fr.orthonormal[0];
        assert_abs_diff_eq!(l2_inner(t, t, &g).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn separated_pair_is_almost_orthogonal() {
        let g = Grid::with_spacing(30.0, 0.02).unwrap();
        let p = SolitonParams::kinks(vec![-7.5, 7.5]).unwrap();
        let fr = tangent_frame(&p, &g).unwrap();
        // ⟨∂m_1, ∂m_2⟩ = 4∫sech(x)sech(x−d) = 8d/sinh d
        assert!(fr.gram[(0, 1)].abs() <= 1.01 * 8.0 * 15.0 / 15f64.sinh());
        // |γ| = ‖∂_x m‖^k (1 + O(e^{−cd}))
        assert!((fr.jacobian / 8.0 - 1.0).abs() < 1e-4, "γ = {}", fr.jacobian);
        for i in 0..2 {
            for j in 0..2 {
                let ip = l2_inner(&fr.orthonormal[i], &fr.orthonormal[j], &g).unwrap();
                assert_abs_diff_eq!(ip, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-8);
            }
        }
        for (j, &c) in p.centers().iter().enumerate() {
            for i in 0..g.n_nodes() {
                let bound = 5.0 * (-0.5 * (g.x(i) - c).abs()).exp();
                assert!(fr.orthonormal[j][i].abs() <= bound);
            }
        }
    }

    #[test]
    fn colliding_centers_are_degenerate() {
        let g = grid();
        let p = SolitonParams::kinks(vec![0.0, 0.0]).unwrap();
        assert!(matches!(tangent_frame(&p, &g), Err(KinkError::DegenerateFrame(_))));
    }

    #[test]
    fn projector_algebra() {
        let g = grid();
        let p = SolitonParams::kinks(vec![-4.0, 5.0]).unwrap();
        let fr = tangent_frame(&p, &g).unwrap();
        let killed = normal_project(&fr.orthonormal[0], &fr).unwrap();
        assert!(killed.iter().all(|x| x.abs() < 1e-10));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<f64> = (0..g.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pv = normal_project(&v, &fr).unwrap();
        let ppv = normal_project(&pv, &fr).unwrap();
        assert!(pv.iter().zip(&ppv).all(|(a, b)| (a - b).abs() < 1e-10));
        assert!(l2_norm(&pv, &g).unwrap() <= l2_norm(&v, &g).unwrap());
        let iv = &v[1..g.n_nodes() - 1];
        let ipv = normal_project(iv, &fr).unwrap();
        assert!(ipv.iter().zip(&pv[1..]).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn crossings_of_single_and_double_kinks() {
        let g = grid();
        let f = multi_soliton_config(&SolitonParams::kinks(vec![3.0]).unwrap(), &g).unwrap();
        let c = initial_centers(&f).unwrap();
        assert!((c.centers()[0] - 3.0).abs() <= g.spacing());

        let f = multi_soliton_config(&SolitonParams::kinks(vec![-4.0, 6.0]).unwrap(), &g).unwrap();
        let c = initial_centers(&f).unwrap();
        // oracle: bisection for the level crossings of the continuous profile
        let profile = |x: f64| {
            crate::solitons::kink_value(Sign::Kink, -4.0, x) + crate::solitons::kink_value(Sign::Kink, 6.0, x)
        };
        for (j, level) in [std::f64::consts::PI, 3.0 * std::f64::consts::PI].iter().enumerate() {
            let (mut a, mut b) = (-20.0, 20.0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if profile(mid) < *level {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let root = 0.5 * (a + b);
            assert!((c.centers()[j] - root).abs() <= g.spacing());
            let truth = [-4.0, 6.0][j];
            assert!((c.centers()[j] - truth).abs() <= (-10.0f64).exp() + g.spacing());
        }
    }

    #[test]
    fn vacuum_has_no_centers() {
        let f = FieldConfig::affine(grid(), 0);
        assert!(matches!(initial_centers(&f), Err(KinkError::ExtractionFailure(_))));
    }

    #[test]
    fn antikink_centers() {
        let g = grid();
        let p = SolitonParams::new(vec![-2.0, 7.0], Sign::Antikink, None).unwrap();
        let f = multi_soliton_config(&p, &g).unwrap();
        let c = initial_centers(&f).unwrap();
        assert_eq!(c.sign(), Sign::Antikink);
        assert!((c.centers()[0] + 2.0).abs() < 0.05 && (c.centers()[1] - 7.0).abs() < 0.05);
        let d = project_to_manifold(&f, None, &ProjectionConfig::default()).unwrap();
        assert!(d.converged && d.distance < 1e-8);
    }

    #[test]
    fn exact_point_is_a_fixed_point() {
        let g = grid();
        let p = SolitonParams::kinks(vec![2.5]).unwrap();
        let f = multi_soliton_config(&p, &g).unwrap();
        let d = project_to_manifold(&f, Some(&p), &ProjectionConfig::default()).unwrap();
        assert_eq!(d.iterations, 1);
        assert!(d.converged);
        assert_eq!(d.centers(), &[2.5]);
        assert!(d.normal.iter().all(|x| *x == 0.0));
    }

    fn bumpy_field(g: &Grid, centers: &[f64], amp: f64, seed: u64) -> FieldConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = SolitonParams::kinks(centers.to_vec()).unwrap();
        let mut v = multi_soliton_field(&p, g).unwrap();
        let bumps: Vec<(f64, f64, f64)> = (0..5)
            .map(|_| (rng.random_range(-8.0..8.0), rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0)))
            .collect();
        let n = v.len();
        for (i, vi) in v.iter_mut().enumerate().take(n - 1).skip(1) {
            let x = g.x(i);
            *vi += amp * bumps.iter().map(|(c, w, a)| a * (-((x - c) / w).powi(2)).exp()).sum::<f64>();
        }
        FieldConfig::new(*g, v, centers.len() as i32).unwrap()
    }

    fn scan_minimizer(f: &FieldConfig, lo: f64, hi: f64, step: f64) -> (f64, f64) {
        let g = f.grid();
        let mut best = (lo, f64::INFINITY);
        let mut xi = lo;
        while xi <= hi {
            let m = multi_soliton_field(&SolitonParams::kinks(vec![xi]).unwrap(), g).unwrap();
            let d = crate::grid::l2_distance(f.values(), &m, g).unwrap();
            if d < best.1 {
                best = (xi, d);
            }
            xi += step;
        }
        best
    }

    #[test]
    fn projection_matches_brute_force_scan() {
        let g = grid();
        let f = bumpy_field(&g, &[5.0], 0.01, 11);
        let d = project_to_manifold(&f, None, &ProjectionConfig::default()).unwrap();
        assert!(d.converged);
        let (xi_scan, dist_scan) = scan_minimizer(&f, 4.9, 5.1, 1e-4);
        assert!((d.centers()[0] - xi_scan).abs() < 0.02);
        assert!((d.centers()[0] - 5.0).abs() < 0.02);
        assert!((d.distance - dist_scan).abs() < 1e-6);
        assert!(d.residuals.iter().all(|r| r.abs() <= 1e-8));
    }

    #[test]
    fn reconstruction_is_exact() {
        let g = grid();
        let f = bumpy_field(&g, &[-5.0, 5.0], 0.3, 3);
        let d = project_to_manifold(&f, None, &ProjectionConfig::default()).unwrap();
        assert!(d.converged);
        let r = d.reconstruct(&g).unwrap();
        for (a, b) in r.iter().zip(f.values()) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
        let vn = d.distance;
        assert!(d.residuals.iter().all(|r| r.abs() <= 1e-8 * vn.min(1.0)));
    }

    #[test]
    fn projection_is_translation_equivariant() {
        let g = grid();
        let f = bumpy_field(&g, &[0.0], 0.2, 5);
        let shift = 50; // nodes
        let values = f.values();
        let n = values.len();
        let mut shifted = vec![0.0; n];
        for i in 0..n {
            shifted[i] = if i >= shift { values[i - shift] } else { 0.0 };
        }
        shifted[n - 1] = TWO_PI;
        let fs = FieldConfig::new(g, shifted, 1).unwrap();
        let a = project_to_manifold(&f, None, &ProjectionConfig::default()).unwrap();
        let b = project_to_manifold(&fs, None, &ProjectionConfig::default()).unwrap();
        let delta = shift as f64 * g.spacing();
        assert!((b.centers()[0] - a.centers()[0] - delta).abs() <= 2.0 * g.spacing());
    }

    #[test]
    fn collision_is_flagged_not_fatal() {
        let g = grid();
        // two kinks 1.0 apart projected with min gap 3
        let f = multi_soliton_config(&SolitonParams::kinks(vec![-0.5, 0.5]).unwrap(), &g).unwrap();
        let cfg = ProjectionConfig { min_gap: 3.0, ..ProjectionConfig::default() };
        let d = project_to_manifold(&f, None, &cfg).unwrap();
        assert!(d.centers()[1] - d.centers()[0] >= 3.0 - 1e-12);
        assert!(d.distance > 0.1);
    }

    #[test]
    fn tube_flag() {
        let g = grid();
        let f = bumpy_field(&g, &[1.0], 1.0, 9);
        let cfg = ProjectionConfig { tube_radius: Some(1e-3), ..ProjectionConfig::default() };
        let d = project_to_manifold(&f, None, &cfg).unwrap();
        assert!(d.out_of_tube);
    }

    #[test]
    fn collision_scale_values() {
        let e: f64 = 0.1;
        assert_abs_diff_eq!(collision_scale(e), (e * 10f64.ln()).sqrt().ln().abs(), epsilon = 1e-15);
        assert!(collision_scale(1e-6) > collision_scale(1e-2));
    }
}
