//! Uniform Dirichlet grids on `[-L, L]`, lattice fields pinned to a
//! topological sector, and the discrete sine-Gordon energy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, KinkError, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Uniform grid with `n_interior` free nodes and two pinned endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    half_length: f64,
    n_interior: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(half_length: f64, n_interior: usize) -> Result<Self> {
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(invalid(format!("half length must be positive, got {half_length}")));
        }
        if n_interior < 3 {
            return Err(invalid(format!("need at least 3 interior nodes, got {n_interior}")));
        }
        let spacing = 2.0 * half_length / (n_interior as f64 + 1.0);
        Ok(Self { half_length, n_interior, spacing })
    }

    /// Grid whose spacing is as close to `h` as an integer node count allows.
    pub fn with_spacing(half_length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid(format!("spacing must be positive, got {h}")));
        }
        let intervals = (2.0 * half_length / h).round() as usize;
        Self::new(half_length, intervals.saturating_sub(1))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Total node count including both endpoints.
    pub fn n_nodes(&self) -> usize {
        self.n_interior + 2
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinate of node `i`; the endpoints are exactly `±L`.
    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_interior + 1 {
            self.half_length
        } else {
            -self.half_length + i as f64 * self.spacing
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.x(i)).collect()
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = ((x + self.half_length) / self.spacing).round();
        (t.max(0.0) as usize).min(self.n_interior + 1)
    }

    /// Linear interpolation of a full node vector at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.n_nodes());
        let t = ((x + self.half_length) / self.spacing).clamp(0.0, (self.n_interior + 1) as f64);
        let i = (t.floor() as usize).min(self.n_interior);
        let w = t - i as f64;
        values[i] * (1.0 - w) + values[i + 1] * w
    }
}

/// Lattice field with explicit, pinned boundary nodes `φ_0 = 0`, `φ_{n+1} = 2πQ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfig {
    grid: Grid,
    values: Vec<f64>,
    charge: i32,
}

impl FieldConfig {
    pub fn new(grid: Grid, mut values: Vec<f64>, charge: i32) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(invalid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite field value at node {i}")));
        }
        let right = TWO_PI * charge as f64;
        let last = values.len() - 1;
        if values[0].abs() > 1e-9 || (values[last] - right).abs() > 1e-9 {
            return Err(invalid(format!(
                "boundary values ({}, {}) do not pin sector Q={charge}",
                values[0], values[last]
            )));
        }
        values[0] = 0.0;
        values[last] = right;
        Ok(Self { grid, values, charge })
    }

    /// Builds a field from interior values, attaching the pinned endpoints.
    pub fn from_interior(grid: Grid, interior: &[f64], charge: i32) -> Result<Self> {
        if interior.len() != grid.n_interior() {
            return Err(invalid("interior length does not match grid"));
        }
        let mut values = Vec::with_capacity(grid.n_nodes());
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(TWO_PI * charge as f64);
        Self::new(grid, values, charge)
    }

    /// The affine reference profile `ℓ^Q`.
    pub fn affine(grid: Grid, charge: i32) -> Self {
        let values = affine_profile(&grid, charge);
        Self { grid, values, charge }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn charge(&self) -> i32 {
        self.charge
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `ℓ^Q(x) = πQ(x+L)/L` sampled at every node, endpoints exact.
pub fn affine_profile(grid: &Grid, charge: i32) -> Vec<f64> {
    let l = grid.half_length();
    let q = charge as f64;
    let mut v: Vec<f64> = (0..grid.n_nodes()).map(|i| PI * q * (grid.x(i) + l) / l).collect();
    let last = v.len() - 1;
    v[0] = 0.0;
    v[last] = TWO_PI * q;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// Winding number of raw node values, `(φ_last − φ_0)/2π` rounded.
pub fn degree_of_values(values: &[f64]) -> Result<i64> {
    let (Some(first), Some(last)) = (values.first(), values.last()) else {
        return Err(invalid("empty field"));
    };
    let winding = (last - first) / TWO_PI;
    let q = winding.round();
    if (winding - q).abs() > 0.25 {
        return Err(KinkError::InconsistentSector(last - first));
    }
    Ok(q as i64)
}

pub fn topological_degree(f: &FieldConfig) -> Result<i64> {
    degree_of_values(f.values())
}

/// `1 − cos φ`, written to keep precision near the vacua.
#[inline]
pub fn cosine_potential(phi: f64) -> f64 {
    let s = (0.5 * phi).sin();
    2.0 * s * s
}

/// Discrete energy of a full node vector on `grid`.
pub fn energy_of_values(grid: &Grid, values: &[f64]) -> EnergyReport {
    let h = grid.spacing();
    let kinetic = values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (2.0 * h);
    let potential = h * potential_sum(&values[1..values.len() - 1]);
    EnergyReport { kinetic, potential, total: kinetic + potential }
}

pub fn energy(f: &FieldConfig) -> EnergyReport {
    energy_of_values(f.grid(), f.values())
}

/// `Σ (1 − cos φ_i)` over the given slice.
pub fn potential_sum(values: &[f64]) -> f64 {
    values.iter().map(|&p| cosine_potential(p)).sum()
}

/// Gradient `−Δ_h φ + sin φ` at interior nodes of a full node vector.
///
/// No pinning is assumed, so this also accepts unconstrained test profiles.
pub fn grad_energy_values(grid: &Grid, values: &[f64]) -> Vec<f64> {
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    values
        .windows(3)
        .map(|w| -(w[2] - 2.0 * w[1] + w[0]) * inv_h2 + w[1].sin())
        .collect()
}

pub fn grad_energy(f: &FieldConfig) -> Vec<f64> {
    grad_energy_values(f.grid(), f.values())
}

/// Discrete `L²` inner product. Accepts full node vectors (endpoints carry
/// zero weight) or interior-only vectors.
pub fn l2_inner(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    if f.len() != g.len() {
        return Err(invalid(format!("length mismatch {} vs {}", f.len(), g.len())));
    }
    let (f, g) = interior_slices(f, g, grid)?;
    Ok(grid.spacing() * dot(f, g))
}

pub fn l2_norm(f: &[f64], grid: &Grid) -> Result<f64> {
    l2_inner(f, f, grid).map(f64::sqrt)
}

pub fn l2_distance(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    if f.len() != g.len() {
        return Err(invalid(format!("length mismatch {} vs {}", f.len(), g.len())));
    }
    let (f, g) = interior_slices(f, g, grid)?;
    let s: f64 = f.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((grid.spacing() * s).sqrt())
}

fn interior_slices<'a>(f: &'a [f64], g: &'a [f64], grid: &Grid) -> Result<(&'a [f64], &'a [f64])> {
    let n = grid.n_interior();
    if f.len() == n + 2 {
        Ok((&f[1..=n], &g[1..=n]))
    } else if f.len() == n {
        Ok((f, g))
    } else {
        Err(invalid(format!("vector length {} fits neither {} nor {}", f.len(), n, n + 2)))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn small_grid_nodes() {
        let g = Grid::new(1.0, 3).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.nodes(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn fine_grid_spacing() {
        let g = Grid::new(10.0, 1999).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.01, epsilon = 1e-15);
        assert_eq!(g.x(2000), 10.0);
        assert_eq!(g.x(0), -10.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(0.0, 10), Err(KinkError::InvalidArgument(_))));
        assert!(matches!(Grid::new(-1.0, 10), Err(KinkError::InvalidArgument(_))));
        assert!(matches!(Grid::new(1.0, 2), Err(KinkError::InvalidArgument(_))));
    }

    #[test]
    fn degree_of_pinned_fields() {
        let g = Grid::new(5.0, 99).unwrap();
        for q in [-2, 0, 1, 3] {
            assert_eq!(topological_degree(&FieldConfig::affine(g, q)).unwrap(), q as i64);
        }
    }

    #[test]
    fn degree_rejects_corrupted_boundary() {
        let v = vec![0.0, 1.0, 2.0, TWO_PI * 0.5];
        assert!(matches!(degree_of_values(&v), Err(KinkError::InconsistentSector(_))));
        let v = vec![0.0, 1.0, TWO_PI * 1.2];
        assert_eq!(degree_of_values(&v).unwrap(), 1);
    }

    #[test]
    fn field_rejects_wrong_pinning() {
        let g = Grid::new(1.0, 3).unwrap();
        assert!(FieldConfig::new(g, vec![0.0; 5], 1).is_err());
        assert!(FieldConfig::new(g, vec![0.0; 4], 0).is_err());
        assert!(FieldConfig::new(g, vec![0.0, f64::NAN, 0.0, 0.0, 0.0], 0).is_err());
        assert!(FieldConfig::new(g, vec![0.0; 5], 0).is_ok());
    }

    #[test]
    fn vacuum_has_zero_energy() {
        let g = Grid::new(4.0, 50).unwrap();
        let e = energy(&FieldConfig::affine(g, 0));
        assert_eq!(e.total, 0.0);
    }

    #[test]
    fn affine_line_energy() {
        // kinetic (2π)²/(2·2L); potential ∫(1 − cos ℓ) = 2L since ∫cos ℓ over a full period vanishes
        let l = 10.0;
        let g = Grid::with_spacing(l, 0.001).unwrap();
        let e = energy(&FieldConfig::affine(g, 1));
        assert_abs_diff_eq!(e.kinetic, TWO_PI * TWO_PI / (4.0 * l), epsilon = 1e-9);
        assert_abs_diff_eq!(e.kinetic, 0.9870, epsilon = 1e-4);
        let oracle = simpson(|x| 1.0 - (PI * (x + l) / l).cos(), -l, l, 200_000);
        assert_abs_diff_eq!(oracle, 20.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.potential, oracle, epsilon = 1e-6);
    }

    #[test]
    fn gradient_of_constant_pi_vanishes() {
        let g = Grid::new(3.0, 20).unwrap();
        let v = vec![PI; g.n_nodes()];
        for gi in grad_energy_values(&g, &v) {
            assert!(gi.abs() < 1e-12);
        }
    }

    #[test]
    fn inner_product_of_constants() {
        let g = Grid::with_spacing(1.0, 0.01).unwrap();
        let one = vec![1.0; g.n_nodes()];
        let ip = l2_inner(&one, &one, &g).unwrap();
        assert_abs_diff_eq!(ip, 2.0 - g.spacing(), epsilon = 1e-12);
        assert!(l2_inner(&one, &one[1..], &g).is_err());
        let interior = vec![1.0; g.n_interior()];
        assert_eq!(l2_inner(&interior, &interior, &g).unwrap(), ip);
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    fn random_field(g: &Grid, q: i32, coeffs: &[f64]) -> Vec<f64> {
        let l = g.half_length();
        let mut v = affine_profile(g, q);
        for (i, vi) in v.iter_mut().enumerate() {
            let x = g.x(i);
            for (m, c) in coeffs.iter().enumerate() {
                *vi += c * ((m + 1) as f64 * PI * (x + l) / (2.0 * l)).sin();
            }
        }
        v
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 6),
            dirs in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let g = Grid::with_spacing(5.0, 0.05).unwrap();
            let phi = random_field(&g, 1, &coeffs);
            // smooth interior perturbation vanishing at the endpoints
            let delta = random_field(&g, 0, &dirs);
            let grad = grad_energy_values(&g, &phi);
            let directional = g.spacing() * dot(&grad, &delta[1..delta.len() - 1]);
            let step = 1e-5;
            let shifted = |s: f64| -> f64 {
                let p: Vec<f64> = phi.iter().zip(&delta).map(|(a, d)| a + s * d).collect();
                energy_of_values(&g, &p).total
            };
            let fd = (shifted(step) - shifted(-step)) / (2.0 * step);
            let scale = directional.abs().max(1e-3);
            prop_assert!((fd - directional).abs() / scale < 1e-5, "fd {fd} vs {directional}");
        }

        #[test]
        fn inner_product_is_symmetric_bilinear_positive(
            a in proptest::collection::vec(-3.0f64..3.0, 12),
            b in proptest::collection::vec(-3.0f64..3.0, 12),
            c in proptest::collection::vec(-3.0f64..3.0, 12),
            s in -2.0f64..2.0,
        ) {
            let g = Grid::new(2.0, 10).unwrap();
            let ab = l2_inner(&a, &b, &g).unwrap();
            prop_assert!((ab - l2_inner(&b, &a, &g).unwrap()).abs() < 1e-12);
            let sa_c: Vec<f64> = a.iter().zip(&c).map(|(x, y)| s * x + y).collect();
            let lhs = l2_inner(&sa_c, &b, &g).unwrap();
            let rhs = s * ab + l2_inner(&c, &b, &g).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9);
            if a[1..11].iter().any(|x| x.abs() > 1e-6) {
                prop_assert!(l2_inner(&a, &a, &g).unwrap() > 0.0);
            }
        }

        #[test]
        fn bogomolny_bound_on_random_sector_fields(
            q in 1i32..=3,
            coeffs in proptest::collection::vec(-2.0f64..2.0, 8),
        ) {
            let g = Grid::with_spacing(12.0, 0.05).unwrap();
            let phi = random_field(&g, q, &coeffs);
            let e = energy_of_values(&g, &phi).total;
            prop_assert!(e >= 8.0 * q as f64 - 1e-3, "E = {e} for Q = {q}");
        }
    }
}
