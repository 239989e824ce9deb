//! Linearized Schrödinger operators around multi-soliton configurations.

mod green;
pub mod tridiag;

pub use green::{
    commutator_norm, coercivity, decay_rate_fit, ou_green_closed, projected_green, resolvent_residual,
    GreenMatrix, KktSolver,
};

use crate::error::{invalid, Result};
use crate::grid::Grid;
use crate::solitons::{sech, SolitonParams};
use tridiag::{lowest_eigenpairs, SymTridiagonal};

/// `A = −Δ_h + diag(W)` with Dirichlet boundary conditions on interior nodes.
#[derive(Clone, Debug)]
pub struct SchrodingerOperator {
    pub grid: Grid,
    pub centers: Vec<f64>,
    /// `W_i = 1 − 2Σ_j sech²(x_i − ξ_j)`.
    pub potential: Vec<f64>,
    pub matrix: SymTridiagonal,
}

impl SchrodingerOperator {
    pub fn from_potential(grid: Grid, centers: Vec<f64>, potential: Vec<f64>) -> Result<Self> {
        let n = grid.n_interior();
        if potential.len() != n {
            return Err(invalid(format!("potential has {} entries, grid has {n}", potential.len())));
        }
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let diag = potential.iter().map(|w| 2.0 * inv_h2 + w).collect();
        let matrix = SymTridiagonal::new(diag, vec![-inv_h2; n - 1]);
        Ok(Self { grid, centers, potential, matrix })
    }

    /// Wells `−2sech²` shifted from the free potential `W − 1`.
    pub fn wells(&self) -> Vec<f64> {
        self.potential.iter().map(|w| w - 1.0).collect()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.apply(u)
    }
}

pub fn build_operator(p: &SolitonParams, grid: &Grid) -> SchrodingerOperator {
    let potential = (1..=grid.n_interior())
        .map(|i| {
            let x = grid.x(i);
            1.0 - 2.0 * p.centers().iter().map(|&c| sech(x - c).powi(2)).sum::<f64>()
        })
        .collect();
    SchrodingerOperator::from_potential(*grid, p.centers().to_vec(), potential)
        .expect("potential length matches the grid")
}

/// The free operator `−Δ_h + 1`.
pub fn ornstein_uhlenbeck(grid: &Grid) -> SchrodingerOperator {
    SchrodingerOperator::from_potential(*grid, Vec::new(), vec![1.0; grid.n_interior()])
        .expect("potential length matches the grid")
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Interior vectors, orthonormal in the discrete `L²` product.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `‖Aψ − λψ‖_{L²}`.
    pub residuals: Vec<f64>,
}

pub fn eigenpairs(op: &SchrodingerOperator, m: usize) -> Result<SpectralResult> {
    let (eigenvalues, vectors) = lowest_eigenpairs(&op.matrix, m)?;
    let h = op.grid.spacing();
    let scale = 1.0 / h.sqrt();
    let mut residuals = Vec::with_capacity(m);
    let eigenvectors = vectors
        .into_iter()
        .zip(&eigenvalues)
        .map(|(v, &l)| {
            let av = op.apply(&v);
            residuals.push(av.iter().zip(&v).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt());
            v.into_iter().map(|x| x * scale).collect()
        })
        .collect();
    Ok(SpectralResult { eigenvalues, eigenvectors, residuals })
}
