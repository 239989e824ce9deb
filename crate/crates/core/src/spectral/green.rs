use nalgebra::{DMatrix, DVector};

use super::tridiag::{SymTridiagonal, TridiagLu};
use super::SchrodingerOperator;
use crate::error::{invalid, KinkError, Result};
use crate::grid::{dot, Grid};
use crate::manifold::TangentFrame;
use crate::solitons::{sech, SolitonParams};

/// Solver for the bordered system `[A T; Tᵀ 0]·[u; μ] = [b; 0]`, where the
/// columns of `T` are orthonormal tangents. Without tangents it reduces to
/// `A u = b` and requires `A` positive definite.
#[derive(Clone, Debug)]
pub struct KktSolver {
    h: f64,
    matrix: SymTridiagonal,
    lu: TridiagLu,
    tangents: Vec<Vec<f64>>,
    /// `A⁻¹ T`
    z: Vec<Vec<f64>>,
    /// `(h Tᵀ A⁻¹ T)⁻¹`
    schur_inv: DMatrix<f64>,
}

/// Below this many refinement sweeps the near-null direction of `A` is not
/// yet resolved to round-off.
const REFINEMENT_STEPS: usize = 3;

impl KktSolver {
    pub fn new(op: &SchrodingerOperator, frame: Option<&TangentFrame>) -> Result<Self> {
        let n = op.grid.n_interior();
        let h = op.grid.spacing();
        let matrix = op.matrix.clone();
        let tangents: Vec<Vec<f64>> = match frame {
            Some(fr) => {
                if fr.grid != op.grid {
                    return Err(invalid("frame and operator live on different grids"));
                }
                fr.orthonormal.iter().map(|t| t[1..=n].to_vec()).collect()
            }
            None => {
                if !TridiagLu::positive_definite(&matrix.diag, &matrix.off, 1e-6) {
                    return Err(KinkError::NeedsProjection);
                }
                Vec::new()
            }
        };
        let lu = match matrix.factor_shifted(0.0) {
            Ok(lu) => lu,
            Err(_) => return Err(KinkError::NumericalFailure("operator is exactly singular".into())),
        };
        let z: Vec<Vec<f64>> = tangents.iter().map(|t| lu.solve(t)).collect();
        let k = tangents.len();
        let schur = DMatrix::from_fn(k, k, |i, j| h * dot(&tangents[i], &z[j]));
        let schur_inv = schur
            .try_inverse()
            .ok_or_else(|| KinkError::NumericalFailure("singular Schur complement".into()))?;
        Ok(Self { h, matrix, lu, tangents, z, schur_inv })
    }

    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    fn correction(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let y = self.lu.solve(r1);
        if self.tangents.is_empty() {
            return (y, Vec::new());
        }
        let rhs = DVector::from_iterator(
            self.tangents.len(),
            self.tangents.iter().zip(r2).map(|(t, c)| self.h * dot(t, &y) - c),
        );
        let mu = &self.schur_inv * rhs;
        let mut u = y;
        for (zj, m) in self.z.iter().zip(mu.iter()) {
            for (a, b) in u.iter_mut().zip(zj) {
                *a -= m * b;
            }
        }
        (u, mu.iter().copied().collect())
    }

    /// Solution `u` (orthogonal to the tangents) of the bordered system.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let k = self.tangents.len();
        let (mut u, mut mu) = self.correction(b, &vec![0.0; k]);
        for _ in 0..REFINEMENT_STEPS {
            let au = self.matrix.apply(&u);
            let mut r1: Vec<f64> = b.iter().zip(&au).map(|(b, a)| b - a).collect();
            for (t, m) in self.tangents.iter().zip(&mu) {
                for (r, ti) in r1.iter_mut().zip(t) {
                    *r -= m * ti;
                }
            }
            let r2: Vec<f64> = self.tangents.iter().map(|t| -self.h * dot(t, &u)).collect();
            let (du, dmu) = self.correction(&r1, &r2);
            u.iter_mut().zip(&du).for_each(|(a, d)| *a += d);
            mu.iter_mut().zip(&dmu).for_each(|(a, d)| *a += d);
        }
        u
    }
}

/// Dense kernel `G(x_i, x_j)` on interior nodes, with `(Gf)(x_i) = h Σ_j G_ij f_j`.
#[derive(Clone, Debug)]
pub struct GreenMatrix {
    pub grid: Grid,
    pub values: DMatrix<f64>,
    pub projected: bool,
    pub frame: Option<TangentFrame>,
    solver: KktSolver,
}

impl GreenMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Kernel value at interior indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Kernel value at node indices; zero on the boundary.
    pub fn node_value(&self, a: usize, b: usize) -> f64 {
        let n = self.n();
        if a == 0 || b == 0 || a > n || b > n {
            0.0
        } else {
            self.values[(a - 1, b - 1)]
        }
    }

    /// Kernel value at the nodes nearest to `x` and `y`.
    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.node_value(self.grid.nearest_index(x), self.grid.nearest_index(y))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.values.diagonal().iter().copied().collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(G f)(x_i)` on interior nodes, by a fresh bordered solve.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.solver.solve(f)
    }

    pub fn solver(&self) -> &KktSolver {
        &self.solver
    }
}

/// Projected Green function `(P A P)⁻¹` on the normal space when a frame is
/// given; plain inverse of a positive definite operator otherwise.
pub fn projected_green(op: &SchrodingerOperator, frame: Option<&TangentFrame>) -> Result<GreenMatrix> {
    let solver = KktSolver::new(op, frame)?;
    let n = op.grid.n_interior();
    let h = op.grid.spacing();
    let mut values = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0 / h;
        let u = solver.solve(&e);
        e[j] = 0.0;
        values.column_mut(j).copy_from_slice(&u);
    }
    Ok(GreenMatrix { grid: op.grid, values, projected: frame.is_some(), frame: frame.cloned(), solver })
}

/// `sinh(L − max)·sinh(L + min)/sinh(2L)`, evaluated without overflow.
pub fn ou_green_closed(x: f64, y: f64, l: f64) -> f64 {
    let a = (l - x.max(y)).max(0.0);
    let b = (l + x.min(y)).max(0.0);
    let c = 2.0 * l;
    // sinh a sinh b / sinh c = ½ e^{a+b−c} (1−e^{−2a})(1−e^{−2b}) / (1−e^{−2c})
    0.5 * (a + b - c).exp() * (-(-2.0 * a).exp_m1()) * (-(-2.0 * b).exp_m1()) / (-(-2.0 * c).exp_m1())
}

fn wells(grid: &Grid, centers: &[f64]) -> Vec<f64> {
    (1..=grid.n_interior())
        .map(|i| {
            let x = grid.x(i);
            -2.0 * centers.iter().map(|&c| sech(x - c).powi(2)).sum::<f64>()
        })
        .collect()
}

fn check_pair(g: &GreenMatrix, g_ou: &GreenMatrix) -> Result<()> {
    if g.grid != g_ou.grid {
        return Err(invalid("Green functions live on different grids"));
    }
    if g.projected != g_ou.projected {
        return Err(invalid("both Green functions must be projected with the same frame"));
    }
    if let (Some(a), Some(b)) = (&g.frame, &g_ou.frame) {
        if a.params.centers() != b.params.centers() {
            return Err(invalid("Green functions were projected with different frames"));
        }
    }
    Ok(())
}

/// Largest entry of `G − G_OU − G_OU W G` and of `G − G_OU − G W G_OU`, with
/// `W = −2Σ sech²(· − ξ_j)` and kernel products carrying the factor `h`.
pub fn resolvent_residual(g: &GreenMatrix, g_ou: &GreenMatrix, p: &SolitonParams) -> Result<f64> {
    check_pair(g, g_ou)?;
    residual_with_wells(g, g_ou, &wells(&g.grid, p.centers()))
}

fn residual_with_wells(g: &GreenMatrix, g_ou: &GreenMatrix, w: &[f64]) -> Result<f64> {
    let n = g.n();
    let mut worst = 0.0f64;
    let mut buf = vec![0.0; n];
    for j in 0..n {
        let gj = g.values.column(j);
        let oj = g_ou.values.column(j);
        buf.iter_mut().zip(gj.iter()).zip(w).for_each(|((b, x), wv)| *b = wv * x);
        let left = g_ou.apply(&buf);
        buf.iter_mut().zip(oj.iter()).zip(w).for_each(|((b, x), wv)| *b = wv * x);
        let right = g.apply(&buf);
        for i in 0..n {
            let base = gj[i] - oj[i];
            worst = worst.max((base + left[i]).abs()).max((base + right[i]).abs());
        }
    }
    Ok(worst)
}

/// Largest entry of `G_OU W_j G − G W_j G_OU` for the well of center `j`.
pub fn commutator_norm(g: &GreenMatrix, g_ou: &GreenMatrix, p: &SolitonParams, j: usize) -> Result<f64> {
    check_pair(g, g_ou)?;
    let c = *p.centers().get(j).ok_or_else(|| invalid(format!("no center {j}")))?;
    let w = wells(&g.grid, &[c]);
    let n = g.n();
    let mut worst = 0.0f64;
    let mut buf = vec![0.0; n];
    for col in 0..n {
        buf.iter_mut().zip(g.values.column(col).iter()).zip(&w).for_each(|((b, x), wv)| *b = wv * x);
        let a = g_ou.apply(&buf);
        buf.iter_mut().zip(g_ou.values.column(col).iter()).zip(&w).for_each(|((b, x), wv)| *b = wv * x);
        let b = g.apply(&buf);
        for i in 0..n {
            worst = worst.max((a[i] - b[i]).abs());
        }
    }
    Ok(worst)
}

/// Least-squares decay rate of `y ↦ G(x₀, y)` over `window`, `x₀` its midpoint.
pub fn decay_rate_fit(g: &GreenMatrix, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo < hi) || lo < -g.grid.half_length() || hi > g.grid.half_length() {
        return Err(invalid(format!("window [{lo}, {hi}] is not inside the domain")));
    }
    let x0 = 0.5 * (lo + hi);
    let i0 = g.grid.nearest_index(x0);
    let points: Vec<(f64, f64)> = (1..=g.n())
        .filter(|&i| {
            let y = g.grid.x(i);
            y >= lo && y <= hi
        })
        .map(|i| ((g.grid.x(i) - g.grid.x(i0)).abs(), g.node_value(i0, i)))
        .collect();
    if points.len() < 3 {
        return Err(KinkError::FitFailure("fewer than three nodes in the window".into()));
    }
    if let Some((d, v)) = points.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(KinkError::FitFailure(format!("kernel value {v} at distance {d} is not positive")));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(KinkError::FitFailure("degenerate distances".into()));
    }
    Ok(-sxy / sxx)
}

/// Smallest eigenvalue of `A` on the orthogonal complement of the frame,
/// from a dense eigen-decomposition of `P A P + c·h·T Tᵀ` with `c = 10`.
pub fn coercivity(op: &SchrodingerOperator, frame: &TangentFrame) -> Result<f64> {
    const TANGENT_WEIGHT: f64 = 10.0;
    let n = op.grid.n_interior();
    if n > 2500 {
        return Err(invalid(format!("dense coercivity check is limited to 2500 nodes, got {n}")));
    }
    let h = op.grid.spacing();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = op.matrix.diag[i];
        if i + 1 < n {
            a[(i, i + 1)] = op.matrix.off[i];
            a[(i + 1, i)] = op.matrix.off[i];
        }
    }
    let t = DMatrix::from_fn(n, frame.len(), |i, j| frame.orthonormal[j][i + 1]);
    let tt = &t * t.transpose() * h;
    let p = DMatrix::identity(n, n) - &tt;
    let m = &p * a * &p + tt * TANGENT_WEIGHT;
    let m = (&m + m.transpose()) * 0.5;
    let ev = m.symmetric_eigenvalues();
    ev.iter()
        .copied()
        .min_by(f64::total_cmp)
        .ok_or_else(|| KinkError::NumericalFailure("empty operator".into()))
}
