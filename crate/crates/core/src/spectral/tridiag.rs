//! Symmetric tridiagonal kernels: Sturm bisection, inverse iteration and a
//! pivoted LU factorization for shifted solves.

use crate::error::{KinkError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length must be n − 1");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_bound().max(1.0);
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = self.norm_bound().max(1.0);
        lo -= 1e-12 * scale;
        hi += 1e-12 * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Factorization of `self − shift·I` with partial pivoting.
    pub fn factor_shifted(&self, shift: f64) -> Result<TridiagLu> {
        TridiagLu::new(&self.diag, &self.off, shift)
    }
}

/// Gaussian elimination with row interchanges for a tridiagonal matrix;
/// the upper factor acquires a second superdiagonal.
#[derive(Clone, Debug)]
pub struct TridiagLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    pub fn new(diag: &[f64], off: &[f64], shift: f64) -> Result<Self> {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut du = off.to_vec();
        let mut dl = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return Err(KinkError::NumericalFailure("singular tridiagonal pivot".into()));
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                // swap rows i and i + 1
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            return Err(KinkError::NumericalFailure("singular tridiagonal pivot".into()));
        }
        Ok(Self { d, du, du2, dl, swapped })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i] * b[i + 2];
            }
            b[i] = s / self.d[i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `true` when the factored matrix has no non-positive eigenvalue, read
    /// off from the inertia of an unpivoted LDLᵀ sweep.
    pub fn positive_definite(diag: &[f64], off: &[f64], shift: f64) -> bool {
        let mut q = 1.0;
        for i in 0..diag.len() {
            q = diag[i] - shift - if i > 0 { off[i - 1] * off[i - 1] / q } else { 0.0 };
            if !(q > 0.0) {
                return false;
            }
        }
        true
    }
}

fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lowest `m` eigenpairs; vectors are Euclidean-normalized.
pub fn lowest_eigenpairs(t: &SymTridiagonal, m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = t.len();
    if m > n {
        return Err(KinkError::InvalidArgument(format!("requested {m} eigenpairs of a {n}×{n} matrix")));
    }
    let scale = t.norm_bound().max(1.0);
    let cluster_tol = 1e-3 * scale;
    let mut values: Vec<f64> = Vec::with_capacity(m);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut lambda = t.eigenvalue(j);
        if let Some(&prev) = values.last() {
            // separate (numerically) coincident shifts
            let sep = 10.0 * f64::EPSILON * scale;
            if lambda - prev < sep {
                lambda = prev + sep;
            }
        }
        let lu = match t.factor_shifted(lambda) {
            Ok(lu) => lu,
            Err(_) => t.factor_shifted(lambda + 100.0 * f64::EPSILON * scale)?,
        };
        // deterministic, non-degenerate start vector
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
        let cluster: Vec<usize> = (0..j).filter(|&i| (lambda - values[i]).abs() < cluster_tol).collect();
        let mut converged = false;
        for _ in 0..6 {
            orthogonalize(&mut x, &cluster, &vectors);
            let nx = euclid_norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            lu.solve_in_place(&mut x);
            orthogonalize(&mut x, &cluster, &vectors);
            let nx = euclid_norm(&x);
            if !nx.is_finite() || nx == 0.0 {
                return Err(KinkError::NumericalFailure("inverse iteration broke down".into()));
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let ax = t.apply(&x);
            let res = ax.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            if res <= 1e-13 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            let ax = t.apply(&x);
            let res = ax.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            if res > 1e-10 * scale {
                return Err(KinkError::NumericalFailure(format!("eigenpair {j} did not converge (residual {res:e})")));
            }
        }
        // fix the sign convention: largest component positive
        let pivot = x.iter().fold(0.0f64, |a, &v| if v.abs() > a.abs() { v } else { a });
        if pivot < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        values.push(lambda);
        vectors.push(x);
    }
    Ok((values, vectors))
}

fn orthogonalize(x: &mut [f64], cluster: &[usize], vectors: &[Vec<f64>]) {
    for &i in cluster {
        let c: f64 = x.iter().zip(&vectors[i]).map(|(a, b)| a * b).sum();
        for (a, b) in x.iter_mut().zip(&vectors[i]) {
            *a -= c * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        let (vals, vecs) = lowest_eigenpairs(&t, 5).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        for i in 0..5 {
            for j in 0..5 {
                let ip: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pivoted_solve_of_indefinite_matrix() {
        let t = SymTridiagonal::new(vec![0.0, 1.0, -2.0, 0.5], vec![3.0, 1.0, -1.0]);
        let lu = t.factor_shifted(0.0).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = lu.solve(&b);
        let r = t.apply(&x);
        for (a, b) in r.iter().zip(&b) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!TridiagLu::positive_definite(&t.diag, &t.off, 0.0));
        assert!(TridiagLu::positive_definite(&[2.0; 4], &[-1.0; 3], 0.0));
    }

    proptest! {
        #[test]
        fn agrees_with_dense_eigensolver(
            diag in proptest::collection::vec(-5.0f64..5.0, 12),
            off in proptest::collection::vec(-2.0f64..2.0, 11),
        ) {
            let t = SymTridiagonal::new(diag.clone(), off.clone());
            let n = diag.len();
            let dense = DMatrix::from_fn(n, n, |i, j| {
                if i == j { diag[i] } else if i + 1 == j { off[i] } else if j + 1 == i { off[j] } else { 0.0 }
            });
            let mut reference: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let (vals, vecs) = lowest_eigenpairs(&t, 4).unwrap();
            for k in 0..4 {
                prop_assert!((vals[k] - reference[k]).abs() < 1e-10);
                let ax = t.apply(&vecs[k]);
                let res: f64 = ax.iter().zip(&vecs[k]).map(|(a, b)| (a - vals[k] * b).powi(2)).sum::<f64>().sqrt();
                prop_assert!(res < 1e-9);
            }
            for x in [-3.0, 0.0, 2.5] {
                prop_assert_eq!(t.sturm_count(x), reference.iter().filter(|&&l| l < x).count());
            }
        }
    }
}
