//! Nearest symmetric positive-semidefinite `(m+1)`-banded Toeplitz matrix in
//! Frobenius norm.
//!
//! The feasible set is the intersection of the PSD cone `S_n` and the linear
//! subspace `T_n^(m)` of banded symmetric Toeplitz matrices. Plain alternating
//! projections only find *some* point of the intersection; Dykstra's
//! correction on the (non-linear) cone step makes the iteration converge to
//! the nearest one. The subspace step needs no correction.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DbacfError, Result};
use crate::estimators::AcvfEstimate;
use crate::signal::Acvf;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

const SYMMETRY_TOL: f64 = 1e-12;

/// `(min eigenvalue, norm of the negative eigenvalues)`.
fn psd_violation(a: &SymMatrix) -> Result<(f64, f64)> {
    let eig = eigen(&a.0)?;
    let neg = eig.eigenvalues.iter().map(|l| l.min(0.0).powi(2)).sum::<f64>().sqrt();
    Ok((eig.eigenvalues.min(), neg))
}

/// Dense symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps a square matrix whose entries are symmetric to `1e-12`; the stored
    /// matrix is exactly symmetrised.
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return invalid(format!("expected a non-empty square matrix, got {}x{}", a.nrows(), a.ncols()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return invalid("matrix contains non-finite entries");
        }
        let n = a.nrows();
        for i in 0..n {
            for j in i + 1..n {
                if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOL {
                    return invalid(format!("matrix is not symmetric at ({}, {})", i + 1, j + 1));
                }
            }
        }
        Ok(Self::symmetrized(a))
    }

    fn symmetrized(a: DMatrix<f64>) -> Self {
        let t = a.transpose();
        SymMatrix((a + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("rows must all have length equal to the number of rows");
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn frobenius_distance(&self, other: &SymMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &other.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = eigen(&self.0)?;
        Ok(eig.eigenvalues.min())
    }
}

/// `n x n` symmetric Toeplitz matrix that vanishes beyond the `m`-th
/// off-diagonal, stored by its first row `t_0..t_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandedToeplitz {
    pub n: usize,
    pub m: usize,
    pub first_row: Vec<f64>,
}

impl BandedToeplitz {
    pub fn new(n: usize, first_row: Vec<f64>) -> Result<Self> {
        if first_row.is_empty() || first_row.len() > n {
            return invalid(format!(
                "band of {} entries does not fit an {n}x{n} matrix",
                first_row.len()
            ));
        }
        Ok(Self {
            n,
            m: first_row.len() - 1,
            first_row,
        })
    }

    /// Toeplitz embedding of an autocovariance (zero beyond lag `m`).
    pub fn from_acvf(acvf: &Acvf, n: usize) -> Result<Self> {
        Self::new(n, acvf.gamma().to_vec())
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.first_row.get(i.abs_diff(j)).copied().unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> SymMatrix {
        SymMatrix(DMatrix::from_fn(self.n, self.n, |i, j| self.at(i, j)))
    }

    /// Frobenius norm of the difference of two banded Toeplitz matrices of the
    /// same dimension, computed from the first rows.
    fn distance(&self, other: &BandedToeplitz) -> f64 {
        let band = self.first_row.len().max(other.first_row.len());
        let mut s = 0.0;
        for k in 0..band.min(self.n) {
            let a = self.first_row.get(k).copied().unwrap_or(0.0);
            let b = other.first_row.get(k).copied().unwrap_or(0.0);
            let w = if k == 0 { self.n } else { 2 * (self.n - k) } as f64;
            s += w * (a - b).powi(2);
        }
        s.sqrt()
    }
}

/// Diagnostics of a [`near_psd_toeplitz`] run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub iterations: usize,
    /// Frobenius change of the Toeplitz iterate in the last cycle.
    pub final_delta: f64,
    pub converged: bool,
    /// Smallest eigenvalue of the returned matrix.
    pub min_eigenvalue: f64,
    /// Frobenius norm of the negative eigenvalues of the returned matrix.
    pub psd_violation: f64,
    /// `||P_k - X_k||_F` per cycle: distance between the Toeplitz iterate and
    /// the preceding PSD iterate.
    #[serde(skip)]
    pub gap_trace: Vec<f64>,
}

fn eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0).ok_or_else(|| {
        DbacfError::Numeric("symmetric eigendecomposition did not converge".into())
    })
}

/// Projection onto the PSD cone: clamp negative eigenvalues at zero.
pub fn project_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let mut eig = eigen(&a.0)?;
    eig.eigenvalues.iter_mut().for_each(|l| *l = l.max(0.0));
    Ok(SymMatrix::symmetrized(eig.recompose()))
}

/// Orthogonal projection onto banded symmetric Toeplitz matrices: average
/// each of the first `m+1` diagonals, zero the rest.
pub fn project_toeplitz_banded(a: &SymMatrix, m: usize) -> Result<BandedToeplitz> {
    let n = a.n();
    if m >= n {
        return invalid(format!("band m = {m} must be below n = {n}"));
    }
    let first_row = (0..=m)
        .map(|k| (0..n - k).map(|i| a.0[(i, i + k)]).sum::<f64>() / (n - k) as f64)
        .collect();
    BandedToeplitz::new(n, first_row)
}

/// Nearest PSD `(m+1)`-banded Toeplitz matrix to `a` by Dykstra-corrected
/// alternating projections.
///
/// Iteration: `R_k = P_{k-1} - DC_{k-1}`, `X_k = P_S(R_k)`,
/// `DC_k = X_k - R_k`, `P_k = P_T(X_k)`, starting from `P_0 = a`, `DC_0 = 0`.
/// Stops once `||P_k - P_{k-1}||_F <= tol` and the PSD violation of `P_k`
/// (norm of its negative eigenvalues) is at most `tol`; the latter is only
/// evaluated once the first test passes. The Toeplitz iterate
/// `P_k` is returned, so its structure is exact; a run that hits `max_iter`
/// still returns its last iterate with `converged = false`.
pub fn near_psd_toeplitz(
    a: &SymMatrix,
    m: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BandedToeplitz, ProjectionReport)> {
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    if m >= a.n() {
        return invalid(format!("band m = {m} must be below n = {}", a.n()));
    }
    let mut p_dense = a.clone();
    let mut p_prev: Option<BandedToeplitz> = None;
    let mut correction = DMatrix::<f64>::zeros(a.n(), a.n());
    let mut gap_trace = Vec::new();
    let mut delta = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut current = project_toeplitz_banded(a, m)?;

    for k in 1..=max_iter {
        iterations = k;
        let r = SymMatrix(&p_dense.0 - &correction);
        let x = project_psd(&r)?;
        correction = &x.0 - &r.0;
        let p = project_toeplitz_banded(&x, m)?;
        let p_new_dense = p.to_dense();
        delta = match &p_prev {
            Some(prev) => p.distance(prev),
            None => p_new_dense.frobenius_distance(a),
        };
        let gap = p_new_dense.frobenius_distance(&x);
        gap_trace.push(gap);
        p_dense = p_new_dense;
        current = p.clone();
        p_prev = Some(p);
        if delta <= tol && psd_violation(&p_dense)?.1 <= tol {
            converged = true;
            break;
        }
    }

    let (min_eigenvalue, violation) = psd_violation(&p_dense)?;
    Ok((
        current,
        ProjectionReport {
            iterations,
            final_delta: delta,
            converged,
            min_eigenvalue,
            psd_violation: violation,
            gap_trace,
        },
    ))
}

/// Covariance-matrix estimate: the nearest PSD banded Toeplitz matrix to the
/// `n x n` Toeplitz embedding of the estimated autocovariance.
pub fn covariance_matrix_estimate(
    e: &AcvfEstimate,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BandedToeplitz, ProjectionReport)> {
    project_acvf(&e.acvf, n, tol, max_iter)
}

/// [`covariance_matrix_estimate`] for a bare autocovariance.
pub fn project_acvf(
    acvf: &Acvf,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(BandedToeplitz, ProjectionReport)> {
    if n < acvf.m() + 1 {
        return invalid(format!("dimension n = {n} must be at least m+1 = {}", acvf.m() + 1));
    }
    let gamma_hat = BandedToeplitz::from_acvf(acvf, n)?.to_dense();
    near_psd_toeplitz(&gamma_hat, acvf.m(), tol, max_iter)
}
