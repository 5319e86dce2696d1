//! Dense symmetric-matrix kernels: Cholesky factorization and Jacobi
//! eigenvalues.
//!
//! The matrices handled here are correlation matrices of metric families —
//! small (rarely above a few dozen rows), symmetric, and expected to be
//! positive semi-definite up to floating-point noise. Two repair/reject rules
//! apply during factorization:
//!
//! - a pivot below **−1e-10** means the matrix is materially non-PSD and is
//!   rejected with an error naming the offending pivot;
//! - a pivot in **[−1e-10, 1e-8]** means the matrix is singular or nearly so
//!   (e.g. an equicorrelated family with ρ → 1); the factorization restarts
//!   once with a ridge of **1e-8** added to the diagonal and the result is
//!   flagged so callers can surface a warning.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Cholesky
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor of a symmetric PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    /// Row-major dense storage of the lower triangle (upper triangle zero).
    data: Vec<f64>,
    /// True when a 1e-8 ridge was added to repair near-singularity.
    ridged: bool,
}

impl CholeskyFactor {
    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry L[i][j] (zero above the diagonal).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Whether the factorization needed a ridge repair.
    pub fn ridged(&self) -> bool {
        self.ridged
    }

    /// Computes y = L·x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..i * n + i + 1];
            let mut acc = 0.0;
            for (j, &l) in row.iter().enumerate() {
                acc += l * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Reconstructs L·Lᵀ (used by tests to check the factorization).
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.dim;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..=i.min(j) {
                    acc += self.entry(i, k) * self.entry(j, k);
                }
                a[i][j] = acc;
            }
        }
        a
    }
}

/// Validates that `a` is square, non-empty, finite, and symmetric to 1e-12.
fn check_symmetric(a: &[Vec<f64>]) -> Result<usize> {
    let n = a.len();
    if n == 0 {
        return Err(Error::validation("matrix must be non-empty"));
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != n {
            return Err(Error::validation(format!(
                "matrix row {i} has length {}, expected {n}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "matrix entry [{i}][{j}] is not finite"
                )));
            }
            if (v - a[j][i]).abs() > 1e-12 {
                return Err(Error::validation(format!(
                    "matrix is not symmetric at [{i}][{j}]: {} vs {}",
                    v, a[j][i]
                )));
            }
        }
    }
    Ok(n)
}

/// Pivot threshold below which a matrix is rejected as non-PSD.
const PIVOT_REJECT: f64 = -1e-10;
/// Pivot threshold below which a near-singular matrix is ridge-repaired.
const PIVOT_RIDGE: f64 = 1e-8;
/// Ridge added to the diagonal on repair.
const RIDGE: f64 = 1e-8;

/// Runs the factorization loop; `Err` carries the first bad pivot (index, value).
fn cholesky_attempt(a: &[Vec<f64>], ridge: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let n = a.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[i][j] + if i == j { ridge } else { 0.0 };
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if acc <= PIVOT_RIDGE {
                    return Err((i, acc));
                }
                l[i * n + i] = acc.sqrt();
            } else {
                l[i * n + j] = acc / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Cholesky factorization A = L·Lᵀ with ridge repair for near-singular input.
///
/// # Errors
///
/// Non-square/asymmetric/non-finite input, or a pivot below −1e-10
/// (materially non-PSD; the error names the pivot index and value).
pub fn cholesky(a: &[Vec<f64>]) -> Result<CholeskyFactor> {
    let n = check_symmetric(a)?;
    match cholesky_attempt(a, 0.0) {
        Ok(data) => Ok(CholeskyFactor {
            dim: n,
            data,
            ridged: false,
        }),
        Err((i, pivot)) if pivot < PIVOT_REJECT => Err(Error::computation(format!(
            "cholesky: matrix is not positive semi-definite (pivot {pivot:.3e} at index {i})"
        ))),
        Err(_) => match cholesky_attempt(a, RIDGE) {
            Ok(data) => Ok(CholeskyFactor {
                dim: n,
                data,
                ridged: true,
            }),
            Err((i, pivot)) => Err(Error::computation(format!(
                "cholesky: matrix remains non-PSD after 1e-8 ridge (pivot {pivot:.3e} at index {i})"
            ))),
        },
    }
}

// ---------------------------------------------------------------------------
// Jacobi eigenvalues
// ---------------------------------------------------------------------------

/// Eigenvalues of a symmetric matrix via the cyclic Jacobi method.
///
/// Returns the eigenvalues sorted ascending. Convergence is declared when the
/// off-diagonal Frobenius mass falls below 1e-14·‖A‖; 100 sweeps is far more
/// than small correlation matrices ever need.
///
/// # Errors
///
/// Non-square/asymmetric/non-finite input, or failure to converge.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = check_symmetric(a)?;
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let norm: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1.0);

    let off = |m: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off(&m) <= 1e-14 * norm {
            let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
            eig.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
            return Ok(eig);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Apply the rotation J(p,q,θ) on both sides.
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    Err(Error::computation(
        "symmetric_eigenvalues: Jacobi iteration did not converge in 100 sweeps",
    ))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
