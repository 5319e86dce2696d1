//! Correlation structures for metric families.
//!
//! A [`CorrelationSpec`] is a compact, serializable description of the
//! cross-metric correlation matrix used by the Monte Carlo engine and the
//! effective-count estimator. `realize(m)` expands it to a dense m×m matrix,
//! validating shape and parameter ranges.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Specification
// ---------------------------------------------------------------------------

/// Correlation structure of an m-metric family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrelationSpec {
    /// Identity matrix: metrics are uncorrelated.
    Independent,
    /// Common correlation `rho` between every pair; `rho ∈ [0, 1)`.
    Equicorrelated {
        /// Pairwise correlation shared by all metric pairs.
        rho: f64,
    },
    /// Disjoint blocks with a shared within-block correlation and zero
    /// correlation across blocks. `block_sizes` must sum to the family size;
    /// singleton blocks are allowed (a size-1 block is an isolated metric).
    Block {
        /// Sizes of the consecutive blocks, in order.
        block_sizes: Vec<usize>,
        /// Correlation between metrics inside the same block; `∈ [0, 1)`.
        within_rho: f64,
    },
    /// Fully explicit matrix (must be square, symmetric, unit-diagonal).
    Explicit {
        /// The full correlation matrix, row by row.
        matrix: Vec<Vec<f64>>,
    },
}

impl CorrelationSpec {
    /// Expands the spec to a dense m×m correlation matrix.
    ///
    /// # Errors
    ///
    /// Out-of-range parameters, block sizes that do not sum to `m`, or an
    /// explicit matrix of the wrong shape.
    pub fn realize(&self, m: usize) -> Result<Vec<Vec<f64>>> {
        if m == 0 {
            return Err(Error::validation("correlation: family size must be ≥ 1"));
        }
        match self {
            CorrelationSpec::Independent => Ok(identity(m)),
            CorrelationSpec::Equicorrelated { rho } => {
                check_rho(*rho, "equicorrelated rho")?;
                let mut a = identity(m);
                for i in 0..m {
                    for j in 0..m {
                        if i != j {
                            a[i][j] = *rho;
                        }
                    }
                }
                Ok(a)
            }
            CorrelationSpec::Block {
                block_sizes,
                within_rho,
            } => {
                check_rho(*within_rho, "block within_rho")?;
                if block_sizes.iter().any(|&s| s == 0) {
                    return Err(Error::validation("correlation: block sizes must be ≥ 1"));
                }
                let total: usize = block_sizes.iter().sum();
                if total != m {
                    return Err(Error::validation(format!(
                        "correlation: block sizes sum to {total}, expected family size {m}"
                    )));
                }
                let mut a = identity(m);
                let mut start = 0;
                for &size in block_sizes {
                    for i in start..start + size {
                        for j in start..start + size {
                            if i != j {
                                a[i][j] = *within_rho;
                            }
                        }
                    }
                    start += size;
                }
                Ok(a)
            }
            CorrelationSpec::Explicit { matrix } => {
                if matrix.len() != m {
                    return Err(Error::validation(format!(
                        "correlation: explicit matrix is {}×{}, expected {m}×{m}",
                        matrix.len(),
                        matrix.first().map_or(0, Vec::len),
                    )));
                }
                for (i, row) in matrix.iter().enumerate() {
                    if row.len() != m {
                        return Err(Error::validation(format!(
                            "correlation: explicit matrix row {i} has length {}, expected {m}",
                            row.len()
                        )));
                    }
                    if (row[i] - 1.0).abs() > 1e-12 {
                        return Err(Error::validation(format!(
                            "correlation: diagonal entry [{i}][{i}] = {}, expected 1",
                            row[i]
                        )));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        if !v.is_finite() || v < -1.0 || v > 1.0 {
                            return Err(Error::validation(format!(
                                "correlation: entry [{i}][{j}] = {v} outside [−1, 1]"
                            )));
                        }
                        if (v - matrix[j][i]).abs() > 1e-12 {
                            return Err(Error::validation(format!(
                                "correlation: matrix not symmetric at [{i}][{j}]"
                            )));
                        }
                    }
                }
                Ok(matrix.clone())
            }
        }
    }
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

fn check_rho(rho: f64, what: &str) -> Result<()> {
    if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
        return Err(Error::validation(format!(
            "correlation: {what} must be in [0, 1), got {rho}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
