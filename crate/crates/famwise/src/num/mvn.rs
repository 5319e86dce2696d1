//! Multivariate-normal sampling via Cholesky transform.

use crate::error::{Error, Result};
use crate::num::matrix::{cholesky, CholeskyFactor};
use rand::Rng;
use rand_distr::StandardNormal;

// ---------------------------------------------------------------------------
// Sampler
// ---------------------------------------------------------------------------

/// Sampler for N(mean, Σ), with Σ factored once at construction.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: Vec<f64>,
    chol: CholeskyFactor,
}

impl MvnSampler {
    /// Builds a sampler from a mean vector and covariance matrix.
    ///
    /// # Errors
    ///
    /// Dimension mismatch between `mean` and `cov`, or a covariance matrix
    /// that is not symmetric PSD.
    pub fn new(mean: Vec<f64>, cov: &[Vec<f64>]) -> Result<Self> {
        if mean.len() != cov.len() {
            return Err(Error::validation(format!(
                "mvn: mean has length {}, covariance is {}×{}",
                mean.len(),
                cov.len(),
                cov.first().map_or(0, Vec::len),
            )));
        }
        Ok(Self {
            mean,
            chol: cholesky(cov)?,
        })
    }

    /// Dimension of the distribution.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Whether the covariance needed a ridge repair during factorization.
    pub fn ridged(&self) -> bool {
        self.chol.ridged()
    }

    /// Draws one vector: x = mean + L·z with z ~ N(0, I).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let mut x = self.chol.mul_vec(&z);
        for (xi, mi) in x.iter_mut().zip(&self.mean) {
            *xi += mi;
        }
        x
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
