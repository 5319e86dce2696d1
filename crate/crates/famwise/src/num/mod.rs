//! Numerical kernel: normal/chi-square functions, dense symmetric matrix
//! factorizations, correlation structures, seeded RNG streams, and
//! multivariate-normal sampling.

pub mod corr;
pub mod matrix;
pub mod mvn;
pub mod normal;
pub mod rng;

pub use corr::CorrelationSpec;
pub use matrix::{cholesky, symmetric_eigenvalues, CholeskyFactor};
pub use mvn::MvnSampler;
pub use normal::{chisq_sf, std_normal_cdf, std_normal_pdf, std_normal_quantile};
pub use rng::RngStream;
