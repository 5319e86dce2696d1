//! Family-wise multiple-testing toolkit for experimentation platforms.
//!
//! When an experiment ships on a family of metrics — several success metrics,
//! non-inferiority guardrails, data-quality checks — the chance of at least
//! one false positive grows with the family size unless the analysis accounts
//! for it. This crate packages the pieces such a platform needs:
//!
//! - [`adjust`]: p-value adjustment (Bonferroni, Holm, Hochberg, Hommel,
//!   Benjamini–Hochberg, Benjamini–Yekutieli) behind a common trait, plus a
//!   closed-testing oracle and an effective-number-of-tests estimator.
//! - [`decision`]: the ship/no-ship rule combining adjusted success tests
//!   with raw guardrail and data-quality gates.
//! - [`intervals`]: simultaneous confidence intervals matched to the tests.
//! - [`planning`]: family-wise error inflation and sample-size formulas with
//!   the significance budget split across success metrics.
//! - [`sequential`]: alpha-spending group-sequential boundaries and
//!   interim-look evaluation.
//! - [`vr`]: variance-reduction correlation model (how regression adjustment
//!   shrinks cross-metric correlation) and its data-generating process.
//! - [`sim`]: seeded Monte Carlo power/FWER studies over correlated
//!   z-statistics using common random numbers.
//! - [`corpus`]: synthetic experiment-family corpora and replay of decision
//!   policies over them.
//! - [`report`]: CSV/Markdown/JSON rendering with run provenance.
//! - [`num`]: the numerical kernel behind all of the above.
//!
//! All randomness flows through [`num::RngStream`] (ChaCha8 with explicit
//! stream ids), so every result is reproducible bit-for-bit from a seed and
//! independent of thread count.

pub mod adjust;
pub mod corpus;
pub mod decision;
pub mod error;
pub mod intervals;
pub mod num;
pub mod planning;
pub mod report;
pub mod sequential;
pub mod sim;
pub mod vr;

pub use error::{Error, Result};
