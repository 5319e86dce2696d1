//! Simultaneous confidence intervals matched to the multiple-testing
//! corrections.
//!
//! ## Methods
//!
//! - **Bonferroni intervals**: each of the m reported intervals is computed at
//!   per-interval level 1 − α/m (`estimate ± z_{α/(2m)}·se`), which guarantees
//!   family-wise simultaneous coverage ≥ 1 − α and coheres exactly with a
//!   Bonferroni test at α/m: the test rejects iff the interval excludes zero.
//! - **FCR intervals** (false coverage rate): after a selection step keeps R
//!   of m metrics, each selected interval is computed at level 1 − R·α/m.
//!   Coverage is controlled *conditionally on selection*, the appropriate
//!   guarantee when intervals are only reported for significant metrics.
//!
//! Two-sided, normal-theory intervals only. Holm/Hommel-compatible
//! simultaneous intervals are deliberately not implemented — the known
//! constructions degenerate or apply only to one-sided tests.

use crate::error::{Error, Result};
use crate::num::normal::{std_normal_cdf, std_normal_quantile};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// A two-sided confidence interval with its nominal per-interval level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// Lower endpoint.
    pub lower: f64,
    /// Upper endpoint.
    pub upper: f64,
    /// Nominal per-interval coverage (e.g. 0.975 for a Bonferroni pair).
    pub level: f64,
}

impl Interval {
    /// Whether the interval excludes zero.
    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }

    /// Interval width.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// One row of a [`ci_report`] table: test decision next to the matching CI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiReportRow {
    /// Point estimate.
    pub estimate: f64,
    /// Standard error.
    pub se: f64,
    /// Raw two-sided p-value.
    pub p_raw: f64,
    /// Whether the Bonferroni test at α/m rejects.
    pub rejected: bool,
    /// The matching 1 − α/m interval.
    pub interval: Interval,
    /// Test/CI coherence: `rejected` iff the interval excludes zero. Always
    /// true by construction; recorded so reports can assert it.
    pub consistent: bool,
}

// ---------------------------------------------------------------------------
// Interval constructors
// ---------------------------------------------------------------------------

fn check_lengths(estimates: &[f64], ses: &[f64]) -> Result<()> {
    if estimates.len() != ses.len() {
        return Err(Error::validation(format!(
            "intervals: {} estimates but {} standard errors",
            estimates.len(),
            ses.len()
        )));
    }
    if estimates.is_empty() {
        return Err(Error::validation("intervals: input must be nonempty"));
    }
    for (i, &e) in estimates.iter().enumerate() {
        if !e.is_finite() {
            return Err(Error::validation(format!(
                "intervals: estimate at index {i} is not finite"
            )));
        }
    }
    for (i, &s) in ses.iter().enumerate() {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::validation(format!(
                "intervals: standard error at index {i} is {s}, must be ≥ 0"
            )));
        }
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation(format!(
            "intervals: alpha must be in (0,1), got {alpha}"
        )));
    }
    Ok(())
}

/// Two-sided interval at per-interval level 1 − a: estimate ± z_{a/2}·se.
fn z_interval(estimate: f64, se: f64, per_interval_alpha: f64) -> Result<Interval> {
    let z = std_normal_quantile(1.0 - per_interval_alpha / 2.0)?;
    Ok(Interval {
        lower: estimate - z * se,
        upper: estimate + z * se,
        level: 1.0 - per_interval_alpha,
    })
}

/// Simultaneous Bonferroni intervals: each at level 1 − α/m.
///
/// `m` is the family size used for the correction and must cover all the
/// reported metrics (`m ≥ estimates.len()`), since the guarantee comes from
/// splitting α across the whole family.
///
/// # Errors
///
/// Length mismatch, negative/non-finite inputs, `alpha` outside (0,1), or
/// `m` smaller than the number of estimates.
pub fn bonferroni_cis(
    estimates: &[f64],
    ses: &[f64],
    alpha: f64,
    m: usize,
) -> Result<Vec<Interval>> {
    check_lengths(estimates, ses)?;
    check_alpha(alpha)?;
    if m < estimates.len() {
        return Err(Error::validation(format!(
            "intervals: family size {m} is smaller than the {} reported metrics",
            estimates.len()
        )));
    }
    estimates
        .iter()
        .zip(ses)
        .map(|(&e, &s)| z_interval(e, s, alpha / m as f64))
        .collect()
}

/// FCR-adjusted intervals for the `selected` indices only, each at level
/// 1 − |selected|·α/m. Returns `(index, interval)` pairs in ascending index
/// order; an empty selection yields an empty result.
///
/// # Errors
///
/// Invalid inputs, an index out of range, a duplicate index, or `m` smaller
/// than the number of estimates.
pub fn fcr_cis(
    estimates: &[f64],
    ses: &[f64],
    selected: &[usize],
    alpha: f64,
    m: usize,
) -> Result<Vec<(usize, Interval)>> {
    check_lengths(estimates, ses)?;
    check_alpha(alpha)?;
    if m < estimates.len() {
        return Err(Error::validation(format!(
            "intervals: family size {m} is smaller than the {} reported metrics",
            estimates.len()
        )));
    }
    if selected.is_empty() {
        return Ok(Vec::new());
    }
    let mut sel: Vec<usize> = selected.to_vec();
    sel.sort_unstable();
    for pair in sel.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::validation(format!(
                "intervals: duplicate selected index {}",
                pair[0]
            )));
        }
    }
    if let Some(&bad) = sel.iter().find(|&&i| i >= estimates.len()) {
        return Err(Error::validation(format!(
            "intervals: selected index {bad} out of range for {} estimates",
            estimates.len()
        )));
    }
    let per_interval_alpha = sel.len() as f64 * alpha / m as f64;
    sel.into_iter()
        .map(|i| z_interval(estimates[i], ses[i], per_interval_alpha).map(|iv| (i, iv)))
        .collect()
}

// ---------------------------------------------------------------------------
// Test/CI coherence report
// ---------------------------------------------------------------------------

/// Pairs each metric's Bonferroni test decision at α/m with its 1 − α/m
/// interval and records the coherence flag (reject ⇔ interval excludes zero).
///
/// `p_raw` must be the two-sided normal p-values of the (estimate, se) pairs;
/// a mismatch beyond 1e-6 means the inputs describe different tests and is
/// rejected.
///
/// # Errors
///
/// Invalid inputs, a zero `se` with a nonzero p expectation, or p-values
/// inconsistent with estimate/se.
pub fn ci_report(
    estimates: &[f64],
    ses: &[f64],
    p_raw: &[f64],
    alpha: f64,
    m: usize,
) -> Result<Vec<CiReportRow>> {
    check_lengths(estimates, ses)?;
    check_alpha(alpha)?;
    if p_raw.len() != estimates.len() {
        return Err(Error::validation(format!(
            "intervals: {} p-values but {} estimates",
            p_raw.len(),
            estimates.len()
        )));
    }
    if m < estimates.len() {
        return Err(Error::validation(format!(
            "intervals: family size {m} is smaller than the {} reported metrics",
            estimates.len()
        )));
    }
    let intervals = bonferroni_cis(estimates, ses, alpha, m)?;
    let threshold = alpha / m as f64;
    let mut rows = Vec::with_capacity(estimates.len());
    for i in 0..estimates.len() {
        if ses[i] == 0.0 {
            return Err(Error::validation(format!(
                "intervals: ci_report requires positive se, got 0 at index {i}"
            )));
        }
        let z = estimates[i] / ses[i];
        let expected_p = 2.0 * (1.0 - std_normal_cdf(z.abs()));
        if (expected_p - p_raw[i]).abs() > 1e-6 {
            return Err(Error::validation(format!(
                "intervals: p-value at index {i} is {} but estimate/se imply {expected_p:.9}",
                p_raw[i]
            )));
        }
        let rejected = p_raw[i] < threshold;
        rows.push(CiReportRow {
            estimate: estimates[i],
            se: ses[i],
            p_raw: p_raw[i],
            rejected,
            interval: intervals[i],
            consistent: rejected == intervals[i].excludes_zero(),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
