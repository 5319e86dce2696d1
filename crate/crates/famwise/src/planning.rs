//! Pre-experiment planning: family-wise error inflation and sample sizes
//! under a split significance budget.
//!
//! ## Methods
//!
//! - **FWER inflation**: testing m independent hypotheses at level α each
//!   gives FWER = 1 − (1−α)^m — the number that motivates correcting in the
//!   first place (m=8, α=0.05 → ≈ 0.34).
//! - **Success sizing**: the two-sample z-test sample size per variant,
//!   n = 2σ²(z_{α*/2} + z_β)²/δ², with the Bonferroni-adjusted significance
//!   level α* = α/S split across the S success metrics.
//! - **Guardrail sizing**: a one-sided non-inferiority test at raw α, with
//!   the power budget split instead: β_g = β/G (the symmetric analogue of the
//!   α/S rule; guardrails consume power, not significance). Sizing assumes a
//!   harmless treatment (true effect 0) by default.
//! - **Whole plan**: per-metric n table, overall n = max over metrics, plus a
//!   plain-language statement of what the design actually guarantees.
//!
//! Continuous sample sizes are rounded to the nearest integer.

use crate::decision::MetricRole;
use crate::error::{Error, Result};
use crate::num::normal::std_normal_quantile;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// Inputs for a full experiment plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanInputs {
    /// Two-sided FWER budget across the success family, in (0,1).
    pub alpha: f64,
    /// Total type-II budget (1 − target power), in (0,1).
    pub beta: f64,
    /// Minimum detectable effect for success metrics, metric units, > 0.
    pub delta: f64,
    /// Per-observation standard deviation, > 0.
    pub sigma: f64,
    /// Number of success metrics S ≥ 1.
    pub success_count: usize,
    /// Non-inferiority margins, one per guardrail (possibly empty), each > 0.
    pub guardrail_margins: Vec<f64>,
}

impl PlanInputs {
    fn validate(&self) -> Result<()> {
        check_prob(self.alpha, "alpha")?;
        check_prob(self.beta, "beta")?;
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::validation(format!(
                "planning: delta must be > 0, got {}",
                self.delta
            )));
        }
        check_sigma(self.sigma)?;
        if self.success_count == 0 {
            return Err(Error::validation("planning: success_count must be ≥ 1"));
        }
        for (i, &m) in self.guardrail_margins.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::validation(format!(
                    "planning: guardrail margin {i} is {m}; a zero margin (pure \
                     non-deterioration) is not sizeable"
                )));
            }
        }
        Ok(())
    }
}

fn check_prob(x: f64, what: &str) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::validation(format!(
            "planning: {what} must be in (0,1), got {x}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::validation(format!(
            "planning: sigma must be > 0, got {sigma}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// FWER inflation
// ---------------------------------------------------------------------------

/// FWER of m independent tests at per-test level `alpha`: 1 − (1−α)^m.
///
/// # Errors
///
/// m = 0 or `alpha` outside (0,1).
pub fn fwer_inflation(m: usize, alpha: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::validation("fwer_inflation: m must be ≥ 1"));
    }
    check_prob(alpha, "alpha")?;
    Ok(1.0 - (1.0 - alpha).powi(i32::try_from(m).unwrap_or(i32::MAX)))
}

// ---------------------------------------------------------------------------
// Sample sizes
// ---------------------------------------------------------------------------

/// Rounds a continuous sample size to the nearest integer (half away from
/// zero), with a floor of 1.
fn round_n(n: f64) -> u64 {
    (n.round() as u64).max(1)
}

/// Per-variant sample size for one success metric under the α/S split:
/// n = 2σ²(z_{α*/2} + z_β)²/δ² with α* = α/S, rounded to nearest.
///
/// # Errors
///
/// Invalid inputs (δ ≤ 0, σ ≤ 0, probabilities out of range, S = 0).
pub fn sample_size_success(p: &PlanInputs) -> Result<u64> {
    p.validate()?;
    let alpha_star = p.alpha / p.success_count as f64;
    let z_a = std_normal_quantile(1.0 - alpha_star / 2.0)?;
    let z_b = std_normal_quantile(1.0 - p.beta)?;
    let n = 2.0 * p.sigma.powi(2) * (z_a + z_b).powi(2) / p.delta.powi(2);
    Ok(round_n(n))
}

/// Per-variant sample size for one guardrail's one-sided non-inferiority
/// test at raw level `alpha`, with the type-II budget split β_g = β_total/G:
/// n = 2σ²(z_α + z_{β_g})²/margin², rounded to nearest.
///
/// Assumes the treatment is truly harmless (effect 0); see
/// [`sample_size_guardrail_with_effect`] for a nonzero planning effect.
///
/// # Errors
///
/// margin ≤ 0 (a pure non-deterioration hypothesis has no margin to power
/// against), G = 0, or out-of-range probabilities.
pub fn sample_size_guardrail(
    margin: f64,
    sigma: f64,
    alpha: f64,
    beta_total: f64,
    guardrail_count: usize,
) -> Result<u64> {
    sample_size_guardrail_with_effect(margin, sigma, alpha, beta_total, guardrail_count, 0.0)
}

/// [`sample_size_guardrail`] with a nonzero expected true effect on the
/// guardrail (in the metric's preferred direction; negative = expected mild
/// harm). The detectable distance becomes margin + expected_effect.
///
/// # Errors
///
/// As [`sample_size_guardrail`]; additionally margin + expected_effect ≤ 0
/// (the expected state violates non-inferiority, no n can power the test).
pub fn sample_size_guardrail_with_effect(
    margin: f64,
    sigma: f64,
    alpha: f64,
    beta_total: f64,
    guardrail_count: usize,
    expected_effect: f64,
) -> Result<u64> {
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(Error::validation(format!(
            "planning: guardrail margin must be > 0, got {margin} (a zero margin \
             is pure non-deterioration and not sizeable)"
        )));
    }
    check_sigma(sigma)?;
    check_prob(alpha, "alpha")?;
    check_prob(beta_total, "beta")?;
    if guardrail_count == 0 {
        return Err(Error::validation("planning: guardrail_count must be ≥ 1"));
    }
    let distance = margin + expected_effect;
    if !(distance > 0.0) {
        return Err(Error::validation(format!(
            "planning: margin + expected_effect = {distance} must be > 0; the \
             planned-for state already violates non-inferiority"
        )));
    }
    let beta_g = beta_total / guardrail_count as f64;
    let z_a = std_normal_quantile(1.0 - alpha)?;
    let z_b = std_normal_quantile(1.0 - beta_g)?;
    let n = 2.0 * sigma.powi(2) * (z_a + z_b).powi(2) / distance.powi(2);
    Ok(round_n(n))
}

// ---------------------------------------------------------------------------
// Whole-experiment plan
// ---------------------------------------------------------------------------

/// One row of a plan table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    /// Metric label ("success_1", "guardrail_2", …).
    pub name: String,
    /// Metric role (success or guardrail).
    pub role: MetricRole,
    /// Required sample size per variant for this metric alone.
    pub n_per_variant: u64,
}

/// A complete experiment plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Per-metric sample sizes.
    pub rows: Vec<PlanRow>,
    /// Overall per-variant n = max over rows.
    pub overall_n: u64,
    /// Bonferroni-adjusted per-success significance level α* = α/S.
    pub alpha_star: f64,
    /// Plain-language statement of the design guarantee.
    pub statement: String,
}

/// Sizes every metric and combines them into a plan. The overall n is the
/// max across metrics, so the experiment is powered for its weakest link;
/// marginal (per-metric) power is targeted, which is conservative for the
/// any-metric-wins question.
///
/// # Errors
///
/// Propagated from the per-metric sizing functions.
pub fn plan_experiment(p: &PlanInputs) -> Result<ExperimentPlan> {
    p.validate()?;
    let n_success = sample_size_success(p)?;
    let mut rows = Vec::with_capacity(p.success_count + p.guardrail_margins.len());
    for i in 0..p.success_count {
        rows.push(PlanRow {
            name: format!("success_{}", i + 1),
            role: MetricRole::Success,
            n_per_variant: n_success,
        });
    }
    let g = p.guardrail_margins.len();
    for (j, &margin) in p.guardrail_margins.iter().enumerate() {
        rows.push(PlanRow {
            name: format!("guardrail_{}", j + 1),
            role: MetricRole::Guardrail,
            n_per_variant: sample_size_guardrail(margin, p.sigma, p.alpha, p.beta, g)?,
        });
    }
    let overall_n = rows
        .iter()
        .map(|r| r.n_per_variant)
        .max()
        .expect("at least one success row");
    let statement = format!(
        "This experiment is powered at {:.0}% to detect a change of {} in any of {} success \
         metrics, controlling FWER at {:.0}%.",
        (1.0 - p.beta) * 100.0,
        p.delta,
        p.success_count,
        p.alpha * 100.0,
    );
    Ok(ExperimentPlan {
        rows,
        overall_n,
        alpha_star: p.alpha / p.success_count as f64,
        statement,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
