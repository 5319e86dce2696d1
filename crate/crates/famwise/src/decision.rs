//! The ship/no-ship decision rule for a metric family.
//!
//! Metrics carry one of three roles:
//!
//! - **success**: the metrics the experiment is trying to move. Tested
//!   two-sided; the family-wise correction is applied to these tests. At
//!   decision time a success metric "drives" a ship only when its *adjusted*
//!   p-value clears α *and* the estimate points in the preferred direction
//!   (union–intersection structure: any one winner suffices).
//! - **guardrail**: metrics that must not regress. Each gets a one-sided
//!   non-inferiority test against its margin, gated at *raw* α
//!   (intersection–union structure: all must pass, which needs no type-I
//!   correction in the shipping direction).
//! - **quality**: data-quality metrics that block a ship when they move
//!   significantly in the harmful direction, gated at raw α. The sample-ratio
//!   mismatch check is a separate chi-square gate at its own (much stricter)
//!   level, 0.001 by default.
//!
//! ## Family modes
//!
//! The correction family is configurable:
//!
//! - `success_only` (the recommended design): only the S success metrics'
//!   two-sided p-values are jointly adjusted.
//! - `naive`: every metric's *two-sided* p-value enters one family. This
//!   mirrors the naive practice the mode exists to model: an analyst who
//!   "corrects all the metrics" feeds the displayed two-sided tests into the
//!   correction, not the role-specific gate tests. Guardrail and quality
//!   metrics then consume ranks in stepwise procedures and inflate the
//!   denominator, which is exactly the penalty the success-only design
//!   avoids.
//!
//! Family membership affects *adjustment only*: the guardrail and quality
//! gates always compare their raw p-values against raw α. Only the success
//! clause reads adjusted p-values.
//!
//! ## Decision rule
//!
//! Ship iff:
//! (a) there are no success metrics, OR at least one success metric is
//!     adjusted-significant in the preferred direction; and
//! (b) there are no guardrails, OR every guardrail's non-inferiority test
//!     passes; and
//! (c) no quality metric (nor the SRM check, when counts are supplied)
//!     blocks.
//!
//! Reported confidence intervals are two-sided at per-interval level
//! 1 − α/m (m = family size) for in-family metrics and 1 − α for the rest,
//! matching the levels the gates test at (for Bonferroni the test/CI
//! coherence is exact; for other methods the Bonferroni interval is the
//! reporting convention).

use crate::adjust::{adjust, AdjustMethod};
use crate::error::{Error, Result};
use crate::intervals::Interval;
use crate::num::normal::{chisq_sf, std_normal_cdf, std_normal_quantile};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Role a metric plays in the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricRole {
    /// Two-sided, family-adjusted; a winner here is what ships.
    Success,
    /// One-sided non-inferiority against a margin, raw α.
    Guardrail,
    /// One-sided deterioration block, raw α.
    Quality,
}

impl std::fmt::Display for MetricRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MetricRole::Success => "success",
            MetricRole::Guardrail => "guardrail",
            MetricRole::Quality => "quality",
        })
    }
}

/// Which direction of movement is good for this metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Larger values are better (e.g. consumption time).
    HigherIsBetter,
    /// Smaller values are better (e.g. crash rate).
    LowerIsBetter,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::HigherIsBetter => "higher_is_better",
            Direction::LowerIsBetter => "lower_is_better",
        })
    }
}

/// One metric's measured outcome in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricResult {
    /// Unique metric name.
    pub name: String,
    /// Role in the decision.
    pub role: MetricRole,
    /// Preferred direction of movement.
    pub direction: Direction,
    /// Treatment − control effect estimate, metric units.
    pub estimate: f64,
    /// Standard error of the estimate, > 0.
    pub se: f64,
    /// Non-inferiority margin in the same units as `estimate`;
    /// present iff `role = guardrail` (0 = pure non-deterioration).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nim_margin: Option<f64>,
    /// Treatment-arm sample size, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_treat: Option<u64>,
    /// Control-arm sample size, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ctrl: Option<u64>,
}

impl MetricResult {
    fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::validation("metric name must be nonempty"));
        }
        if !(self.se > 0.0) || !self.se.is_finite() {
            return Err(Error::validation(format!(
                "metric {:?}: se must be > 0, got {}",
                self.name, self.se
            )));
        }
        if !self.estimate.is_finite() {
            return Err(Error::validation(format!(
                "metric {:?}: estimate must be finite",
                self.name
            )));
        }
        match (self.role, self.nim_margin) {
            (MetricRole::Guardrail, None) => Err(Error::validation(format!(
                "guardrail {:?} is missing its non-inferiority margin",
                self.name
            ))),
            (MetricRole::Guardrail, Some(m)) if !(m >= 0.0) || !m.is_finite() => {
                Err(Error::validation(format!(
                    "guardrail {:?}: margin must be ≥ 0, got {m}",
                    self.name
                )))
            }
            (MetricRole::Success | MetricRole::Quality, Some(_)) => {
                Err(Error::validation(format!(
                    "metric {:?} has role {} and must not carry a non-inferiority margin",
                    self.name, self.role
                )))
            }
            _ => Ok(()),
        }
    }

    /// The z-statistic estimate/se.
    pub fn z(&self) -> f64 {
        self.estimate / self.se
    }

    /// Whether the estimate points in the preferred direction.
    pub fn preferred_direction(&self) -> bool {
        match self.direction {
            Direction::HigherIsBetter => self.estimate > 0.0,
            Direction::LowerIsBetter => self.estimate < 0.0,
        }
    }
}

/// Family composition mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyMode {
    /// Adjust over success metrics only (size S).
    SuccessOnly,
    /// Adjust over every metric's two-sided p-value (size S+G+Q).
    Naive,
}

impl std::fmt::Display for FamilyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyMode::SuccessOnly => "success_only",
            FamilyMode::Naive => "naive",
        })
    }
}

impl std::str::FromStr for FamilyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "success_only" => Ok(FamilyMode::SuccessOnly),
            "naive" => Ok(FamilyMode::Naive),
            other => Err(Error::validation(format!(
                "unknown family mode {other:?}; known modes: success_only, naive"
            ))),
        }
    }
}

fn default_srm_alpha() -> f64 {
    0.001
}

/// Decision-rule configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    /// Significance budget α (doubles as the FDR target q when `method` is
    /// an FDR procedure).
    pub alpha: f64,
    /// Adjustment procedure applied to the family.
    pub method: AdjustMethod,
    /// Which p-values form the correction family.
    pub family_mode: FamilyMode,
    /// Level for the sample-ratio-mismatch gate (default 0.001).
    #[serde(default = "default_srm_alpha")]
    pub srm_alpha: f64,
}

impl DecisionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(format!(
                "decision: alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if !(self.srm_alpha > 0.0 && self.srm_alpha < 1.0) {
            return Err(Error::validation(format!(
                "decision: srm_alpha must be in (0,1), got {}",
                self.srm_alpha
            )));
        }
        Ok(())
    }
}

/// Assignment counts for the sample-ratio-mismatch check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrmSpec {
    /// Observed per-arm assignment counts.
    pub observed_counts: Vec<u64>,
    /// Intended per-arm allocation ratios (any positive scale).
    pub expected_ratios: Vec<f64>,
}

/// Gate outcome for one metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateOutcome {
    /// Success metric: adjusted-significant in the preferred direction.
    SuccessShips,
    /// Success metric: not adjusted-significant.
    SuccessNotSignificant,
    /// Success metric: adjusted-significant but moving the wrong way.
    SuccessWrongDirection,
    /// Guardrail: non-inferiority established.
    GuardrailPasses,
    /// Guardrail: non-inferiority not established.
    GuardrailFails,
    /// Quality metric: no significant deterioration.
    QualityClear,
    /// Quality metric: significant deterioration, blocks ship.
    QualityBlocks,
}

impl std::fmt::Display for GateOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GateOutcome::SuccessShips => "success_ships",
            GateOutcome::SuccessNotSignificant => "success_not_significant",
            GateOutcome::SuccessWrongDirection => "success_wrong_direction",
            GateOutcome::GuardrailPasses => "guardrail_passes",
            GateOutcome::GuardrailFails => "guardrail_fails",
            GateOutcome::QualityClear => "quality_clear",
            GateOutcome::QualityBlocks => "quality_blocks",
        })
    }
}

/// One metric's line in the decision report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    /// Metric name.
    pub name: String,
    /// Metric role.
    pub role: MetricRole,
    /// Preferred direction.
    pub direction: Direction,
    /// Effect estimate.
    pub estimate: f64,
    /// Standard error.
    pub se: f64,
    /// Raw decision p-value (two-sided for success, one-sided NIM for
    /// guardrail, one-sided deterioration for quality).
    pub p_raw: f64,
    /// Adjusted p-value from the correction family. The family adjusts
    /// two-sided tests, so for a guardrail or quality metric inside the
    /// naive family this is its adjusted *two-sided* p-value, while `p_raw`
    /// stays the gate test. Equals `p_raw` for metrics outside the family.
    pub p_adjusted: f64,
    /// Whether this metric's p-value was part of the correction family.
    pub in_family: bool,
    /// Two-sided interval at 1 − α/m (in family) or 1 − α (outside).
    pub ci: Interval,
    /// Gate outcome.
    pub gate: GateOutcome,
}

/// The full ship/no-ship decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// The verdict.
    pub ship: bool,
    /// Success metrics that are adjusted-significant in the preferred
    /// direction (any one of these justifies the ship).
    pub driving_success: Vec<String>,
    /// Guardrails whose non-inferiority test failed.
    pub failed_guardrails: Vec<String>,
    /// Quality blockers (includes "sample_ratio_mismatch" when the SRM gate
    /// fires).
    pub blocking_quality: Vec<String>,
    /// Family mode used.
    pub family_mode: FamilyMode,
    /// Adjustment method used.
    pub method: AdjustMethod,
    /// Significance budget α.
    pub alpha: f64,
    /// Size of the correction family.
    pub family_size: usize,
    /// Sample-ratio-mismatch p-value, when counts were supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub srm_pvalue: Option<f64>,
    /// Per-metric detail rows, input order.
    pub rows: Vec<DecisionRow>,
}

// ---------------------------------------------------------------------------
// Per-metric p-values
// ---------------------------------------------------------------------------

/// Two-sided success p-value: 2(1 − Φ(|estimate/se|)).
///
/// # Errors
///
/// Wrong role or invalid fields.
pub fn success_pvalue(m: &MetricResult) -> Result<f64> {
    m.validate()?;
    if m.role != MetricRole::Success {
        return Err(Error::validation(format!(
            "success_pvalue: metric {:?} has role {}",
            m.name, m.role
        )));
    }
    Ok(two_sided_p(m.z()))
}

/// One-sided non-inferiority p-value for a guardrail: the null is "the
/// effect is at least margin-worse than zero".
///
/// - higher-is-better: p = 1 − Φ((estimate + margin)/se)
/// - lower-is-better:  p = 1 − Φ((margin − estimate)/se)
///
/// # Errors
///
/// Wrong role, missing margin, or invalid fields.
pub fn nim_pvalue(m: &MetricResult) -> Result<f64> {
    m.validate()?;
    if m.role != MetricRole::Guardrail {
        return Err(Error::validation(format!(
            "nim_pvalue: metric {:?} has role {}",
            m.name, m.role
        )));
    }
    let margin = m.nim_margin.expect("validated: guardrail has margin");
    let z = match m.direction {
        Direction::HigherIsBetter => (m.estimate + margin) / m.se,
        Direction::LowerIsBetter => (margin - m.estimate) / m.se,
    };
    Ok(1.0 - std_normal_cdf(z))
}

/// One-sided deterioration p-value for a quality metric: small p means the
/// metric moved significantly in the harmful direction.
///
/// - higher-is-better: p = Φ(estimate/se)
/// - lower-is-better:  p = Φ(−estimate/se)
///
/// # Errors
///
/// Wrong role or invalid fields.
pub fn deterioration_pvalue(m: &MetricResult) -> Result<f64> {
    m.validate()?;
    if m.role != MetricRole::Quality {
        return Err(Error::validation(format!(
            "deterioration_pvalue: metric {:?} has role {}",
            m.name, m.role
        )));
    }
    let z_harm = match m.direction {
        Direction::HigherIsBetter => m.z(),
        Direction::LowerIsBetter => -m.z(),
    };
    Ok(std_normal_cdf(z_harm))
}

/// Chi-square goodness-of-fit p-value for sample-ratio mismatch, df = arms−1.
///
/// # Errors
///
/// Fewer than 2 arms, length mismatch, nonpositive ratios, or zero total
/// count.
pub fn srm_pvalue(observed_counts: &[u64], expected_ratios: &[f64]) -> Result<f64> {
    if observed_counts.len() < 2 {
        return Err(Error::validation(
            "srm: need at least 2 arms of observed counts",
        ));
    }
    if observed_counts.len() != expected_ratios.len() {
        return Err(Error::validation(format!(
            "srm: {} observed counts but {} expected ratios",
            observed_counts.len(),
            expected_ratios.len()
        )));
    }
    for (i, &r) in expected_ratios.iter().enumerate() {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::validation(format!(
                "srm: expected ratio {i} is {r}, must be > 0"
            )));
        }
    }
    let total: u64 = observed_counts.iter().sum();
    if total == 0 {
        return Err(Error::validation("srm: total observed count is 0"));
    }
    let ratio_sum: f64 = expected_ratios.iter().sum();
    let mut statistic = 0.0;
    for (&obs, &ratio) in observed_counts.iter().zip(expected_ratios) {
        let expected = total as f64 * ratio / ratio_sum;
        let diff = obs as f64 - expected;
        statistic += diff * diff / expected;
    }
    let df = u32::try_from(observed_counts.len() - 1)
        .map_err(|_| Error::validation("srm: too many arms"))?;
    chisq_sf(statistic, df)
}

fn two_sided_p(z: f64) -> f64 {
    2.0 * (1.0 - std_normal_cdf(z.abs()))
}

/// Role-matched decision p-value (dispatches on the metric's role).
pub fn decision_pvalue(m: &MetricResult) -> Result<f64> {
    match m.role {
        MetricRole::Success => success_pvalue(m),
        MetricRole::Guardrail => nim_pvalue(m),
        MetricRole::Quality => deterioration_pvalue(m),
    }
}

// ---------------------------------------------------------------------------
// Family construction
// ---------------------------------------------------------------------------

/// The correction family: metric indices (input order) and their p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    /// Indices into the metric list, ascending.
    pub indices: Vec<usize>,
    /// The p-value entering the adjustment for each index.
    pub pvalues: Vec<f64>,
}

/// Builds the correction family for the given mode.
///
/// `success_only` collects the success metrics' two-sided p-values; `naive`
/// collects every metric's two-sided p-value. Mode changes membership only —
/// the family always adjusts two-sided tests, never the one-sided gate tests
/// (a guardrail's non-inferiority p-value is small precisely when the
/// guardrail is healthy, so feeding it to a step-down procedure would hand
/// the success metrics free rank promotions instead of a penalty).
///
/// # Errors
///
/// Invalid metrics.
pub fn build_family(metrics: &[MetricResult], mode: FamilyMode) -> Result<Family> {
    let mut indices = Vec::new();
    let mut pvalues = Vec::new();
    for (i, m) in metrics.iter().enumerate() {
        let include = match mode {
            FamilyMode::SuccessOnly => m.role == MetricRole::Success,
            FamilyMode::Naive => true,
        };
        if include {
            m.validate()?;
            indices.push(i);
            pvalues.push(two_sided_p(m.z()));
        }
    }
    Ok(Family { indices, pvalues })
}

// ---------------------------------------------------------------------------
// Ship decision
// ---------------------------------------------------------------------------

/// Evaluates the ship rule without a sample-ratio check.
///
/// # Errors
///
/// Empty metric list, duplicate names, invalid metrics or config.
pub fn ship_decision(metrics: &[MetricResult], cfg: &DecisionConfig) -> Result<Decision> {
    ship_decision_with_srm(metrics, None, cfg)
}

/// Evaluates the full ship rule, including the SRM gate when assignment
/// counts are supplied.
///
/// # Errors
///
/// Empty metric list, duplicate names, invalid metrics, config, or SRM spec.
pub fn ship_decision_with_srm(
    metrics: &[MetricResult],
    srm: Option<&SrmSpec>,
    cfg: &DecisionConfig,
) -> Result<Decision> {
    cfg.validate()?;
    if metrics.is_empty() {
        return Err(Error::validation("decision: metric list must be nonempty"));
    }
    for m in metrics {
        m.validate()?;
    }
    {
        let mut names: Vec<&str> = metrics.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(dup) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::validation(format!(
                "decision: duplicate metric name {:?}",
                dup[0]
            )));
        }
    }

    let family = build_family(metrics, cfg.family_mode)?;
    let family_size = family.indices.len();
    let adjusted_family = if family_size > 0 {
        adjust(&family.pvalues, cfg.method)?.adjusted
    } else {
        Vec::new()
    };
    // Position of each metric inside the family, if any.
    let mut family_pos = vec![None; metrics.len()];
    for (pos, &idx) in family.indices.iter().enumerate() {
        family_pos[idx] = Some(pos);
    }

    let z_in_family = if family_size > 0 {
        std_normal_quantile(1.0 - cfg.alpha / (2.0 * family_size as f64))?
    } else {
        0.0 // unused
    };
    let z_raw = std_normal_quantile(1.0 - cfg.alpha / 2.0)?;

    let mut rows = Vec::with_capacity(metrics.len());
    let mut driving_success = Vec::new();
    let mut failed_guardrails = Vec::new();
    let mut blocking_quality = Vec::new();
    let mut any_success = false;
    let mut any_guardrail = false;

    for (i, m) in metrics.iter().enumerate() {
        let p_raw = decision_pvalue(m)?;
        let (in_family, p_adjusted) = match family_pos[i] {
            Some(pos) => (true, adjusted_family[pos]),
            None => (false, p_raw),
        };
        let z_ci = if in_family { z_in_family } else { z_raw };
        let ci = Interval {
            lower: m.estimate - z_ci * m.se,
            upper: m.estimate + z_ci * m.se,
            level: if in_family {
                1.0 - cfg.alpha / family_size as f64
            } else {
                1.0 - cfg.alpha
            },
        };
        let gate = match m.role {
            MetricRole::Success => {
                any_success = true;
                if p_adjusted < cfg.alpha {
                    if m.preferred_direction() {
                        driving_success.push(m.name.clone());
                        GateOutcome::SuccessShips
                    } else {
                        GateOutcome::SuccessWrongDirection
                    }
                } else {
                    GateOutcome::SuccessNotSignificant
                }
            }
            MetricRole::Guardrail => {
                any_guardrail = true;
                // Raw-α gate in both family modes: non-inferiority is the
                // shipping direction, no type-I correction needed.
                if p_raw < cfg.alpha {
                    GateOutcome::GuardrailPasses
                } else {
                    failed_guardrails.push(m.name.clone());
                    GateOutcome::GuardrailFails
                }
            }
            MetricRole::Quality => {
                if p_raw < cfg.alpha {
                    blocking_quality.push(m.name.clone());
                    GateOutcome::QualityBlocks
                } else {
                    GateOutcome::QualityClear
                }
            }
        };
        rows.push(DecisionRow {
            name: m.name.clone(),
            role: m.role,
            direction: m.direction,
            estimate: m.estimate,
            se: m.se,
            p_raw,
            p_adjusted,
            in_family,
            ci,
            gate,
        });
    }

    let srm_p = match srm {
        Some(spec) => {
            let p = srm_pvalue(&spec.observed_counts, &spec.expected_ratios)?;
            if p < cfg.srm_alpha {
                blocking_quality.push("sample_ratio_mismatch".to_string());
            }
            Some(p)
        }
        None => None,
    };

    let success_clause = !any_success || !driving_success.is_empty();
    let guardrail_clause = !any_guardrail || failed_guardrails.is_empty();
    let quality_clause = blocking_quality.is_empty();
    let ship = success_clause && guardrail_clause && quality_clause;

    Ok(Decision {
        ship,
        driving_success,
        failed_guardrails,
        blocking_quality,
        family_mode: cfg.family_mode,
        method: cfg.method,
        alpha: cfg.alpha,
        family_size,
        srm_pvalue: srm_p,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
