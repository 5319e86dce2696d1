//! Synthetic experiment corpora and the replay harness.
//!
//! Real experimentation-platform data is proprietary, so method comparisons
//! at corpus scale run on synthetic corpora built to match the published
//! marginals of a large industrial platform: success-metric count with
//! median 2 (mean ≈ 3.7), guardrail count with median 4 (mean ≈ 5.7), a
//! null fraction of 0.7 among success metrics, mostly-independent metrics
//! with a small correlated minority (mean pairwise correlation ≈ 0.09,
//! median ≈ 0), and a mix of A/B tests and rollouts (rollouts carry
//! guardrails only). Absolute ship rates on such corpora are synthetic;
//! only sign and ordering comparisons between methods are meaningful, and
//! the tests treat them that way.
//!
//! ## Methods
//!
//! Each comparison draws per-metric truth (null / beneficial / harmful),
//! within-comparison correlation, and *paired* outcome variants:
//!
//! - the variance-reduced variant has z = ncp + e with residual
//!   correlation ρ_ε across metrics;
//! - the unreduced variant has z = √(1−w)·ncp + √w·u + √(1−w)·e, where u
//!   carries the pre-period correlation ρ₀ and w is the variance fraction
//!   explained by the pre-period covariate — so removing variance reduction
//!   inflates the standard error by 1/√(1−w) and *raises* the inter-metric
//!   correlation to √(w_i w_j)ρ₀ + √((1−w_i)(1−w_j))ρ_ε.
//!
//! Drawing ρ_ε = κρ₀ with κ < 1 reproduces the decorrelation effect:
//! variance reduction buys per-metric power but strips out exactly the
//! correlation that Hochberg/Hommel/BH-style procedures exploit.
//!
//! `replay` runs the full ship/no-ship decision per comparison per
//! correction method and tabulates ship rates with absolute and relative
//! deltas against Bonferroni; `vr_crossed_replay` crosses that with the
//! variance-reduction toggle; `score_corpus` splits A/B ship rates into
//! truth-driven and null-driven ships using the generator's labels.

use crate::adjust::AdjustMethod;
use crate::decision::{
    ship_decision, Decision, DecisionConfig, Direction, FamilyMode, MetricResult, MetricRole,
};
use crate::error::{Error, Result};
use crate::num::RngStream;
use rand::Rng;
use rand_distr::{LogNormal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Success-metric count distribution over 1..=12: median 2, mean ≈ 3.75.
pub const SUCCESS_COUNT_PMF: [f64; 12] = [
    0.25, 0.30, 0.09, 0.07, 0.05, 0.04, 0.04, 0.04, 0.03, 0.03, 0.03, 0.03,
];

/// Guardrail count distribution over 1..=15: median 4, mean ≈ 5.68.
pub const GUARDRAIL_COUNT_PMF: [f64; 15] = [
    0.10, 0.15, 0.14, 0.12, 0.07, 0.07, 0.06, 0.05, 0.04, 0.04, 0.04, 0.04, 0.03, 0.03, 0.02,
];

/// Comparisons per experiment over 1..=3 (mean ≈ 1.42, so experiments and
/// control–treatment comparisons keep the familiar platform ratio).
const COMPARISONS_PER_EXPERIMENT_PMF: [f64; 3] = [0.65, 0.28, 0.07];

/// Generator configuration. `Default` freezes the corpus every
/// corpus-level regression test runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Number of experiments (each yields 1–3 comparisons).
    pub n_experiments: usize,
    /// Fraction of experiments that are rollouts (guardrails only).
    pub rollout_fraction: f64,
    /// Success-metric count pmf over 1..=len.
    pub success_count_dist: Vec<f64>,
    /// Guardrail count pmf over 1..=len.
    pub guardrail_count_dist: Vec<f64>,
    /// Probability that a success metric is null.
    pub null_fraction: f64,
    /// Probability that a guardrail is null (non-null guardrails are
    /// genuine regressions).
    pub guardrail_null_fraction: f64,
    /// Probability that a non-null success metric moves in the harmful
    /// direction (a backfire).
    pub success_harmful_fraction: f64,
    /// Non-null effect magnitude |ncp| ~ LogNormal(mu, sigma) on the
    /// variance-reduced z scale.
    pub effect_lognormal_mu: f64,
    /// Log-scale sigma of the effect magnitude.
    pub effect_lognormal_sigma: f64,
    /// Probability that a comparison's metrics are correlated at all
    /// (the rest are independent, keeping the corpus median ≈ 0).
    pub corr_prob: f64,
    /// Pre-period correlation ρ₀ range for correlated comparisons.
    pub rho0_range: (f64, f64),
    /// ρ_ε = κ·ρ₀ with κ drawn from this range (κ < 1 ⇒ decorrelation).
    pub kappa_range: (f64, f64),
    /// Per-metric variance fraction w explained by the pre-period.
    pub vr_weight_range: (f64, f64),
    /// Guardrail non-inferiority margins, in variance-reduced se units.
    pub nim_margin_range: (f64, f64),
    /// Decision significance level carried alongside the corpus.
    pub alpha: f64,
    /// RNG seed; experiment e uses stream (seed, e).
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_experiments: 5_000,
            rollout_fraction: 0.2,
            success_count_dist: SUCCESS_COUNT_PMF.to_vec(),
            guardrail_count_dist: GUARDRAIL_COUNT_PMF.to_vec(),
            null_fraction: 0.7,
            guardrail_null_fraction: 0.9,
            success_harmful_fraction: 0.25,
            effect_lognormal_mu: 1.0,
            effect_lognormal_sigma: 0.4,
            corr_prob: 0.35,
            rho0_range: (0.6, 0.95),
            kappa_range: (0.05, 0.6),
            vr_weight_range: (0.15, 0.45),
            nim_margin_range: (2.0, 4.0),
            alpha: 0.05,
            seed: 1,
        }
    }
}

impl CorpusConfig {
    fn validate(&self) -> Result<()> {
        if self.n_experiments == 0 {
            return Err(Error::validation("corpus: n_experiments must be ≥ 1"));
        }
        for (name, p) in [
            ("rollout_fraction", self.rollout_fraction),
            ("null_fraction", self.null_fraction),
            ("guardrail_null_fraction", self.guardrail_null_fraction),
            ("success_harmful_fraction", self.success_harmful_fraction),
            ("corr_prob", self.corr_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!(
                    "corpus: {name} must be in [0,1], got {p}"
                )));
            }
        }
        for (name, pmf) in [
            ("success_count_dist", &self.success_count_dist),
            ("guardrail_count_dist", &self.guardrail_count_dist),
        ] {
            if pmf.is_empty() || pmf.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::validation(format!(
                    "corpus: {name} must be a nonempty nonnegative pmf"
                )));
            }
            if pmf.iter().sum::<f64>() <= 0.0 {
                return Err(Error::validation(format!("corpus: {name} sums to zero")));
            }
        }
        for (name, (lo, hi), min, max) in [
            ("rho0_range", self.rho0_range, 0.0, 1.0),
            ("kappa_range", self.kappa_range, 0.0, 1.0),
            ("vr_weight_range", self.vr_weight_range, 0.0, 1.0),
            ("nim_margin_range", self.nim_margin_range, 0.0, f64::INFINITY),
        ] {
            if !(lo <= hi) || lo < min || hi > max || !lo.is_finite() {
                return Err(Error::validation(format!(
                    "corpus: {name} [{lo}, {hi}] is not an ordered range within [{min}, {max}]"
                )));
            }
        }
        if self.vr_weight_range.1 >= 1.0 {
            return Err(Error::validation(
                "corpus: vr_weight_range must stay below 1 (w = 1 leaves no residual variance)",
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation(format!(
                "corpus: alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        if !self.effect_lognormal_sigma.is_finite() || self.effect_lognormal_sigma <= 0.0 {
            return Err(Error::validation(
                "corpus: effect_lognormal_sigma must be > 0",
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// Ground truth behind one synthetic metric (absent in external corpora).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthLabel {
    /// True effect present.
    pub nonnull: bool,
    /// The true effect moves in the harmful direction (meaningful only
    /// when `nonnull`).
    pub harmful: bool,
}

/// One outcome variant (with or without variance reduction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantStats {
    /// Effect estimate.
    pub estimate: f64,
    /// Standard error (> 0).
    pub se: f64,
}

/// One metric of one comparison, carrying both outcome variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetric {
    /// Metric name, unique within the comparison.
    pub name: String,
    /// Decision role.
    pub role: MetricRole,
    /// Preferred direction.
    pub direction: Direction,
    /// Variance-reduced outcome.
    pub vr: VariantStats,
    /// Unreduced outcome.
    pub no_vr: VariantStats,
    /// Non-inferiority margin (absolute units), guardrails only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nim_margin: Option<f64>,
    /// Generator truth label; None for external corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthLabel>,
}

/// One control–treatment comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRecord {
    /// Experiment this comparison belongs to.
    pub experiment_id: String,
    /// Unique comparison id.
    pub comparison_id: String,
    /// Metrics, successes first.
    pub metrics: Vec<CorpusMetric>,
}

impl ComparisonRecord {
    /// Rollouts carry no success metrics.
    pub fn is_rollout(&self) -> bool {
        !self
            .metrics
            .iter()
            .any(|m| m.role == MetricRole::Success)
    }

    /// Extracts one variant as decision-ready metric results.
    pub fn to_metric_results(&self, vr_on: bool) -> Vec<MetricResult> {
        self.metrics
            .iter()
            .map(|m| {
                let v = if vr_on { &m.vr } else { &m.no_vr };
                MetricResult {
                    name: m.name.clone(),
                    role: m.role,
                    direction: m.direction,
                    estimate: v.estimate,
                    se: v.se,
                    nim_margin: m.nim_margin,
                    n_treat: None,
                    n_ctrl: None,
                }
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// Draws 1 + Categorical(pmf) — pmf weights need not be normalized.
fn sample_count(pmf: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = pmf.iter().sum();
    let mut u = rng.gen_range(0.0..total);
    for (i, &p) in pmf.iter().enumerate() {
        if u < p {
            return i + 1;
        }
        u -= p;
    }
    pmf.len()
}

struct MetricPlan {
    role: MetricRole,
    weight: f64,
    margin: Option<f64>,
}

/// Generates a synthetic corpus. Deterministic in the seed: experiment e
/// consumes only RNG stream (seed, e), so the output is bit-identical
/// across runs and machines.
///
/// # Errors
///
/// Invalid configuration.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<ComparisonRecord>> {
    cfg.validate()?;
    let effect = LogNormal::new(cfg.effect_lognormal_mu, cfg.effect_lognormal_sigma)
        .expect("validated: sigma > 0");
    let mut records = Vec::new();

    for e in 0..cfg.n_experiments {
        let mut rng = RngStream::new(cfg.seed, e as u64).rng();
        let experiment_id = format!("exp_{e:06}");
        let n_comparisons = sample_count(&COMPARISONS_PER_EXPERIMENT_PMF, &mut rng);

        // Experiment-level structure, shared by its comparisons.
        let is_rollout = rng.gen_bool(cfg.rollout_fraction);
        let n_success = if is_rollout {
            0
        } else {
            sample_count(&cfg.success_count_dist, &mut rng)
        };
        let n_guardrail = sample_count(&cfg.guardrail_count_dist, &mut rng);
        let (rho0, rho_eps) = if rng.gen_bool(cfg.corr_prob) {
            let r0 = rng.gen_range(cfg.rho0_range.0..=cfg.rho0_range.1);
            let kappa = rng.gen_range(cfg.kappa_range.0..=cfg.kappa_range.1);
            (r0, kappa * r0)
        } else {
            (0.0, 0.0)
        };
        let plans: Vec<MetricPlan> = (0..n_success + n_guardrail)
            .map(|i| {
                let role = if i < n_success {
                    MetricRole::Success
                } else {
                    MetricRole::Guardrail
                };
                MetricPlan {
                    role,
                    weight: rng.gen_range(cfg.vr_weight_range.0..=cfg.vr_weight_range.1),
                    margin: (role == MetricRole::Guardrail)
                        .then(|| rng.gen_range(cfg.nim_margin_range.0..=cfg.nim_margin_range.1)),
                }
            })
            .collect();

        for c in 0..n_comparisons {
            let comparison_id = format!("{experiment_id}_c{c}");
            // Shared correlation factors for this comparison.
            let factor_pre: f64 = rng.sample(StandardNormal);
            let factor_resid: f64 = rng.sample(StandardNormal);
            let mut success_idx = 0;
            let mut guardrail_idx = 0;
            let metrics = plans
                .iter()
                .map(|plan| {
                    let name = match plan.role {
                        MetricRole::Success => {
                            success_idx += 1;
                            format!("success_{success_idx}")
                        }
                        _ => {
                            guardrail_idx += 1;
                            format!("guardrail_{guardrail_idx}")
                        }
                    };
                    let null_prob = match plan.role {
                        MetricRole::Success => cfg.null_fraction,
                        _ => cfg.guardrail_null_fraction,
                    };
                    let nonnull = !rng.gen_bool(null_prob);
                    let harmful = nonnull
                        && match plan.role {
                            MetricRole::Success => rng.gen_bool(cfg.success_harmful_fraction),
                            _ => true, // non-null guardrails are regressions
                        };
                    let ncp = if nonnull {
                        let magnitude: f64 = rng.sample(effect);
                        if harmful {
                            -magnitude
                        } else {
                            magnitude
                        }
                    } else {
                        0.0
                    };
                    // Correlated noise: u carries ρ₀, e carries ρ_ε.
                    let gu: f64 = rng.sample(StandardNormal);
                    let ge: f64 = rng.sample(StandardNormal);
                    let u = rho0.sqrt() * factor_pre + (1.0 - rho0).sqrt() * gu;
                    let eps = rho_eps.sqrt() * factor_resid + (1.0 - rho_eps).sqrt() * ge;

                    let w = plan.weight;
                    let z_vr = ncp + eps;
                    let z_nv = (1.0 - w).sqrt() * ncp + w.sqrt() * u + (1.0 - w).sqrt() * eps;
                    let se_nv = 1.0 / (1.0 - w).sqrt();
                    CorpusMetric {
                        name,
                        role: plan.role,
                        direction: Direction::HigherIsBetter,
                        vr: VariantStats {
                            estimate: z_vr,
                            se: 1.0,
                        },
                        no_vr: VariantStats {
                            estimate: z_nv * se_nv,
                            se: se_nv,
                        },
                        nim_margin: plan.margin,
                        truth: Some(TruthLabel { nonnull, harmful }),
                    }
                })
                .collect();
            records.push(ComparisonRecord {
                experiment_id: experiment_id.clone(),
                comparison_id,
                metrics,
            });
        }
    }
    Ok(records)
}

/// Generates the homogeneous success-only fixture that isolates the
/// decorrelation channel: every comparison carries 8 success metrics, all
/// truly non-null with one shared effect size (median 2.4 on the
/// variance-reduced z scale — the regime where the power channel of the
/// with/without-variance-reduction gap crosses zero), strong pre-period
/// correlation ρ₀ ~ U(0.85, 0.95), residual correlation ρ_ε = κρ₀, and one
/// shared variance-reduction weight w ~ U(0.3, 0.5) per comparison.
/// `kappa_range = (1, 1)` switches decorrelation off (ρ_ε = ρ₀).
///
/// # Errors
///
/// Empty size or an invalid κ range.
pub fn decorrelation_fixture(
    n_comparisons: usize,
    kappa_range: (f64, f64),
    seed: u64,
) -> Result<Vec<ComparisonRecord>> {
    if n_comparisons == 0 {
        return Err(Error::validation("fixture: need at least one comparison"));
    }
    let (klo, khi) = kappa_range;
    if !(klo <= khi) || klo < 0.0 || khi > 1.0 {
        return Err(Error::validation(format!(
            "fixture: kappa_range [{klo}, {khi}] must be an ordered range within [0,1]"
        )));
    }
    const S: usize = 8;
    let size_dist = LogNormal::new(2.4_f64.ln(), 0.25).expect("static sigma");
    let mut records = Vec::with_capacity(n_comparisons);
    for i in 0..n_comparisons {
        let mut rng = RngStream::new(seed, i as u64).rng();
        let rho0 = rng.gen_range(0.85..=0.95);
        let kappa = if klo == khi {
            klo
        } else {
            rng.gen_range(klo..=khi)
        };
        let rho_eps = kappa * rho0;
        let w: f64 = rng.gen_range(0.3..=0.5);
        let ncp: f64 = rng.sample(size_dist);
        let factor_pre: f64 = rng.sample(StandardNormal);
        let factor_resid: f64 = rng.sample(StandardNormal);
        let metrics = (0..S)
            .map(|j| {
                let gu: f64 = rng.sample(StandardNormal);
                let ge: f64 = rng.sample(StandardNormal);
                let u = rho0.sqrt() * factor_pre + (1.0 - rho0).sqrt() * gu;
                let eps = rho_eps.sqrt() * factor_resid + (1.0 - rho_eps).sqrt() * ge;
                let z_vr = ncp + eps;
                let z_nv = (1.0 - w).sqrt() * ncp + w.sqrt() * u + (1.0 - w).sqrt() * eps;
                let se_nv = 1.0 / (1.0 - w).sqrt();
                CorpusMetric {
                    name: format!("success_{}", j + 1),
                    role: MetricRole::Success,
                    direction: Direction::HigherIsBetter,
                    vr: VariantStats {
                        estimate: z_vr,
                        se: 1.0,
                    },
                    no_vr: VariantStats {
                        estimate: z_nv * se_nv,
                        se: se_nv,
                    },
                    nim_margin: None,
                    truth: Some(TruthLabel {
                        nonnull: true,
                        harmful: false,
                    }),
                }
            })
            .collect();
        records.push(ComparisonRecord {
            experiment_id: format!("fix_{i:06}"),
            comparison_id: format!("fix_{i:06}_c0"),
            metrics,
        });
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

/// One method's row of a replay table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    /// Correction method.
    pub method: AdjustMethod,
    /// Comparisons shipped.
    pub ships: u64,
    /// Ship rate over all comparisons.
    pub ship_rate: f64,
    /// Ship-rate difference vs. Bonferroni, percentage points.
    pub delta_pp_vs_bonferroni: f64,
    /// Relative ship-rate difference vs. Bonferroni, percent
    /// (None when the Bonferroni rate is zero).
    pub delta_rel_pct_vs_bonferroni: Option<f64>,
}

/// Full replay output: the rate table plus per-comparison decisions for
/// downstream dominance checks and truth scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayResult {
    /// Methods in table order (Bonferroni always present as baseline).
    pub methods: Vec<AdjustMethod>,
    /// One row per method.
    pub rows: Vec<ReplayRow>,
    /// Number of comparisons replayed.
    pub comparisons: u64,
    /// Family definition used.
    pub family_mode: FamilyMode,
    /// Outcome variant used.
    pub vr_on: bool,
    /// Significance level.
    pub alpha: f64,
    /// ship_flags[method][comparison].
    pub ship_flags: Vec<Vec<bool>>,
    /// driving[method][comparison]: names of the adjusted-significant,
    /// right-direction success metrics behind a ship.
    pub driving: Vec<Vec<Vec<String>>>,
}

impl ReplayResult {
    /// The row for a method, if present.
    pub fn row(&self, method: AdjustMethod) -> Option<&ReplayRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Replays the ship/no-ship decision over a corpus for each method.
/// Bonferroni is added as the baseline when missing from `methods`.
///
/// # Errors
///
/// Empty corpus, empty method list, or invalid records.
pub fn replay(
    corpus: &[ComparisonRecord],
    methods: &[AdjustMethod],
    family_mode: FamilyMode,
    alpha: f64,
    vr_on: bool,
) -> Result<ReplayResult> {
    if corpus.is_empty() {
        return Err(Error::validation("replay: corpus is empty"));
    }
    if methods.is_empty() {
        return Err(Error::validation("replay: need at least one method"));
    }
    let mut all_methods = methods.to_vec();
    if !all_methods.contains(&AdjustMethod::Bonferroni) {
        all_methods.push(AdjustMethod::Bonferroni);
    }

    // Comparisons are independent; decisions collect in input order, so the
    // result is deterministic at any worker count.
    let per_comparison: Vec<Vec<Decision>> = corpus
        .par_iter()
        .map(|record| {
            let metrics = record.to_metric_results(vr_on);
            all_methods
                .iter()
                .map(|&method| {
                    let cfg = DecisionConfig {
                        alpha,
                        method,
                        family_mode,
                        srm_alpha: 0.001,
                    };
                    ship_decision(&metrics, &cfg)
                })
                .collect::<Result<Vec<Decision>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let n = corpus.len() as u64;
    let mut ship_flags = vec![Vec::with_capacity(corpus.len()); all_methods.len()];
    let mut driving = vec![Vec::with_capacity(corpus.len()); all_methods.len()];
    for decisions in &per_comparison {
        for (m_idx, d) in decisions.iter().enumerate() {
            ship_flags[m_idx].push(d.ship);
            driving[m_idx].push(d.driving_success.clone());
        }
    }

    let bonf_idx = all_methods
        .iter()
        .position(|&m| m == AdjustMethod::Bonferroni)
        .expect("baseline inserted above");
    let bonf_rate = ship_flags[bonf_idx].iter().filter(|s| **s).count() as f64 / n as f64;

    let rows = all_methods
        .iter()
        .enumerate()
        .map(|(m_idx, &method)| {
            let ships = ship_flags[m_idx].iter().filter(|s| **s).count() as u64;
            let rate = ships as f64 / n as f64;
            ReplayRow {
                method,
                ships,
                ship_rate: rate,
                delta_pp_vs_bonferroni: (rate - bonf_rate) * 100.0,
                delta_rel_pct_vs_bonferroni: if bonf_rate > 0.0 {
                    Some((rate - bonf_rate) / bonf_rate * 100.0)
                } else {
                    None
                },
            }
        })
        .collect();

    Ok(ReplayResult {
        methods: all_methods,
        rows,
        comparisons: n,
        family_mode,
        vr_on,
        alpha,
        ship_flags,
        driving,
    })
}

// ---------------------------------------------------------------------------
// Variance-reduction crossed replay
// ---------------------------------------------------------------------------

/// One method's row of the variance-reduction crossed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrCrossedRow {
    /// Correction method.
    pub method: AdjustMethod,
    /// Ship rate with variance reduction.
    pub ship_rate_vr: f64,
    /// Ship rate without variance reduction.
    pub ship_rate_no_vr: f64,
    /// Gap Δ = (gap vs. Bonferroni with variance reduction) −
    /// (gap vs. Bonferroni without), percentage points; None on the
    /// Bonferroni baseline row.
    pub gap_delta_pp: Option<f64>,
}

/// Crosses the replay with the variance-reduction toggle (success-only
/// family) and reports each method's gap Δ against Bonferroni.
///
/// # Errors
///
/// Propagated from `replay`.
pub fn vr_crossed_replay(
    corpus: &[ComparisonRecord],
    methods: &[AdjustMethod],
    alpha: f64,
) -> Result<Vec<VrCrossedRow>> {
    let with_vr = replay(corpus, methods, FamilyMode::SuccessOnly, alpha, true)?;
    let without = replay(corpus, methods, FamilyMode::SuccessOnly, alpha, false)?;
    let bonf_vr = with_vr
        .row(AdjustMethod::Bonferroni)
        .expect("baseline present")
        .ship_rate;
    let bonf_nv = without
        .row(AdjustMethod::Bonferroni)
        .expect("baseline present")
        .ship_rate;
    Ok(with_vr
        .methods
        .iter()
        .map(|&method| {
            let rate_vr = with_vr.row(method).expect("same method set").ship_rate;
            let rate_nv = without.row(method).expect("same method set").ship_rate;
            let gap_delta_pp = (method != AdjustMethod::Bonferroni)
                .then(|| ((rate_vr - bonf_vr) - (rate_nv - bonf_nv)) * 100.0);
            VrCrossedRow {
                method,
                ship_rate_vr: rate_vr,
                ship_rate_no_vr: rate_nv,
                gap_delta_pp,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Truth scoring
// ---------------------------------------------------------------------------

/// Truth-decomposed ship rates over the A/B comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    /// Correction method.
    pub method: AdjustMethod,
    /// A/B comparisons scored (rollouts are excluded — they have no
    /// success metrics to be right or wrong about).
    pub ab_comparisons: u64,
    /// Ship rate over A/B comparisons.
    pub ship_rate: f64,
    /// Ships where at least one driving success metric is truly non-null
    /// and beneficial.
    pub true_ship_rate: f64,
    /// Ships driven entirely by nulls (or true backfires that happened to
    /// look good).
    pub false_ship_rate: f64,
}

/// Splits each method's A/B ship rate into truth-driven and null-driven
/// ships using the generator's labels.
///
/// # Errors
///
/// A corpus without truth labels.
pub fn score_corpus(corpus: &[ComparisonRecord], result: &ReplayResult) -> Result<Vec<ScoreRow>> {
    if corpus.len() as u64 != result.comparisons {
        return Err(Error::validation(format!(
            "score: corpus has {} comparisons but the replay covered {}",
            corpus.len(),
            result.comparisons
        )));
    }
    let ab_indices: Vec<usize> = (0..corpus.len())
        .filter(|&i| !corpus[i].is_rollout())
        .collect();
    let ab_n = ab_indices.len() as u64;
    let mut rows = Vec::with_capacity(result.methods.len());
    for (m_idx, &method) in result.methods.iter().enumerate() {
        let mut ships = 0u64;
        let mut true_ships = 0u64;
        for &i in &ab_indices {
            if !result.ship_flags[m_idx][i] {
                continue;
            }
            ships += 1;
            let record = &corpus[i];
            let mut any_true_driver = false;
            for name in &result.driving[m_idx][i] {
                let metric = record
                    .metrics
                    .iter()
                    .find(|m| &m.name == name)
                    .ok_or_else(|| {
                        Error::validation(format!(
                            "score: driving metric {name:?} missing from {}",
                            record.comparison_id
                        ))
                    })?;
                let truth = metric.truth.ok_or_else(|| {
                    Error::validation(format!(
                        "score: corpus record {} has no truth labels",
                        record.comparison_id
                    ))
                })?;
                if truth.nonnull && !truth.harmful {
                    any_true_driver = true;
                }
            }
            if any_true_driver {
                true_ships += 1;
            }
        }
        let denom = ab_n.max(1) as f64;
        rows.push(ScoreRow {
            method,
            ab_comparisons: ab_n,
            ship_rate: ships as f64 / denom,
            true_ship_rate: true_ships as f64 / denom,
            false_ship_rate: (ships - true_ships) as f64 / denom,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Line-delimited IO
// ---------------------------------------------------------------------------

/// Serializes a corpus as line-delimited JSON, one record per line.
///
/// # Errors
///
/// Serialization failures.
pub fn records_to_string(records: &[ComparisonRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(r)
            .map_err(|e| Error::computation(format!("serialize record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Parses a line-delimited corpus, reporting parse failures by line number.
/// `origin` names the source (a path or `<stdin>`) in error messages.
///
/// # Errors
///
/// Malformed lines or an empty corpus.
pub fn records_from_str(text: &str, origin: &str) -> Result<Vec<ComparisonRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ComparisonRecord = serde_json::from_str(line).map_err(|e| {
            Error::validation(format!("{}:{}: malformed record: {e}", origin, idx + 1))
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::validation(format!("{origin}: no records")));
    }
    Ok(records)
}

/// Writes a corpus as line-delimited JSON, one record per line.
///
/// # Errors
///
/// IO failures.
pub fn write_records(path: &Path, records: &[ComparisonRecord]) -> Result<()> {
    let text = records_to_string(records)?;
    std::fs::write(path, text)
        .map_err(|e| Error::computation(format!("write {}: {e}", path.display())))
}

/// Reads a line-delimited corpus, reporting parse failures by line number.
///
/// # Errors
///
/// IO failures or malformed lines.
pub fn read_records(path: &Path) -> Result<Vec<ComparisonRecord>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot open {}: {e}", path.display())))?;
    records_from_str(&text, &path.display().to_string())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(n: usize) -> CorpusConfig {
        CorpusConfig {
            n_experiments: n,
            ..CorpusConfig::default()
        }
    }

    fn median(mut v: Vec<usize>) -> f64 {
        v.sort_unstable();
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2] as f64
        } else {
            (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
        }
    }

    #[test]
    fn default_corpus_matches_published_marginals() {
        let corpus = generate_corpus(&small_cfg(2000)).unwrap();
        assert!(corpus.len() > 2000, "experiments yield ≥ 1 comparison each");

        let ab: Vec<_> = corpus.iter().filter(|r| !r.is_rollout()).collect();
        let success_counts: Vec<usize> = ab
            .iter()
            .map(|r| {
                r.metrics
                    .iter()
                    .filter(|m| m.role == MetricRole::Success)
                    .count()
            })
            .collect();
        let guardrail_counts: Vec<usize> = corpus
            .iter()
            .map(|r| {
                r.metrics
                    .iter()
                    .filter(|m| m.role == MetricRole::Guardrail)
                    .count()
            })
            .collect();
        assert_eq!(median(success_counts.clone()), 2.0);
        assert_eq!(median(guardrail_counts), 4.0);
        let mean_s = success_counts.iter().sum::<usize>() as f64 / success_counts.len() as f64;
        assert!((mean_s - 3.75).abs() < 0.25, "success mean {mean_s}");

        let rollout_share =
            corpus.iter().filter(|r| r.is_rollout()).count() as f64 / corpus.len() as f64;
        assert!((rollout_share - 0.2).abs() < 0.03, "rollouts {rollout_share}");
    }

    #[test]
    fn null_success_zscores_are_standard_normal() {
        let corpus = generate_corpus(&small_cfg(1500)).unwrap();
        let mut zs = Vec::new();
        for r in &corpus {
            for m in &r.metrics {
                if m.role == MetricRole::Success && !m.truth.unwrap().nonnull {
                    zs.push(m.vr.estimate / m.vr.se);
                }
            }
        }
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<f64>() / n;
        let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "null mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "null variance {var}");
    }

    #[test]
    fn no_vr_variant_inflates_se_and_shrinks_z() {
        let corpus = generate_corpus(&small_cfg(100)).unwrap();
        for r in &corpus {
            for m in &r.metrics {
                assert!(m.no_vr.se > m.vr.se);
                assert!(m.no_vr.se <= 1.0 / (1.0 - 0.45_f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn rollout_only_config_has_no_success_metrics() {
        let mut cfg = small_cfg(200);
        cfg.rollout_fraction = 1.0;
        let corpus = generate_corpus(&cfg).unwrap();
        assert!(corpus.iter().all(|r| r.is_rollout()));

        // Family invariance on rollouts: no success metrics, empty family,
        // so the family mode cannot matter.
        let a = replay(&corpus, &[AdjustMethod::Holm], FamilyMode::SuccessOnly, 0.05, true)
            .unwrap();
        let b = replay(&corpus, &[AdjustMethod::Holm], FamilyMode::Naive, 0.05, true).unwrap();
        assert_eq!(a.ship_flags, b.ship_flags);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_corpus(&small_cfg(150)).unwrap();
        let b = generate_corpus(&small_cfg(150)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn roundtrip_io_preserves_records() {
        let corpus = generate_corpus(&small_cfg(60)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_records(&path, &corpus).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(corpus, back);
    }

    #[test]
    fn read_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"not\": \"a record\"}\n").unwrap();
        let err = read_records(&path).unwrap_err().to_string();
        assert!(err.contains(":1:"), "got: {err}");
    }

    #[test]
    fn replay_ships_rollouts_and_blocks_weak_ab() {
        // One A/B comparison with a hopeless success metric and a passing
        // guardrail; one rollout with the same passing guardrail.
        let guardrail = CorpusMetric {
            name: "guardrail_1".into(),
            role: MetricRole::Guardrail,
            direction: Direction::HigherIsBetter,
            vr: VariantStats {
                estimate: 0.1,
                se: 1.0,
            },
            no_vr: VariantStats {
                estimate: 0.1,
                se: 1.0,
            },
            nim_margin: Some(100.0),
            truth: Some(TruthLabel {
                nonnull: false,
                harmful: false,
            }),
        };
        let weak_success = CorpusMetric {
            name: "success_1".into(),
            role: MetricRole::Success,
            direction: Direction::HigherIsBetter,
            vr: VariantStats {
                estimate: 0.12,
                se: 1.0,
            },
            no_vr: VariantStats {
                estimate: 0.12,
                se: 1.0,
            },
            nim_margin: None,
            truth: Some(TruthLabel {
                nonnull: false,
                harmful: false,
            }),
        };
        let corpus = vec![
            ComparisonRecord {
                experiment_id: "e0".into(),
                comparison_id: "e0_c0".into(),
                metrics: vec![weak_success, guardrail.clone()],
            },
            ComparisonRecord {
                experiment_id: "e1".into(),
                comparison_id: "e1_c0".into(),
                metrics: vec![guardrail],
            },
        ];
        let result = replay(
            &corpus,
            &[AdjustMethod::Bonferroni],
            FamilyMode::SuccessOnly,
            0.05,
            true,
        )
        .unwrap();
        assert_eq!(result.ship_flags[0], vec![false, true]);
    }

    #[test]
    fn holm_ships_a_superset_of_bonferroni() {
        let corpus = generate_corpus(&small_cfg(400)).unwrap();
        for mode in [FamilyMode::SuccessOnly, FamilyMode::Naive] {
            let result = replay(
                &corpus,
                &[AdjustMethod::Holm, AdjustMethod::Hochberg, AdjustMethod::Hommel],
                mode,
                0.05,
                true,
            )
            .unwrap();
            let idx = |m: AdjustMethod| result.methods.iter().position(|&x| x == m).unwrap();
            let holm = &result.ship_flags[idx(AdjustMethod::Holm)];
            let bonf = &result.ship_flags[idx(AdjustMethod::Bonferroni)];
            let hoch = &result.ship_flags[idx(AdjustMethod::Hochberg)];
            let homm = &result.ship_flags[idx(AdjustMethod::Hommel)];
            for i in 0..corpus.len() {
                assert!(!bonf[i] || holm[i], "bonferroni ship outside holm set at {i}");
                assert!(!hoch[i] || homm[i], "hochberg ship outside hommel set at {i}");
            }
        }
    }

    #[test]
    fn replay_is_deterministic_and_worker_invariant() {
        let corpus = generate_corpus(&small_cfg(150)).unwrap();
        let run = || {
            replay(
                &corpus,
                &[AdjustMethod::Bh, AdjustMethod::Holm],
                FamilyMode::Naive,
                0.05,
                false,
            )
            .unwrap()
        };
        let a = run();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(a, b);
    }

    #[test]
    fn scoring_splits_ship_rate_exactly() {
        let corpus = generate_corpus(&small_cfg(500)).unwrap();
        let result = replay(
            &corpus,
            &[AdjustMethod::Bh],
            FamilyMode::SuccessOnly,
            0.05,
            true,
        )
        .unwrap();
        let scores = score_corpus(&corpus, &result).unwrap();
        for s in &scores {
            assert!((s.true_ship_rate + s.false_ship_rate - s.ship_rate).abs() < 1e-12);
            assert!(s.ship_rate >= 0.0 && s.ship_rate <= 1.0);
        }
    }

    #[test]
    fn all_null_corpus_keeps_bonferroni_false_ships_near_alpha() {
        let mut cfg = small_cfg(1500);
        cfg.null_fraction = 1.0;
        cfg.guardrail_null_fraction = 1.0;
        cfg.rollout_fraction = 0.0;
        let corpus = generate_corpus(&cfg).unwrap();
        let result = replay(
            &corpus,
            &[AdjustMethod::Bonferroni],
            FamilyMode::SuccessOnly,
            0.05,
            true,
        )
        .unwrap();
        let scores = score_corpus(&corpus, &result).unwrap();
        let bonf = &scores[0];
        assert_eq!(bonf.true_ship_rate, 0.0, "no non-nulls exist to drive ships");
        let bound = 0.05 + 3.0 * (0.05 * 0.95 / bonf.ab_comparisons as f64).sqrt();
        assert!(
            bonf.false_ship_rate <= bound,
            "false-ship rate {} above {bound}",
            bonf.false_ship_rate
        );
    }

    #[test]
    fn beneficial_only_corpus_has_zero_false_ships() {
        let mut cfg = small_cfg(400);
        cfg.null_fraction = 0.0;
        cfg.success_harmful_fraction = 0.0;
        let corpus = generate_corpus(&cfg).unwrap();
        let result = replay(
            &corpus,
            &[AdjustMethod::Bh, AdjustMethod::Holm],
            FamilyMode::SuccessOnly,
            0.05,
            true,
        )
        .unwrap();
        for s in score_corpus(&corpus, &result).unwrap() {
            assert_eq!(s.false_ship_rate, 0.0);
        }
    }

    #[test]
    fn vr_crossed_bonferroni_row_is_baseline() {
        let corpus = generate_corpus(&small_cfg(300)).unwrap();
        let rows = vr_crossed_replay(
            &corpus,
            &[AdjustMethod::Holm, AdjustMethod::Bh],
            0.05,
        )
        .unwrap();
        let bonf = rows
            .iter()
            .find(|r| r.method == AdjustMethod::Bonferroni)
            .unwrap();
        assert!(bonf.gap_delta_pp.is_none());
        // Holm's disjunctive behavior is identical to Bonferroni's, so its
        // gap Δ is exactly zero in both variants.
        let holm = rows.iter().find(|r| r.method == AdjustMethod::Holm).unwrap();
        assert!(holm.gap_delta_pp.unwrap().abs() < 1e-12);
    }

    #[test]
    fn fixture_is_homogeneous_and_success_only() {
        let fixture = decorrelation_fixture(300, (0.05, 0.15), 9).unwrap();
        assert_eq!(fixture.len(), 300);
        for r in &fixture {
            assert_eq!(r.metrics.len(), 8);
            assert!(r
                .metrics
                .iter()
                .all(|m| m.role == MetricRole::Success && m.truth.unwrap().nonnull));
        }
        assert!(decorrelation_fixture(0, (0.1, 0.2), 1).is_err());
        assert!(decorrelation_fixture(10, (0.5, 0.1), 1).is_err());
    }

    #[test]
    fn config_serde_rejects_unknown_fields() {
        let cfg = CorpusConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: CorpusConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let bad = json.replacen('{', "{\"bogus\": 1,", 1);
        assert!(serde_json::from_str::<CorpusConfig>(&bad).is_err());
    }

    #[test]
    fn config_validation_catches_errors() {
        let mut cfg = CorpusConfig::default();
        cfg.vr_weight_range = (0.5, 1.0);
        assert!(generate_corpus(&cfg).is_err());
        let mut cfg2 = CorpusConfig::default();
        cfg2.success_count_dist = vec![];
        assert!(generate_corpus(&cfg2).is_err());
        let mut cfg3 = CorpusConfig::default();
        cfg3.null_fraction = 1.2;
        assert!(generate_corpus(&cfg3).is_err());
    }
}
