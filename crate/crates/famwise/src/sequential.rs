//! Group-sequential boundaries by alpha spending, one schedule per metric.
//!
//! Metrics accrue information at different speeds — a one-day activation
//! metric may be at 90% of its planned sample while a second-week retention
//! metric is still at 0 — so a shared "information fraction of the
//! experiment" does not exist. The resolution implemented here: give each
//! success metric an independent budget α/S and its own spending schedule,
//! evaluated at its *own* information fractions. No cross-metric clock is
//! ever assumed.
//!
//! ## Methods
//!
//! Spending functions (cumulative type-I error f(t) spent by information
//! fraction t, with f(0)=0 and f(1)=budget):
//!
//! - `obf_type`:    f(t) = 2(1 − Φ(z_{budget/2}/√t)) (early looks are nearly
//!   free, the classic O'Brien–Fleming shape)
//! - `pocock_type`: f(t) = budget·ln(1 + (e−1)t) (near-flat boundaries)
//! - `linear`:      f(t) = budget·t
//!
//! Boundaries come from the standard recursion for the standardized
//! statistic's conditionally Gaussian increments: the no-crossing subdensity
//! of B(t_k) (Brownian motion at the look fractions, Z_k = B(t_k)/√t_k) is
//! propagated look to look by trapezoidal convolution on [−8, 8], and each
//! look's bound is found by bisection so that the crossing mass equals that
//! look's incremental spend. The grid step is halved adaptively until no
//! bound moves by more than 1e-5. A look whose incremental spend is zero
//! (e.g. an O'Brien–Fleming schedule with a very early look) gets a +∞
//! sentinel bound: no rejection is possible there.
//!
//! `bonferroni_over_time` is the conservative alternative that ignores the
//! cross-look correlation: each look's bound is the plain normal quantile of
//! its incremental spend, which always sits at or above the recursion's
//! bound.
//!
//! Rejection convention: reject when |z| ≥ bound (closed boundary).
//!
//! ## References
//!
//! - Lan & DeMets (1983), "Discrete sequential boundaries for clinical
//!   trials".
//! - Jennison & Turnbull (2000), *Group Sequential Methods*, ch. 19 (the
//!   recursive integration scheme).

use crate::error::{Error, Result};
use crate::num::normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Spending functions
// ---------------------------------------------------------------------------

/// A cumulative alpha-spending function.
///
/// Implementations may assume `budget ∈ (0,1)` and `t ∈ (0,1]` — the public
/// entry points validate before dispatching.
pub trait Spending: Send + Sync {
    /// Registry name (lowercase, stable across releases).
    fn name(&self) -> &'static str;
    /// Cumulative spend f(t) for the given total budget.
    fn cumulative(&self, budget: f64, t: f64) -> f64;
}

struct ObfType;
struct PocockType;
struct LinearSpend;

impl Spending for ObfType {
    fn name(&self) -> &'static str {
        "obf_type"
    }

    fn cumulative(&self, budget: f64, t: f64) -> f64 {
        let q = std_normal_quantile(1.0 - budget / 2.0)
            .expect("validated: budget in (0,1)");
        2.0 * (1.0 - std_normal_cdf(q / t.sqrt()))
    }
}

impl Spending for PocockType {
    fn name(&self) -> &'static str {
        "pocock_type"
    }

    fn cumulative(&self, budget: f64, t: f64) -> f64 {
        budget * (1.0 + (std::f64::consts::E - 1.0) * t).ln()
    }
}

impl Spending for LinearSpend {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn cumulative(&self, budget: f64, t: f64) -> f64 {
        budget * t
    }
}

/// All registered spending functions.
static SPENDING_REGISTRY: [&dyn Spending; 3] = [&ObfType, &PocockType, &LinearSpend];

/// The spending-function registry (obf_type, pocock_type, linear).
pub fn spending_registry() -> &'static [&'static dyn Spending] {
    &SPENDING_REGISTRY
}

/// Looks a spending function up by registry name.
///
/// # Errors
///
/// Unknown name.
pub fn spending_by_name(name: &str) -> Result<&'static dyn Spending> {
    SPENDING_REGISTRY
        .iter()
        .find(|s| s.name() == name)
        .copied()
        .ok_or_else(|| {
            let known: Vec<&str> = SPENDING_REGISTRY.iter().map(|s| s.name()).collect();
            Error::validation(format!(
                "unknown spending function {name:?}; known functions: {}",
                known.join(", ")
            ))
        })
}

/// Serializable handle for a registered spending function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpendingFunction {
    /// O'Brien–Fleming-type spending.
    ObfType,
    /// Pocock-type spending.
    PocockType,
    /// Linear spending.
    Linear,
}

impl SpendingFunction {
    /// All spending functions, registry order.
    pub const ALL: [SpendingFunction; 3] = [
        SpendingFunction::ObfType,
        SpendingFunction::PocockType,
        SpendingFunction::Linear,
    ];

    /// Registry name of this function.
    pub fn name(self) -> &'static str {
        match self {
            SpendingFunction::ObfType => "obf_type",
            SpendingFunction::PocockType => "pocock_type",
            SpendingFunction::Linear => "linear",
        }
    }

    /// The registered implementation behind this handle.
    pub fn spending(self) -> &'static dyn Spending {
        spending_by_name(self.name()).expect("every SpendingFunction is registered")
    }
}

impl std::fmt::Display for SpendingFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SpendingFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpendingFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown spending function {s:?}; known functions: {}",
                    SpendingFunction::ALL.map(SpendingFunction::name).join(", ")
                ))
            })
    }
}

/// Cumulative alpha spend f(t).
///
/// # Errors
///
/// `budget` outside (0,1) or `t` outside (0,1].
pub fn alpha_spend(function: SpendingFunction, budget: f64, t: f64) -> Result<f64> {
    if !(budget > 0.0 && budget < 1.0) {
        return Err(Error::validation(format!(
            "alpha_spend: budget must be in (0,1), got {budget}"
        )));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::validation(format!(
            "alpha_spend: information fraction must be in (0,1], got {t}"
        )));
    }
    Ok(function.spending().cumulative(budget, t))
}

// ---------------------------------------------------------------------------
// Schedules and boundaries
// ---------------------------------------------------------------------------

/// Number of sides of the sequential test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sides {
    /// One-sided: reject when z ≥ bound.
    One,
    /// Two-sided: reject when |z| ≥ bound.
    Two,
}

impl std::fmt::Display for Sides {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sides::One => "one",
            Sides::Two => "two",
        })
    }
}

impl std::str::FromStr for Sides {
    type Err = Error;

    fn from_str(s: &str) -> Result<Sides> {
        match s {
            "one" => Ok(Sides::One),
            "two" => Ok(Sides::Two),
            other => Err(Error::validation(format!(
                "unknown sidedness {other:?}; expected one of: one, two"
            ))),
        }
    }
}

/// One metric's look schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookSchedule {
    /// Metric this schedule belongs to.
    pub metric_name: String,
    /// Information fractions of the looks: strictly increasing, in (0,1].
    pub fractions: Vec<f64>,
    /// This metric's own budget (α/S under the per-metric split).
    pub budget: f64,
    /// One- or two-sided testing.
    pub sides: Sides,
}

impl LookSchedule {
    fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::validation(format!(
                "schedule {:?}: needs at least one look",
                self.metric_name
            )));
        }
        if !(self.budget > 0.0 && self.budget < 1.0) {
            return Err(Error::validation(format!(
                "schedule {:?}: budget must be in (0,1), got {}",
                self.metric_name, self.budget
            )));
        }
        let mut prev = 0.0;
        for (k, &t) in self.fractions.iter().enumerate() {
            if !t.is_finite() || t <= prev || t > 1.0 {
                return Err(Error::validation(format!(
                    "schedule {:?}: fractions must be strictly increasing in (0,1]; \
                     violation at look {k} (t={t})",
                    self.metric_name
                )));
            }
            prev = t;
        }
        Ok(())
    }

    /// Number of looks.
    pub fn looks(&self) -> usize {
        self.fractions.len()
    }
}

/// Computed boundaries for one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GstBoundaries {
    /// The schedule these boundaries belong to.
    pub schedule: LookSchedule,
    /// Z-scale rejection bounds per look; +∞ (serialized as null) marks a
    /// look at which no rejection is possible.
    #[serde(
        serialize_with = "serde_bounds::serialize",
        deserialize_with = "serde_bounds::deserialize"
    )]
    pub z_bounds: Vec<f64>,
    /// Cumulative spend f(t_k) per look; the last entry equals the budget
    /// when the final look is at full information.
    pub cumulative_spend: Vec<f64>,
}

/// Serializes +∞ bounds as JSON null (and back).
mod serde_bounds {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            v.iter()
                .map(|&b| if b.is_finite() { Some(b) } else { None }),
        )
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|o| match o {
                Some(b) if b.is_finite() => Ok(b),
                Some(b) => Err(D::Error::custom(format!("non-finite bound {b}"))),
                None => Ok(f64::INFINITY),
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Information fractions
// ---------------------------------------------------------------------------

/// An information fraction with data-maturity flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoFraction {
    /// Clamped fraction in [1e-6, 1].
    pub value: f64,
    /// True when the raw fraction was below the clamp floor (metric has
    /// essentially no data yet).
    pub immature: bool,
    /// True when observed exceeded planned (clamped down to 1).
    pub overrun: bool,
}

/// Observed/planned information fraction, clamped to [1e-6, 1] with
/// immaturity and overrun flags.
///
/// # Errors
///
/// `n_planned ≤ 0` or negative/non-finite observations.
pub fn info_fraction(n_observed: f64, n_planned: f64) -> Result<InfoFraction> {
    if !(n_planned > 0.0) || !n_planned.is_finite() {
        return Err(Error::validation(format!(
            "info_fraction: n_planned must be > 0, got {n_planned}"
        )));
    }
    if !(n_observed >= 0.0) || !n_observed.is_finite() {
        return Err(Error::validation(format!(
            "info_fraction: n_observed must be ≥ 0, got {n_observed}"
        )));
    }
    const EPS: f64 = 1e-6;
    let raw = n_observed / n_planned;
    Ok(InfoFraction {
        value: raw.clamp(EPS, 1.0),
        immature: raw < EPS,
        overrun: raw > 1.0,
    })
}

// ---------------------------------------------------------------------------
// Boundary recursion
// ---------------------------------------------------------------------------

/// Incremental spend below this threshold is treated as zero (sentinel look).
const SPEND_FLOOR: f64 = 1e-15;
/// Outer range of the Brownian-state grid.
const GRID_RANGE: f64 = 8.0;
/// Initial grid step of the adaptive ladder.
const INITIAL_STEP: f64 = 0.08;
/// Convergence target for boundary movement between grid refinements.
const LADDER_TOL: f64 = 1e-5;
/// Maximum refinement levels before giving up.
const MAX_LEVELS: usize = 9;

/// Subdensity of the Brownian state B(t_k) on the no-crossing event,
/// tabulated on a uniform grid.
struct StateDensity {
    x: Vec<f64>,
    g: Vec<f64>,
}

impl StateDensity {
    /// Uniform grid of about (hi−lo)/h cells over [lo, hi].
    fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
        let n = (((hi - lo) / h).ceil() as usize).max(64);
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect()
    }

    /// Analytic first-look density: B(t₁) ~ N(0, t₁) on [lo, hi].
    fn first_look(t1: f64, lo: f64, hi: f64, h: f64) -> Self {
        let sd = t1.sqrt();
        let x = Self::grid(lo, hi, h);
        let g = x.iter().map(|&b| std_normal_pdf(b / sd) / sd).collect();
        StateDensity { x, g }
    }

    /// Convolves with a N(0, Δ) increment, evaluated at `targets`.
    fn convolve_to(&self, delta: f64, targets: &[f64]) -> Vec<f64> {
        let sd = delta.sqrt();
        let n = self.x.len();
        let h = (self.x[n - 1] - self.x[0]) / (n - 1) as f64;
        // Trapezoid weights: h inside, h/2 at the ends.
        let window = 8.5 * sd;
        targets
            .iter()
            .map(|&y| {
                // Restrict to |y − x| ≤ window; the neglected kernel mass is
                // below 1e-16.
                let i_lo = (((y - window) - self.x[0]) / h).floor().max(0.0) as usize;
                let i_hi = ((((y + window) - self.x[0]) / h).ceil() as usize).min(n - 1);
                let mut acc = 0.0;
                for i in i_lo..=i_hi {
                    let w = if i == 0 || i == n - 1 { h / 2.0 } else { h };
                    acc += w * self.g[i] * std_normal_pdf((y - self.x[i]) / sd);
                }
                acc / sd
            })
            .collect()
    }

    /// Total mass by the trapezoid rule.
    fn mass(x: &[f64], g: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 1..x.len() {
            acc += 0.5 * (g[i] + g[i - 1]) * (x[i] - x[i - 1]);
        }
        acc
    }

    /// Integral of the piecewise-linear interpolant over [a, b] ∩ grid span.
    fn integral_between(x: &[f64], g: &[f64], a: f64, b: f64) -> f64 {
        let a = a.max(x[0]);
        let b = b.min(x[x.len() - 1]);
        if a >= b {
            return 0.0;
        }
        let value_at = |q: f64| -> f64 {
            let n = x.len();
            let h = (x[n - 1] - x[0]) / (n - 1) as f64;
            let i = (((q - x[0]) / h).floor() as usize).min(n - 2);
            let w = (q - x[i]) / (x[i + 1] - x[i]);
            g[i] * (1.0 - w) + g[i + 1] * w
        };
        let mut acc = 0.0;
        let mut prev_q = a;
        let mut prev_v = value_at(a);
        for i in 0..x.len() {
            if x[i] <= a {
                continue;
            }
            if x[i] >= b {
                break;
            }
            acc += 0.5 * (prev_v + g[i]) * (x[i] - prev_q);
            prev_q = x[i];
            prev_v = g[i];
        }
        acc += 0.5 * (prev_v + value_at(b)) * (b - prev_q);
        acc
    }
}

/// Continue-region interval in B-space for a bound c at fraction t.
fn continue_region(sides: Sides, c: f64, t: f64) -> (f64, f64) {
    let cut = c * t.sqrt();
    match sides {
        Sides::Two => (-cut.min(GRID_RANGE), cut.min(GRID_RANGE)),
        Sides::One => (-GRID_RANGE, cut.min(GRID_RANGE)),
    }
}

/// One full recursion pass at grid step `h`. With `given_bounds` present the
/// bounds are taken as-is and the per-look crossing probabilities are
/// returned instead of solved-for bounds.
fn recursion_pass(
    schedule: &LookSchedule,
    spends: &[f64],
    h: f64,
    given_bounds: Option<&[f64]>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k_looks = schedule.looks();
    let mut bounds = vec![f64::INFINITY; k_looks];
    let mut crossing = vec![0.0; k_looks];
    // Restricted state density and the fraction it lives at. `None` means no
    // mass has been removed yet, so the walk is still plain Brownian motion
    // with an analytic marginal. Sentinel looks (zero incremental spend)
    // leave the state untouched.
    let mut state: Option<(f64, StateDensity)> = None;

    for k in 0..k_looks {
        let t_k = schedule.fractions[k];
        let s_k = if k == 0 {
            spends[0]
        } else {
            spends[k] - spends[k - 1]
        };

        // Tabulate the current state density over the full range (analytic
        // normal while unrestricted; otherwise a convolution of the last
        // restricted continue-region density).
        let (x_probe, g_probe) = match &state {
            None => {
                let d = StateDensity::first_look(t_k, -GRID_RANGE, GRID_RANGE, h);
                (d.x, d.g)
            }
            Some((t_prev, prev)) => {
                let delta = t_k - t_prev;
                let x = StateDensity::grid(-GRID_RANGE, GRID_RANGE, h);
                let g = prev.convolve_to(delta, &x);
                (x, g)
            }
        };
        let total = StateDensity::mass(&x_probe, &g_probe);

        let tail_mass = |c: f64| -> f64 {
            let (lo, hi) = continue_region(schedule.sides, c, t_k);
            total - StateDensity::integral_between(&x_probe, &g_probe, lo, hi)
        };

        let c_k = match given_bounds {
            Some(gb) => gb[k],
            None => {
                if s_k <= SPEND_FLOOR {
                    f64::INFINITY
                } else if k == 0 {
                    // First look: closed-form quantile, no recursion error.
                    match schedule.sides {
                        Sides::Two => std_normal_quantile(1.0 - s_k / 2.0)?,
                        Sides::One => std_normal_quantile(1.0 - s_k)?,
                    }
                } else {
                    // Bisection: tail_mass is decreasing in c.
                    let mut lo_c = 0.0;
                    let mut hi_c = GRID_RANGE / t_k.sqrt();
                    for _ in 0..80 {
                        let mid = 0.5 * (lo_c + hi_c);
                        if tail_mass(mid) > s_k {
                            lo_c = mid;
                        } else {
                            hi_c = mid;
                        }
                        if hi_c - lo_c < 1e-10 {
                            break;
                        }
                    }
                    0.5 * (lo_c + hi_c)
                }
            }
        };
        bounds[k] = c_k;
        crossing[k] = if c_k.is_finite() { tail_mass(c_k) } else { 0.0 };

        // Restrict to the continue region for the next look by re-gridding
        // over exactly that interval. An infinite bound removes no mass, so
        // the state (including "still unrestricted") carries over as-is.
        if k + 1 < k_looks && c_k.is_finite() {
            let (lo, hi) = continue_region(schedule.sides, c_k, t_k);
            let x_next = StateDensity::grid(lo, hi, h);
            let g_next = match &state {
                None => {
                    let sd = t_k.sqrt();
                    x_next
                        .iter()
                        .map(|&b| std_normal_pdf(b / sd) / sd)
                        .collect()
                }
                Some((t_prev, prev)) => {
                    let delta = t_k - t_prev;
                    prev.convolve_to(delta, &x_next)
                }
            };
            state = Some((
                t_k,
                StateDensity {
                    x: x_next,
                    g: g_next,
                },
            ));
        }
    }
    Ok((bounds, crossing))
}

/// Cumulative spends f(t_k) for a schedule.
fn cumulative_spends(schedule: &LookSchedule, function: SpendingFunction) -> Result<Vec<f64>> {
    schedule
        .fractions
        .iter()
        .map(|&t| alpha_spend(function, schedule.budget, t))
        .collect()
}

/// Solves the group-sequential boundaries for one schedule by recursive
/// numerical integration with adaptive grid refinement.
///
/// # Errors
///
/// Invalid schedule, or failure of the grid ladder to converge.
pub fn gst_boundaries(
    schedule: &LookSchedule,
    function: SpendingFunction,
) -> Result<GstBoundaries> {
    schedule.validate()?;
    let spends = cumulative_spends(schedule, function)?;

    let mut h = INITIAL_STEP;
    let (mut bounds, _) = recursion_pass(schedule, &spends, h, None)?;
    for _ in 1..MAX_LEVELS {
        h /= 2.0;
        let (next, _) = recursion_pass(schedule, &spends, h, None)?;
        let movement = bounds
            .iter()
            .zip(&next)
            .map(|(a, b)| {
                if a.is_finite() || b.is_finite() {
                    (a - b).abs()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        bounds = next;
        if movement < LADDER_TOL {
            return Ok(GstBoundaries {
                schedule: schedule.clone(),
                z_bounds: bounds,
                cumulative_spend: spends,
            });
        }
    }
    Err(Error::computation(
        "gst_boundaries: grid refinement did not converge (boundary still moving \
         after maximum refinement level)",
    ))
}

/// Per-look first-crossing probabilities under H0 for the given bounds,
/// computed by the same recursion on a fine fixed grid. Used to verify
/// self-consistency and as a reference for Monte Carlo checks.
///
/// # Errors
///
/// Invalid schedule or bound-vector length mismatch.
pub fn crossing_probabilities(schedule: &LookSchedule, z_bounds: &[f64]) -> Result<Vec<f64>> {
    schedule.validate()?;
    if z_bounds.len() != schedule.looks() {
        return Err(Error::validation(format!(
            "crossing_probabilities: {} bounds for {} looks",
            z_bounds.len(),
            schedule.looks()
        )));
    }
    // Spends are irrelevant when bounds are given; pass zeros.
    let spends = vec![0.0; schedule.looks()];
    let (_, crossing) = recursion_pass(schedule, &spends, 0.002, Some(z_bounds))?;
    Ok(crossing)
}

/// Bonferroni-over-time boundaries: each look's bound is the plain quantile
/// of its incremental spend, ignoring cross-look correlation. Conservative:
/// every bound is at or above the recursion's bound for the same schedule.
///
/// # Errors
///
/// Invalid schedule.
pub fn bonferroni_over_time(
    schedule: &LookSchedule,
    function: SpendingFunction,
) -> Result<GstBoundaries> {
    schedule.validate()?;
    let spends = cumulative_spends(schedule, function)?;
    let mut bounds = Vec::with_capacity(spends.len());
    for k in 0..spends.len() {
        let s_k = if k == 0 {
            spends[0]
        } else {
            spends[k] - spends[k - 1]
        };
        let b = if s_k <= SPEND_FLOOR {
            f64::INFINITY
        } else {
            match schedule.sides {
                Sides::Two => std_normal_quantile(1.0 - s_k / 2.0)?,
                Sides::One => std_normal_quantile(1.0 - s_k)?,
            }
        };
        bounds.push(b);
    }
    Ok(GstBoundaries {
        schedule: schedule.clone(),
        z_bounds: bounds,
        cumulative_spend: spends,
    })
}

/// Computes independent α/S boundaries for S success metrics, each at its
/// own information fractions.
///
/// # Errors
///
/// `success_count` not matching the number of schedules, or any invalid
/// schedule. Each schedule's own `budget` field is ignored and replaced by
/// alpha/S.
pub fn multi_metric_sequential(
    schedules: &[LookSchedule],
    alpha: f64,
    success_count: usize,
    function: SpendingFunction,
) -> Result<Vec<GstBoundaries>> {
    if schedules.is_empty() {
        return Err(Error::validation(
            "multi_metric_sequential: need at least one schedule",
        ));
    }
    if schedules.len() != success_count {
        return Err(Error::validation(format!(
            "multi_metric_sequential: {} schedules for {} success metrics",
            schedules.len(),
            success_count
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation(format!(
            "multi_metric_sequential: alpha must be in (0,1), got {alpha}"
        )));
    }
    let budget = alpha / success_count as f64;
    schedules
        .iter()
        .map(|s| {
            let mut own = s.clone();
            own.budget = budget;
            gst_boundaries(&own, function)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Interim-look evaluation
// ---------------------------------------------------------------------------

/// Outcome of one metric at one look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LookOutcome {
    /// Crossed its boundary at this look.
    Reject,
    /// Still inside the continuation region.
    Continue,
    /// Crossed at an earlier look (absorbing).
    AlreadyStopped,
}

/// Append-only monitoring state over per-metric boundaries.
///
/// All schedules must have the same number of looks (each analysis evaluates
/// every metric at its own fraction); the fractions themselves may differ
/// freely.
#[derive(Debug, Clone)]
pub struct MonitorState {
    boundaries: Vec<GstBoundaries>,
    next_look: usize,
    stopped_at: Vec<Option<usize>>,
}

impl MonitorState {
    /// Builds monitoring state over per-metric boundaries.
    ///
    /// # Errors
    ///
    /// Empty input or schedules with differing look counts.
    pub fn new(boundaries: Vec<GstBoundaries>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::validation("monitor: need at least one metric"));
        }
        let k = boundaries[0].schedule.looks();
        if let Some(bad) = boundaries.iter().find(|b| b.schedule.looks() != k) {
            return Err(Error::validation(format!(
                "monitor: schedule {:?} has {} looks, expected {k}",
                bad.schedule.metric_name,
                bad.schedule.looks()
            )));
        }
        let m = boundaries.len();
        Ok(Self {
            boundaries,
            next_look: 0,
            stopped_at: vec![None; m],
        })
    }

    /// Number of looks in the common schedule.
    pub fn looks(&self) -> usize {
        self.boundaries[0].schedule.looks()
    }

    /// The look that must be evaluated next.
    pub fn next_look(&self) -> usize {
        self.next_look
    }

    /// Look index at which each metric stopped, if it has.
    pub fn stopped_at(&self) -> &[Option<usize>] {
        &self.stopped_at
    }

    /// Evaluates one look. `look_index` must be exactly the next unevaluated
    /// look; `zstats` carries one z-statistic per metric, each computed at
    /// that metric's own information fraction. Rejection is on |z| ≥ bound
    /// (z ≥ bound one-sided) — the boundary itself rejects.
    ///
    /// # Errors
    ///
    /// Out-of-order or out-of-range look index, or a z-vector of the wrong
    /// length.
    pub fn evaluate_look(&mut self, look_index: usize, zstats: &[f64]) -> Result<Vec<LookOutcome>> {
        if look_index != self.next_look {
            return Err(Error::validation(format!(
                "monitor: out-of-order look {look_index}; expected look {}",
                self.next_look
            )));
        }
        if look_index >= self.looks() {
            return Err(Error::validation(format!(
                "monitor: look {look_index} beyond the {}-look schedule",
                self.looks()
            )));
        }
        if zstats.len() != self.boundaries.len() {
            return Err(Error::validation(format!(
                "monitor: {} z-statistics for {} metrics",
                zstats.len(),
                self.boundaries.len()
            )));
        }
        let mut out = Vec::with_capacity(zstats.len());
        for (i, (&z, b)) in zstats.iter().zip(&self.boundaries).enumerate() {
            if self.stopped_at[i].is_some() {
                out.push(LookOutcome::AlreadyStopped);
                continue;
            }
            let bound = b.z_bounds[look_index];
            let crossed = match b.schedule.sides {
                Sides::Two => z.abs() >= bound,
                Sides::One => z >= bound,
            };
            if crossed {
                self.stopped_at[i] = Some(look_index);
                out.push(LookOutcome::Reject);
            } else {
                out.push(LookOutcome::Continue);
            }
        }
        self.next_look += 1;
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
