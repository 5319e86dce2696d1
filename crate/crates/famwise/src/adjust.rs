//! P-value adjustment for multiple testing.
//!
//! Testing a family of m hypotheses at level α each inflates the family-wise
//! error rate to 1 − (1 − α)^m under independence. The corrections here trade
//! power for control of either the family-wise error rate (FWER) or the false
//! discovery rate (FDR).
//!
//! ## Methods
//!
//! | name         | kind      | adjusted p-value                                     |
//! |--------------|-----------|------------------------------------------------------|
//! | `none`       | —         | p_i (no adjustment)                                  |
//! | `bonferroni` | FWER      | min(1, m·p_i)                                        |
//! | `holm`       | FWER      | step-down running max of (m−i+1)·p_(i)               |
//! | `hochberg`   | FWER      | step-up running min of (m−i+1)·p_(i)                 |
//! | `hommel`     | FWER      | closed testing with Simes local tests                |
//! | `bh`         | FDR       | step-up running min of (m/i)·p_(i)                   |
//! | `by`         | FDR       | `bh` scaled by c(m) = Σ_{k=1..m} 1/k                 |
//!
//! Hommel uses the standard O(m²) algorithm; [`closure_oracle`] is the
//! exponential closed-testing reference it is validated against (Holm is
//! closed Bonferroni testing, Hommel is closed Simes testing).
//!
//! Every method is a [`Correction`] trait object in a static registry, so new
//! procedures can be added without touching call sites; [`AdjustMethod`] is
//! the serializable handle the CLI and config files use.
//!
//! ## References
//!
//! - Holm (1979), "A simple sequentially rejective multiple test procedure".
//! - Hommel (1988), "A stagewise rejective multiple test procedure based on a
//!   modified Bonferroni test"; Wright (1992) for the O(m²) algorithm.
//! - Benjamini & Hochberg (1995); Benjamini & Yekutieli (2001).
//! - Nyholt (2004) for the effective number of independent tests.

use crate::error::{Error, Result};
use crate::num::matrix::symmetric_eigenvalues;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Correction trait and registry
// ---------------------------------------------------------------------------

/// A p-value adjustment procedure.
///
/// Implementations must be pure: `adjust` maps raw p-values (already
/// validated to lie in [0,1]) to adjusted p-values in input order.
pub trait Correction: Send + Sync {
    /// Registry name (lowercase, stable across releases).
    fn name(&self) -> &'static str;
    /// Adjusted p-values, same order and length as the input.
    fn adjust(&self, p: &[f64]) -> Vec<f64>;
}

struct NoAdjustment;
struct Bonferroni;
struct Holm;
struct Hochberg;
struct Hommel;
struct BenjaminiHochberg;
struct BenjaminiYekutieli;

/// All registered corrections, in presentation order.
static REGISTRY: [&dyn Correction; 7] = [
    &NoAdjustment,
    &Bonferroni,
    &Holm,
    &Hochberg,
    &Hommel,
    &BenjaminiHochberg,
    &BenjaminiYekutieli,
];

/// The full correction registry (presentation order: none, bonferroni, holm,
/// hochberg, hommel, bh, by).
pub fn correction_registry() -> &'static [&'static dyn Correction] {
    &REGISTRY
}

/// Looks a correction up by its registry name.
///
/// # Errors
///
/// Unknown name.
pub fn correction_by_name(name: &str) -> Result<&'static dyn Correction> {
    REGISTRY
        .iter()
        .find(|c| c.name() == name)
        .copied()
        .ok_or_else(|| {
            let known: Vec<&str> = REGISTRY.iter().map(|c| c.name()).collect();
            Error::validation(format!(
                "unknown adjustment method {name:?}; known methods: {}",
                known.join(", ")
            ))
        })
}

// ---------------------------------------------------------------------------
// Method handle
// ---------------------------------------------------------------------------

/// Serializable handle for a registered correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMethod {
    /// No adjustment; raw p-values pass through.
    None,
    /// Bonferroni: min(1, m·p).
    Bonferroni,
    /// Holm step-down (uniformly better than Bonferroni, same guarantees).
    Holm,
    /// Hochberg step-up (valid under nonnegative dependence).
    Hochberg,
    /// Hommel closed Simes testing (most powerful of the FWER family here).
    Hommel,
    /// Benjamini–Hochberg FDR step-up.
    Bh,
    /// Benjamini–Yekutieli FDR step-up (valid under arbitrary dependence).
    By,
}

impl AdjustMethod {
    /// All methods, registry order.
    pub const ALL: [AdjustMethod; 7] = [
        AdjustMethod::None,
        AdjustMethod::Bonferroni,
        AdjustMethod::Holm,
        AdjustMethod::Hochberg,
        AdjustMethod::Hommel,
        AdjustMethod::Bh,
        AdjustMethod::By,
    ];

    /// Registry name of this method.
    pub fn name(self) -> &'static str {
        match self {
            AdjustMethod::None => "none",
            AdjustMethod::Bonferroni => "bonferroni",
            AdjustMethod::Holm => "holm",
            AdjustMethod::Hochberg => "hochberg",
            AdjustMethod::Hommel => "hommel",
            AdjustMethod::Bh => "bh",
            AdjustMethod::By => "by",
        }
    }

    /// The registered implementation behind this handle.
    pub fn correction(self) -> &'static dyn Correction {
        correction_by_name(self.name()).expect("every AdjustMethod is registered")
    }
}

impl std::fmt::Display for AdjustMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AdjustMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AdjustMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown adjustment method {s:?}; known methods: {}",
                    AdjustMethod::ALL.map(AdjustMethod::name).join(", ")
                ))
            })
    }
}

// ---------------------------------------------------------------------------
// Method implementations
// ---------------------------------------------------------------------------

/// Indices that sort `p` ascending (stable, so ties keep input order).
fn ascending_order(p: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("validated finite p"));
    idx
}

impl Correction for NoAdjustment {
    fn name(&self) -> &'static str {
        "none"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        p.to_vec()
    }
}

impl Correction for Bonferroni {
    fn name(&self) -> &'static str {
        "bonferroni"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        let m = p.len() as f64;
        p.iter().map(|&pi| (m * pi).min(1.0)).collect()
    }
}

impl Correction for Holm {
    fn name(&self) -> &'static str {
        "holm"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        let m = p.len();
        let order = ascending_order(p);
        let mut out = vec![0.0; m];
        let mut running = 0.0_f64;
        for (rank, &i) in order.iter().enumerate() {
            let candidate = ((m - rank) as f64) * p[i];
            running = running.max(candidate).min(1.0);
            out[i] = running;
        }
        out
    }
}

impl Correction for Hochberg {
    fn name(&self) -> &'static str {
        "hochberg"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        let m = p.len();
        let order = ascending_order(p);
        let mut out = vec![0.0; m];
        let mut running = 1.0_f64;
        for (rank, &i) in order.iter().enumerate().rev() {
            let candidate = ((m - rank) as f64) * p[i];
            running = running.min(candidate).min(1.0);
            out[i] = running;
        }
        out
    }
}

impl Correction for Hommel {
    fn name(&self) -> &'static str {
        "hommel"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        let n = p.len();
        if n <= 1 {
            return p.to_vec();
        }
        if n == 2 {
            // For two hypotheses the closed Simes procedure coincides with
            // Hochberg's.
            return Hochberg.adjust(p);
        }
        let order = ascending_order(p);
        let sorted: Vec<f64> = order.iter().map(|&i| p[i]).collect();

        // Wright (1992): O(m²) computation of the closed-Simes adjusted
        // p-values over the sorted vector.
        //
        // The Simes terms are evaluated as p · (multiplier / divisor), not
        // (multiplier · p) / divisor: when multiplier == divisor the ratio
        // is exactly 1.0, so the term equals the raw p bitwise. The other
        // order can round the largest term up one ULP above max(p), which
        // breaks the hommel ≤ hochberg dominance guarantee at equality.
        let nf = n as f64;
        let init = (0..n)
            .map(|i| sorted[i] * (nf / (i as f64 + 1.0)))
            .fold(f64::INFINITY, f64::min);
        let mut pa = vec![init; n];
        let mut q = vec![0.0; n];
        for m_sub in (2..=n - 1).rev() {
            let mf = m_sub as f64;
            // Tail block: the last m_sub − 1 order statistics with Simes
            // divisors 2..=m_sub.
            let tail_start = n - m_sub + 1;
            let mut q1 = f64::INFINITY;
            for (k, idx) in (tail_start..n).enumerate() {
                q1 = q1.min(sorted[idx] * (mf / (k as f64 + 2.0)));
            }
            for (i, qi) in q.iter_mut().enumerate().take(tail_start) {
                *qi = (mf * sorted[i]).min(q1);
            }
            let fill = q[tail_start - 1];
            for qi in q.iter_mut().take(n).skip(tail_start) {
                *qi = fill;
            }
            for (pai, &qi) in pa.iter_mut().zip(&q) {
                *pai = pai.max(qi);
            }
        }

        let mut out = vec![0.0; n];
        for (rank, &i) in order.iter().enumerate() {
            out[i] = pa[rank].max(sorted[rank]).min(1.0);
        }
        out
    }
}

/// Shared step-up loop for the FDR procedures; `scale` is 1 for BH and c(m)
/// for BY.
fn fdr_step_up(p: &[f64], scale: f64) -> Vec<f64> {
    let m = p.len();
    let order = ascending_order(p);
    let mut out = vec![0.0; m];
    let mut running = 1.0_f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        let candidate = scale * (m as f64 / (rank as f64 + 1.0)) * p[i];
        running = running.min(candidate).min(1.0);
        out[i] = running;
    }
    out
}

impl Correction for BenjaminiHochberg {
    fn name(&self) -> &'static str {
        "bh"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        fdr_step_up(p, 1.0)
    }
}

impl Correction for BenjaminiYekutieli {
    fn name(&self) -> &'static str {
        "by"
    }

    fn adjust(&self, p: &[f64]) -> Vec<f64> {
        fdr_step_up(p, harmonic(p.len()))
    }
}

/// Harmonic number c(m) = Σ_{k=1..m} 1/k.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

// ---------------------------------------------------------------------------
// Public adjustment API
// ---------------------------------------------------------------------------

/// Raw and adjusted p-values for one family, entries in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedPValues {
    /// Raw p-values as given.
    pub raw: Vec<f64>,
    /// Adjusted p-values, same order.
    pub adjusted: Vec<f64>,
    /// Method that produced them.
    pub method: AdjustMethod,
    /// Family size m.
    pub family_size: usize,
}

impl AdjustedPValues {
    /// Indices with adjusted p strictly below `alpha`.
    pub fn reject_set(&self, alpha: f64) -> Vec<usize> {
        reject_set(&self.adjusted, alpha)
    }
}

/// Validates that every p-value lies in [0, 1].
fn validate_pvalues(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::validation("adjust: p-value vector must be nonempty"));
    }
    for (i, &pi) in p.iter().enumerate() {
        if !pi.is_finite() || !(0.0..=1.0).contains(&pi) {
            return Err(Error::validation(format!(
                "adjust: p-value at index {i} is {pi}, must be in [0, 1]"
            )));
        }
    }
    Ok(())
}

/// Adjusts a family of p-values with the given method.
///
/// # Errors
///
/// Empty input or any p-value outside [0, 1].
pub fn adjust(p: &[f64], method: AdjustMethod) -> Result<AdjustedPValues> {
    validate_pvalues(p)?;
    let adjusted = method.correction().adjust(p);
    debug_assert!(adjusted.len() == p.len());
    Ok(AdjustedPValues {
        raw: p.to_vec(),
        adjusted,
        method,
        family_size: p.len(),
    })
}

/// Indices whose adjusted p-value is strictly below `alpha`.
pub fn reject_set(adjusted: &[f64], alpha: f64) -> Vec<usize> {
    adjusted
        .iter()
        .enumerate()
        .filter(|(_, &q)| q < alpha)
        .map(|(i, _)| i)
        .collect()
}

// ---------------------------------------------------------------------------
// Closed-testing oracle
// ---------------------------------------------------------------------------

/// Local intersection test used by [`closure_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalTest {
    /// Reject H_S when min_{i∈S} p_i < α/|S| (closure equals Holm).
    Bonferroni,
    /// Reject H_S when ∃j: p_(j) < j·α/|S| over S's order statistics
    /// (closure equals Hommel).
    Simes,
}

/// Brute-force closed-testing procedure: rejects H_i iff every intersection
/// hypothesis containing i is rejected by the local test at level `alpha`.
///
/// Exponential in m — this is a verification oracle, not a production path.
///
/// # Errors
///
/// m > 16 (2^m − 1 intersections would be enumerated), invalid p-values, or
/// `alpha` outside (0, 1).
pub fn closure_oracle(p: &[f64], local_test: LocalTest, alpha: f64) -> Result<Vec<usize>> {
    validate_pvalues(p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::validation(format!(
            "closure_oracle: alpha must be in (0,1), got {alpha}"
        )));
    }
    let m = p.len();
    if m > 16 {
        return Err(Error::validation(format!(
            "closure_oracle: family size {m} exceeds the enumeration limit of 16"
        )));
    }

    let n_masks: u32 = 1 << m;
    let mut rejected_mask = vec![false; n_masks as usize];
    let mut subset = Vec::with_capacity(m);
    for mask in 1..n_masks {
        subset.clear();
        for i in 0..m {
            if mask & (1 << i) != 0 {
                subset.push(p[i]);
            }
        }
        let size = subset.len() as f64;
        let ok = match local_test {
            LocalTest::Bonferroni => {
                let min = subset.iter().copied().fold(f64::INFINITY, f64::min);
                min < alpha / size
            }
            LocalTest::Simes => {
                subset.sort_by(|a, b| a.partial_cmp(b).expect("validated finite p"));
                subset
                    .iter()
                    .enumerate()
                    .any(|(j, &pj)| pj < (j as f64 + 1.0) * alpha / size)
            }
        };
        rejected_mask[mask as usize] = ok;
    }

    let mut out = Vec::new();
    'elem: for i in 0..m {
        for mask in 1..n_masks {
            if mask & (1 << i) != 0 && !rejected_mask[mask as usize] {
                continue 'elem;
            }
        }
        out.push(i);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Effective number of tests
// ---------------------------------------------------------------------------

/// Nyholt's effective number of independent tests for a correlated family:
/// m_eff = 1 + (m−1)·(1 − var(λ)/m), with λ the eigenvalues of the
/// correlation matrix and the variance taken with denominator m−1; the result
/// is clamped to [1, m].
///
/// Informational only — no correction in this crate silently substitutes
/// m_eff for m.
///
/// # Errors
///
/// Invalid (non-square, asymmetric, non-finite) matrices.
pub fn effective_count(corr: &[Vec<f64>]) -> Result<f64> {
    let m = corr.len();
    if m == 0 {
        return Err(Error::validation("effective_count: matrix must be non-empty"));
    }
    if m == 1 {
        return Ok(1.0);
    }
    let eig = symmetric_eigenvalues(corr)?;
    let mf = m as f64;
    let mean = eig.iter().sum::<f64>() / mf;
    let var = eig.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (mf - 1.0);
    Ok((1.0 + (mf - 1.0) * (1.0 - var / mf)).clamp(1.0, mf))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
