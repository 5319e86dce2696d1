//! Table and document rendering: CSV, markdown, and JSON emission with a
//! provenance block.
//!
//! Every emitted artifact carries provenance — tool name, version, the seed
//! (when the producing operation consumed one), and an FNV-1a hash of the
//! canonical JSON of the configuration that produced it — so that a table
//! found in a results directory can be traced back to its inputs. Outputs
//! are deterministic byte-for-byte: floats render in Rust's shortest
//! round-trip form, row order follows input order, and no timestamps or
//! hostnames are written.
//!
//! ## Formats
//!
//! - **CSV**: provenance as leading `#`-comment lines, then a header row and
//!   data rows (RFC 4180 quoting). Non-finite values render as `inf`,
//!   `-inf`, `nan`; absent optional cells render empty.
//! - **Markdown**: a pipe table with the same cells, notes as trailing
//!   paragraphs, and a final provenance line.
//! - **JSON**: `{ "provenance": …, "data": … }` around the *typed* payload
//!   (not the stringified table), pretty-printed with a trailing newline.
//!
//! ## Methods
//!
//! The configuration hash is 64-bit FNV-1a over the compact JSON encoding
//! of the producing configuration, rendered as 16 lowercase hex digits.
//! FNV-1a is not collision-resistant; the hash is an identity check for
//! honest reruns, not an integrity seal.

use crate::adjust::AdjustedPValues;
use crate::decision::Decision;
use crate::error::{Error, Result};
use crate::planning::ExperimentPlan;
use crate::sequential::GstBoundaries;
use crate::sim::PowerTable;
use crate::corpus::{ReplayResult, ScoreRow, VrCrossedRow};
use serde::{Deserialize, Serialize};

/// Tool name stamped into provenance blocks.
pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");

/// Tool version stamped into provenance blocks.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// Output format
// ---------------------------------------------------------------------------

/// Emission format for rendered tables and documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Comma-separated values with `#`-comment provenance lines.
    Csv,
    /// Markdown pipe table.
    Md,
    /// JSON document wrapping the typed payload.
    Json,
}

impl std::fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Md => "md",
            OutputFormat::Json => "json",
        })
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "md" | "markdown" => Ok(OutputFormat::Md),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::validation(format!(
                "unknown output format {other:?}; known formats: csv, md, json"
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

/// Provenance block attached to every emitted artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Producing tool name.
    pub tool: String,
    /// Producing tool version.
    pub version: String,
    /// Seed the producing operation consumed, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// FNV-1a (64-bit, hex) of the producing configuration's compact JSON.
    pub config_hash: String,
}

impl Provenance {
    /// Builds a provenance block for `config`, hashing its compact JSON.
    ///
    /// # Errors
    ///
    /// Serialization failure of `config`.
    pub fn new<T: Serialize>(seed: Option<u64>, config: &T) -> Result<Provenance> {
        let canonical = serde_json::to_string(config)
            .map_err(|e| Error::validation(format!("provenance: cannot hash config: {e}")))?;
        Ok(Provenance {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            seed,
            config_hash: format!("{:016x}", fnv1a_64(canonical.as_bytes())),
        })
    }

    fn summary_line(&self) -> String {
        match self.seed {
            Some(s) => format!(
                "tool={} version={} seed={} config_hash={}",
                self.tool, self.version, s, self.config_hash
            ),
            None => format!(
                "tool={} version={} config_hash={}",
                self.tool, self.version, self.config_hash
            ),
        }
    }
}

/// 64-bit FNV-1a hash.
#[must_use]
pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET_BASIS;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

// ---------------------------------------------------------------------------
// Cell formatting
// ---------------------------------------------------------------------------

/// Formats a float for table cells: shortest round-trip decimal form, with
/// non-finite values as `inf` / `-inf` / `nan`.
#[must_use]
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

/// Formats an optional float; `None` renders as the empty cell.
#[must_use]
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_num)
}

fn csv_escape(cell: &str) -> String {
    if cell.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

fn md_escape(cell: &str) -> String {
    cell.replace('|', "\\|")
}

// ---------------------------------------------------------------------------
// Table model
// ---------------------------------------------------------------------------

/// A rendered table: a header, stringified rows, and free-form notes.
///
/// Cells are pre-stringified so that CSV and markdown emissions of the same
/// table are guaranteed to agree on every value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    /// Column headers.
    pub columns: Vec<String>,
    /// Data rows; every row has exactly one cell per column.
    pub rows: Vec<Vec<String>>,
    /// Notes emitted as `#`-comments (CSV) or paragraphs (markdown).
    pub notes: Vec<String>,
}

impl Table {
    /// Creates an empty table with the given column headers.
    #[must_use]
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|c| (*c).to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Appends a row.
    ///
    /// # Panics
    ///
    /// If the row width differs from the header width (programming error).
    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "table row width {} != column count {}",
            row.len(),
            self.columns.len()
        );
        self.rows.push(row);
    }

    /// Appends a note.
    pub fn push_note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Renders the table as CSV with provenance comment lines.
    #[must_use]
    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool: {} {}\n", prov.tool, prov.version));
        if let Some(seed) = prov.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        out.push_str(&format!("# config_hash: {}\n", prov.config_hash));
        for note in &self.notes {
            out.push_str(&format!("# {note}\n"));
        }
        out.push_str(
            &self
                .columns
                .iter()
                .map(|c| csv_escape(c))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for row in &self.rows {
            out.push_str(
                &row.iter()
                    .map(|c| csv_escape(c))
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push('\n');
        }
        out
    }

    /// Renders the table as a markdown pipe table with a provenance footer.
    #[must_use]
    pub fn to_markdown(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "| {} |\n",
            self.columns
                .iter()
                .map(|c| md_escape(c))
                .collect::<Vec<_>>()
                .join(" | ")
        ));
        out.push_str(&format!(
            "|{}\n",
            " --- |".repeat(self.columns.len())
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "| {} |\n",
                row.iter()
                    .map(|c| md_escape(c))
                    .collect::<Vec<_>>()
                    .join(" | ")
            ));
        }
        for note in &self.notes {
            out.push_str(&format!("\n{note}\n"));
        }
        out.push_str(&format!("\nprovenance: {}\n", prov.summary_line()));
        out
    }
}

/// Wraps a typed payload in a `{ provenance, data }` JSON document.
///
/// # Errors
///
/// Serialization failure.
pub fn json_document<T: Serialize>(payload: &T, prov: &Provenance) -> Result<String> {
    #[derive(Serialize)]
    struct Document<'a, T> {
        provenance: &'a Provenance,
        data: &'a T,
    }
    let doc = Document {
        provenance: prov,
        data: payload,
    };
    let mut s = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::validation(format!("json rendering failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------------------
// Table builders
// ---------------------------------------------------------------------------

/// Adjustment output table: `raw, adjusted, rejected` per p-value.
#[must_use]
pub fn adjust_table(adj: &AdjustedPValues, alpha: f64) -> Table {
    let mut t = Table::new(&["raw", "adjusted", "rejected"]);
    for (raw, adjusted) in adj.raw.iter().zip(&adj.adjusted) {
        t.push_row(vec![
            fmt_num(*raw),
            fmt_num(*adjusted),
            (*adjusted < alpha).to_string(),
        ]);
    }
    t.push_note(format!(
        "method: {} alpha: {} family_size: {}",
        adj.method,
        fmt_num(alpha),
        adj.family_size
    ));
    t
}

/// Experiment-plan table: one row per sized metric plus the overall
/// requirement and the honest power statement as notes.
#[must_use]
pub fn plan_table(plan: &ExperimentPlan) -> Table {
    let mut t = Table::new(&["name", "role", "n_per_variant"]);
    for row in &plan.rows {
        t.push_row(vec![
            row.name.clone(),
            row.role.to_string(),
            row.n_per_variant.to_string(),
        ]);
    }
    t.push_note(format!("overall_n_per_variant: {}", plan.overall_n));
    t.push_note(format!("alpha_star: {}", fmt_num(plan.alpha_star)));
    t.push_note(plan.statement.clone());
    t
}

/// Group-sequential boundary table: one row per look, with optional
/// simulated crossing probabilities alongside.
///
/// Sentinel `+inf` bounds (looks at which no rejection is possible) render
/// literally as `inf`.
///
/// # Errors
///
/// `crossing` supplied with a length different from the look count.
pub fn gst_table(b: &GstBoundaries, crossing: Option<&[f64]>) -> Result<Table> {
    if let Some(c) = crossing {
        if c.len() != b.z_bounds.len() {
            return Err(Error::validation(format!(
                "gst table: {} crossing probabilities for {} looks",
                c.len(),
                b.z_bounds.len()
            )));
        }
    }
    let mut t = match crossing {
        Some(_) => Table::new(&[
            "look",
            "fraction",
            "z_bound",
            "cumulative_spend",
            "crossing_probability",
        ]),
        None => Table::new(&["look", "fraction", "z_bound", "cumulative_spend"]),
    };
    for (k, ((&frac, &bound), &spend)) in b
        .schedule
        .fractions
        .iter()
        .zip(&b.z_bounds)
        .zip(&b.cumulative_spend)
        .enumerate()
    {
        let mut row = vec![
            (k + 1).to_string(),
            fmt_num(frac),
            fmt_num(bound),
            fmt_num(spend),
        ];
        if let Some(c) = crossing {
            row.push(fmt_num(c[k]));
        }
        t.push_row(row);
    }
    t.push_note(format!(
        "metric: {} budget: {} sides: {}",
        b.schedule.metric_name,
        fmt_num(b.schedule.budget),
        b.schedule.sides
    ));
    Ok(t)
}

/// Power-study table: one row per (method, delta) cell.
#[must_use]
pub fn power_table(table: &PowerTable) -> Table {
    let mut t = Table::new(&[
        "method",
        "delta",
        "disjunctive_power",
        "power_se",
        "fwer",
        "fwer_se",
    ]);
    for cell in &table.cells {
        t.push_row(vec![
            cell.method.to_string(),
            fmt_num(cell.delta),
            fmt_num(cell.disjunctive_power),
            fmt_num(cell.power_se),
            fmt_num(cell.fwer),
            fmt_num(cell.fwer_se),
        ]);
    }
    t.push_note(format!("reps: {}", table.reps));
    for w in &table.warnings {
        t.push_note(format!("warning: {w}"));
    }
    t
}

/// Replay ship-rate table: one row per method with deltas vs. Bonferroni.
#[must_use]
pub fn replay_table(result: &ReplayResult) -> Table {
    let mut t = Table::new(&[
        "method",
        "ships",
        "ship_rate",
        "delta_pp_vs_bonferroni",
        "delta_rel_pct_vs_bonferroni",
    ]);
    for row in &result.rows {
        t.push_row(vec![
            row.method.to_string(),
            row.ships.to_string(),
            fmt_num(row.ship_rate),
            fmt_num(row.delta_pp_vs_bonferroni),
            fmt_opt(row.delta_rel_pct_vs_bonferroni),
        ]);
    }
    t.push_note(format!(
        "comparisons: {} family_mode: {} vr_on: {} alpha: {}",
        result.comparisons,
        result.family_mode,
        result.vr_on,
        fmt_num(result.alpha)
    ));
    t
}

/// Variance-reduction crossed-replay table (ship rates with/without VR and
/// the gap Δ vs. Bonferroni).
#[must_use]
pub fn vr_crossed_table(rows: &[VrCrossedRow]) -> Table {
    let mut t = Table::new(&["method", "ship_rate_vr", "ship_rate_no_vr", "gap_delta_pp"]);
    for row in rows {
        t.push_row(vec![
            row.method.to_string(),
            fmt_num(row.ship_rate_vr),
            fmt_num(row.ship_rate_no_vr),
            fmt_opt(row.gap_delta_pp),
        ]);
    }
    t
}

/// Truth-scored replay table (A/B ship rates split by truth).
#[must_use]
pub fn score_table(rows: &[ScoreRow]) -> Table {
    let mut t = Table::new(&[
        "method",
        "ab_comparisons",
        "ship_rate",
        "true_ship_rate",
        "false_ship_rate",
    ]);
    for row in rows {
        t.push_row(vec![
            row.method.to_string(),
            row.ab_comparisons.to_string(),
            fmt_num(row.ship_rate),
            fmt_num(row.true_ship_rate),
            fmt_num(row.false_ship_rate),
        ]);
    }
    t
}

// ---------------------------------------------------------------------------
// Decision report
// ---------------------------------------------------------------------------

/// Per-metric decision table (raw p, adjusted p, CI, gate outcome).
#[must_use]
pub fn decision_table(d: &Decision) -> Table {
    let mut t = Table::new(&[
        "name",
        "role",
        "direction",
        "estimate",
        "se",
        "p_raw",
        "p_adjusted",
        "in_family",
        "ci_lower",
        "ci_upper",
        "ci_level",
        "gate",
    ]);
    for row in &d.rows {
        t.push_row(vec![
            row.name.clone(),
            row.role.to_string(),
            row.direction.to_string(),
            fmt_num(row.estimate),
            fmt_num(row.se),
            fmt_num(row.p_raw),
            fmt_num(row.p_adjusted),
            row.in_family.to_string(),
            fmt_num(row.ci.lower),
            fmt_num(row.ci.upper),
            fmt_num(row.ci.level),
            row.gate.to_string(),
        ]);
    }
    t
}

/// Renders the full decision report as markdown: verdict block, reasons,
/// per-metric table, provenance.
#[must_use]
pub fn decision_markdown(d: &Decision, prov: &Provenance) -> String {
    let mut out = String::new();
    out.push_str("# Decision report\n\n");
    out.push_str(&format!(
        "**Verdict: {}**\n\n",
        if d.ship { "SHIP" } else { "NO SHIP" }
    ));
    if !d.driving_success.is_empty() {
        out.push_str(&format!(
            "- driving success metrics: {}\n",
            d.driving_success.join(", ")
        ));
    }
    if !d.failed_guardrails.is_empty() {
        out.push_str(&format!(
            "- failed guardrails: {}\n",
            d.failed_guardrails.join(", ")
        ));
    }
    if !d.blocking_quality.is_empty() {
        out.push_str(&format!(
            "- blocking quality checks: {}\n",
            d.blocking_quality.join(", ")
        ));
    }
    out.push_str(&format!(
        "- alpha: {} method: {} family_mode: {} family_size: {}\n",
        fmt_num(d.alpha),
        d.method,
        d.family_mode,
        d.family_size
    ));
    if let Some(p) = d.srm_pvalue {
        out.push_str(&format!("- srm_pvalue: {}\n", fmt_num(p)));
    }
    out.push('\n');
    out.push_str(&decision_table(d).to_markdown(prov));
    out
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
