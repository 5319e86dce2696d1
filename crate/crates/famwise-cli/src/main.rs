//! `famwise` — command-line surface for the multiple-testing workflow.
//!
//! Thin wrappers over the library modules: each subcommand parses its
//! inputs, calls one library entry point, and renders the result through
//! the provenance-stamped report layer.
//!
//! ## Commands
//!
//! - `adjust`: p-values in (file or stdin), adjusted-p table out.
//! - `decide`: experiment-spec document in, ship/no-ship report out.
//! - `plan`: sizing flags in, per-metric sample-size table out.
//! - `gst`: look schedule in (flags or JSON), boundary table out.
//! - `simulate`: power-study config JSON in, power/FWER table out.
//! - `vr`: paired-metric DGP parameters in (flags or JSON),
//!   closed-form vs. simulated correlation table out.
//! - `corpus generate`: corpus config in, line-delimited JSON records out.
//! - `replay`: corpus records in, ship-rate comparison table out.
//!
//! ## Conventions
//!
//! - Every file argument accepts `-` for stdin; `--out` redirects stdout
//!   to a file; `--format {csv, md, json}` selects the rendering (each
//!   command has a sensible default).
//! - Exit codes: 0 success (for `decide`: ship), 1 no-ship verdict,
//!   2 validation failure (bad flags, malformed input, schema violation),
//!   3 numerical failure on well-formed input.
//! - Seeds are explicit. `--seed` overrides the config seed for
//!   `simulate` and `corpus generate` and is required for `vr --n`;
//!   no environment variable is ever consulted. Whatever seed a command
//!   consumed (or was handed) is echoed in the provenance block, so a
//!   recorded invocation can be replayed byte-for-byte.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use famwise::adjust::{adjust, AdjustMethod};
use famwise::corpus::{
    generate_corpus, records_from_str, records_to_string, replay, score_corpus, vr_crossed_replay,
    CorpusConfig,
};
use famwise::decision::{
    ship_decision_with_srm, DecisionConfig, FamilyMode, MetricResult, SrmSpec,
};
use famwise::num::RngStream;
use famwise::planning::{plan_experiment, PlanInputs};
use famwise::report::{
    adjust_table, decision_markdown, decision_table, fmt_num, fnv1a_64, gst_table, json_document,
    plan_table, power_table, replay_table, score_table, vr_crossed_table, OutputFormat,
    Provenance, Table,
};
use famwise::sequential::{
    bonferroni_over_time, crossing_probabilities, gst_boundaries, GstBoundaries, LookSchedule,
    Sides, SpendingFunction,
};
use famwise::sim::{run_power_study, SimConfig};
use famwise::vr::{decorrelation_gap, simulate_dgp, unadjusted_corr, VrDgpParams};
use famwise::{Error, Result};

// ---------------------------------------------------------------------------
// Command-line definition
// ---------------------------------------------------------------------------

/// Multiple-testing workflow for online experiments: p-value adjustment,
/// ship/no-ship decisions, simultaneous intervals, sample-size planning,
/// group-sequential boundaries, and Monte Carlo studies.
#[derive(Debug, Parser)]
#[command(name = "famwise", version, propagate_version = true)]
struct Cli {
    /// Seed override; consumed by `simulate`, `vr --n`, and
    /// `corpus generate`, echoed into provenance everywhere.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format: csv, md, or json (per-command default).
    #[arg(long, global = true, value_name = "FORMAT", value_parser = parse_format)]
    format: Option<OutputFormat>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Adjust a list of p-values for multiple testing.
    Adjust(AdjustArgs),
    /// Evaluate the ship/no-ship decision for an experiment-spec document.
    Decide(DecideArgs),
    /// Size an experiment across its success and guardrail metrics.
    Plan(PlanArgs),
    /// Compute group-sequential boundaries for a look schedule.
    Gst(GstArgs),
    /// Run a Monte Carlo power and error-rate study.
    Simulate(SimulateArgs),
    /// Quantify variance-reduction decorrelation, closed form vs. simulation.
    Vr(VrArgs),
    /// Synthetic decision-corpus commands.
    Corpus(CorpusArgs),
    /// Replay ship decisions over a corpus under different corrections.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct AdjustArgs {
    /// Correction method: none, bonferroni, holm, hochberg, hommel, bh, by.
    #[arg(long, value_parser = parse_method)]
    method: AdjustMethod,

    /// Family-wise significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// File of whitespace- or comma-separated p-values; stdin when omitted.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DecideArgs {
    /// Experiment-spec document (JSON; `-` for stdin).
    #[arg(long, value_name = "PATH")]
    spec: PathBuf,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Two-sided FWER budget across the success family.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Total type-II budget (1 − target power).
    #[arg(long, default_value_t = 0.2)]
    beta: f64,

    /// Minimum detectable effect for success metrics, metric units.
    #[arg(long)]
    delta: f64,

    /// Per-observation standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    /// Number of success metrics sharing the alpha budget.
    #[arg(long, default_value_t = 1)]
    success_count: usize,

    /// Non-inferiority margins, comma separated, one per guardrail.
    #[arg(long, value_delimiter = ',', value_name = "MARGINS")]
    guardrail_margins: Vec<f64>,
}

#[derive(Debug, Args)]
struct GstArgs {
    /// Look schedule as JSON (`-` for stdin); replaces the schedule flags.
    #[arg(long, value_name = "PATH",
          conflicts_with_all = ["metric", "fractions", "budget", "sides"])]
    schedule: Option<PathBuf>,

    /// Metric name carried in the schedule.
    #[arg(long, default_value = "metric")]
    metric: String,

    /// Information fractions of the looks, comma separated, in (0,1].
    #[arg(long, value_delimiter = ',', value_name = "FRACTIONS")]
    fractions: Vec<f64>,

    /// Alpha budget spent across the looks.
    #[arg(long, default_value_t = 0.05)]
    budget: f64,

    /// Sidedness of the test: one or two.
    #[arg(long, default_value = "two", value_parser = parse_sides)]
    sides: Sides,

    /// Alpha-spending function: obf_type, pocock_type, or linear.
    #[arg(long, default_value = "obf_type", value_parser = parse_spending)]
    function: SpendingFunction,

    /// Emit the conservative Bonferroni-over-time bounds instead of the
    /// exact recursion.
    #[arg(long)]
    conservative: bool,

    /// Append each look's exact crossing probability under the null.
    #[arg(long)]
    crossing: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Power-study config (JSON; `-` for stdin).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct VrArgs {
    /// DGP parameters as JSON (`-` for stdin); replaces the parameter flags.
    #[arg(long, value_name = "PATH",
          conflicts_with_all = ["gamma", "gamma_b", "sigma0_sq", "sigma_eps_sq",
                                "rho0", "rho_eps", "tau_a", "tau_b", "mu_a", "mu_b"])]
    config: Option<PathBuf>,

    /// Regression coefficient on the pre-period value.
    #[arg(long)]
    gamma: Option<f64>,

    /// Separate coefficient for metric B (defaults to --gamma).
    #[arg(long)]
    gamma_b: Option<f64>,

    /// Pre-period variance.
    #[arg(long)]
    sigma0_sq: Option<f64>,

    /// Residual variance.
    #[arg(long)]
    sigma_eps_sq: Option<f64>,

    /// Pre-period correlation.
    #[arg(long)]
    rho0: Option<f64>,

    /// Residual correlation.
    #[arg(long)]
    rho_eps: Option<f64>,

    /// Treatment effect on metric A.
    #[arg(long, default_value_t = 0.0)]
    tau_a: f64,

    /// Treatment effect on metric B.
    #[arg(long, default_value_t = 0.0)]
    tau_b: f64,

    /// Intercept of metric A.
    #[arg(long, default_value_t = 0.0)]
    mu_a: f64,

    /// Intercept of metric B.
    #[arg(long, default_value_t = 0.0)]
    mu_b: f64,

    /// Also simulate this many paired observations (requires --seed).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[command(subcommand)]
    command: CorpusCommand,
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Draw a synthetic corpus and emit line-delimited JSON records.
    Generate(CorpusGenerateArgs),
}

#[derive(Debug, Args)]
struct CorpusGenerateArgs {
    /// Corpus config (JSON; `-` for stdin); built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Corpus of line-delimited JSON records (`-` for stdin).
    #[arg(long, value_name = "PATH")]
    corpus: PathBuf,

    /// Correction methods to replay, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "holm",
          value_parser = parse_method)]
    methods: Vec<AdjustMethod>,

    /// Family composition mode: success_only or naive.
    #[arg(long, default_value = "success_only", value_parser = parse_family)]
    family: FamilyMode,

    /// Decision significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Replay on the unadjusted z-scores instead of the
    /// variance-reduced ones.
    #[arg(long, conflicts_with = "crossed")]
    no_vr: bool,

    /// Cross variance reduction on/off per method instead of the
    /// standard ship-rate table.
    #[arg(long, conflicts_with = "score")]
    crossed: bool,

    /// Score ship decisions against the generative truth labels.
    #[arg(long)]
    score: bool,
}

// ---------------------------------------------------------------------------
// Experiment-spec document
// ---------------------------------------------------------------------------

/// The schema revision this build reads.
const SCHEMA_VERSION: &str = "1";

/// Sample-ratio-mismatch block of the spec document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SrmDocument {
    /// Observed per-arm assignment counts.
    counts: Vec<u64>,
    /// Intended per-arm allocation ratios.
    ratios: Vec<f64>,
}

/// The JSON document `decide` consumes: one experiment's measured metrics
/// plus the decision configuration. Unknown fields are rejected so a typo
/// cannot silently change a launch decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentSpecDocument {
    /// Document schema revision; must equal [`SCHEMA_VERSION`].
    schema_version: String,
    /// Family-wise significance level.
    alpha: f64,
    /// Correction method name (as accepted by `adjust --method`).
    method: String,
    /// Family composition mode: success_only or naive.
    family_mode: String,
    /// Measured metric outcomes.
    metrics: Vec<MetricResult>,
    /// Optional assignment counts for the sample-ratio check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    srm: Option<SrmDocument>,
}

impl ExperimentSpecDocument {
    /// Validates the envelope and converts to library inputs.
    fn to_decision_inputs(&self) -> Result<(Vec<MetricResult>, Option<SrmSpec>, DecisionConfig)> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported schema_version {:?}; this build reads version {:?}",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        let method: AdjustMethod = self.method.parse()?;
        let family_mode: FamilyMode = self.family_mode.parse()?;
        let cfg = DecisionConfig {
            alpha: self.alpha,
            method,
            family_mode,
            // Matches the library's serde default for the SRM gate.
            srm_alpha: 0.001,
        };
        let srm = self.srm.as_ref().map(|s| SrmSpec {
            observed_counts: s.counts.clone(),
            expected_ratios: s.ratios.clone(),
        });
        Ok((self.metrics.clone(), srm, cfg))
    }
}

// ---------------------------------------------------------------------------
// Entry point and dispatch
// ---------------------------------------------------------------------------

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("famwise: {e}");
            let code = match e {
                Error::Validation(_) => 2,
                Error::Computation(_) => 3,
            };
            std::process::exit(code);
        }
    }
}

/// Dispatches to the subcommand handler; the returned code is the
/// process exit status.
fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Adjust(args) => cmd_adjust(cli, args),
        Command::Decide(args) => cmd_decide(cli, args),
        Command::Plan(args) => cmd_plan(cli, args),
        Command::Gst(args) => cmd_gst(cli, args),
        Command::Simulate(args) => cmd_simulate(cli, args),
        Command::Vr(args) => cmd_vr(cli, args),
        Command::Corpus(args) => match &args.command {
            CorpusCommand::Generate(gen) => cmd_corpus_generate(cli, gen),
        },
        Command::Replay(args) => cmd_replay(cli, args),
    }
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

/// Invocation fingerprint for `adjust`: the inputs are part of the hash so
/// two runs share a config_hash exactly when they adjusted the same list.
#[derive(Serialize)]
struct AdjustInvocation<'a> {
    method: String,
    alpha: f64,
    pvalues: &'a [f64],
}

/// Machine-readable `adjust` payload.
#[derive(Serialize)]
struct AdjustReport<'a> {
    method: String,
    alpha: f64,
    family_size: usize,
    raw: &'a [f64],
    adjusted: &'a [f64],
    rejected: Vec<bool>,
}

fn cmd_adjust(cli: &Cli, args: &AdjustArgs) -> Result<i32> {
    let (text, origin) = match &args.input {
        Some(path) => (read_path(path)?, origin_of(path)),
        None => (read_stdin()?, "<stdin>".to_string()),
    };
    let pvalues = parse_pvalues(&text, &origin)?;
    let adj = adjust(&pvalues, args.method)?;

    let prov = Provenance::new(
        cli.seed,
        &AdjustInvocation {
            method: args.method.to_string(),
            alpha: args.alpha,
            pvalues: &pvalues,
        },
    )?;
    let rejected: Vec<bool> = {
        let set = adj.reject_set(args.alpha);
        (0..adj.adjusted.len()).map(|i| set.contains(&i)).collect()
    };
    let text = match cli.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => adjust_table(&adj, args.alpha).to_csv(&prov),
        OutputFormat::Md => adjust_table(&adj, args.alpha).to_markdown(&prov),
        OutputFormat::Json => json_document(
            &AdjustReport {
                method: args.method.to_string(),
                alpha: args.alpha,
                family_size: adj.family_size,
                raw: &adj.raw,
                adjusted: &adj.adjusted,
                rejected,
            },
            &prov,
        )?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_decide(cli: &Cli, args: &DecideArgs) -> Result<i32> {
    let text = read_path(&args.spec)?;
    let origin = origin_of(&args.spec);
    let doc: ExperimentSpecDocument = serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("{origin}: schema violation: {e}")))?;
    let (metrics, srm, cfg) = doc.to_decision_inputs()?;
    let decision = ship_decision_with_srm(&metrics, srm.as_ref(), &cfg)?;

    let prov = Provenance::new(cli.seed, &doc)?;
    let text = match cli.format.unwrap_or(OutputFormat::Md) {
        OutputFormat::Csv => decision_table(&decision).to_csv(&prov),
        OutputFormat::Md => decision_markdown(&decision, &prov),
        OutputFormat::Json => json_document(&decision, &prov)?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(if decision.ship { 0 } else { 1 })
}

fn cmd_plan(cli: &Cli, args: &PlanArgs) -> Result<i32> {
    let inputs = PlanInputs {
        alpha: args.alpha,
        beta: args.beta,
        delta: args.delta,
        sigma: args.sigma,
        success_count: args.success_count,
        guardrail_margins: args.guardrail_margins.clone(),
    };
    let plan = plan_experiment(&inputs)?;

    let prov = Provenance::new(cli.seed, &inputs)?;
    let text = match cli.format.unwrap_or(OutputFormat::Md) {
        OutputFormat::Csv => plan_table(&plan).to_csv(&prov),
        OutputFormat::Md => plan_table(&plan).to_markdown(&prov),
        OutputFormat::Json => json_document(&plan, &prov)?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

/// Invocation fingerprint for `gst`.
#[derive(Serialize)]
struct GstInvocation<'a> {
    schedule: &'a LookSchedule,
    function: String,
    conservative: bool,
    crossing: bool,
}

/// Machine-readable `gst` payload.
#[derive(Serialize)]
struct GstReport<'a> {
    boundaries: &'a GstBoundaries,
    function: String,
    conservative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    crossing_probabilities: Option<&'a [f64]>,
}

fn cmd_gst(cli: &Cli, args: &GstArgs) -> Result<i32> {
    let schedule = match &args.schedule {
        Some(path) => serde_json::from_str::<LookSchedule>(&read_path(path)?)
            .map_err(|e| Error::validation(format!("{}: schema violation: {e}", origin_of(path))))?,
        None => {
            if args.fractions.is_empty() {
                return Err(Error::validation(
                    "gst: provide --fractions or a --schedule document",
                ));
            }
            LookSchedule {
                metric_name: args.metric.clone(),
                fractions: args.fractions.clone(),
                budget: args.budget,
                sides: args.sides,
            }
        }
    };
    let boundaries = if args.conservative {
        bonferroni_over_time(&schedule, args.function)?
    } else {
        gst_boundaries(&schedule, args.function)?
    };
    let crossing = if args.crossing {
        Some(crossing_probabilities(&schedule, &boundaries.z_bounds)?)
    } else {
        None
    };

    let prov = Provenance::new(
        cli.seed,
        &GstInvocation {
            schedule: &schedule,
            function: args.function.to_string(),
            conservative: args.conservative,
            crossing: args.crossing,
        },
    )?;
    let mut table = gst_table(&boundaries, crossing.as_deref())?;
    table.push_note(format!(
        "function: {} conservative: {}",
        args.function, args.conservative
    ));
    let text = match cli.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => table.to_csv(&prov),
        OutputFormat::Md => table.to_markdown(&prov),
        OutputFormat::Json => json_document(
            &GstReport {
                boundaries: &boundaries,
                function: args.function.to_string(),
                conservative: args.conservative,
                crossing_probabilities: crossing.as_deref(),
            },
            &prov,
        )?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<i32> {
    let text = read_path(&args.config)?;
    let origin = origin_of(&args.config);
    let mut cfg: SimConfig = serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("{origin}: schema violation: {e}")))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let result = run_power_study(&cfg)?;

    let prov = Provenance::new(Some(cfg.seed), &cfg)?;
    let text = match cli.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => power_table(&result).to_csv(&prov),
        OutputFormat::Md => power_table(&result).to_markdown(&prov),
        OutputFormat::Json => json_document(&result, &prov)?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

/// Invocation fingerprint for `vr`.
#[derive(Serialize)]
struct VrInvocation<'a> {
    params: &'a VrDgpParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

/// Machine-readable `vr` payload: closed forms plus optional simulation
/// estimates.
#[derive(Serialize)]
struct VrReport<'a> {
    params: &'a VrDgpParams,
    unadjusted_corr: f64,
    residual_corr: f64,
    decorrelation_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated_unadjusted_corr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulated_residual_corr: Option<f64>,
}

fn cmd_vr(cli: &Cli, args: &VrArgs) -> Result<i32> {
    let params = match &args.config {
        Some(path) => serde_json::from_str::<VrDgpParams>(&read_path(path)?)
            .map_err(|e| Error::validation(format!("{}: schema violation: {e}", origin_of(path))))?,
        None => {
            let required = [
                ("--gamma", args.gamma),
                ("--sigma0-sq", args.sigma0_sq),
                ("--sigma-eps-sq", args.sigma_eps_sq),
                ("--rho0", args.rho0),
                ("--rho-eps", args.rho_eps),
            ];
            if let Some((flag, _)) = required.iter().find(|(_, v)| v.is_none()) {
                return Err(Error::validation(format!(
                    "vr: missing {flag} (or pass a --config document)"
                )));
            }
            VrDgpParams {
                gamma: args.gamma.unwrap(),
                gamma_b: args.gamma_b,
                sigma0_sq: args.sigma0_sq.unwrap(),
                sigma_eps_sq: args.sigma_eps_sq.unwrap(),
                rho0: args.rho0.unwrap(),
                rho_eps: args.rho_eps.unwrap(),
                tau_a: args.tau_a,
                tau_b: args.tau_b,
                mu_a: args.mu_a,
                mu_b: args.mu_b,
            }
        }
    };
    let raw_corr = unadjusted_corr(&params)?;
    let gap = decorrelation_gap(&params)?;
    let estimates = match args.n {
        Some(n) => {
            let seed = cli.seed.ok_or_else(|| {
                Error::validation("vr: --n simulation requires an explicit --seed")
            })?;
            Some(simulate_dgp(&params, n, RngStream::new(seed, 0))?)
        }
        None => None,
    };

    let prov = Provenance::new(
        cli.seed,
        &VrInvocation {
            params: &params,
            n: args.n,
        },
    )?;
    let mut table = Table::new(&["quantity", "closed_form", "simulated"]);
    let sim_cell = |v: Option<f64>| v.map_or(String::new(), fmt_num);
    table.push_row(vec![
        "unadjusted_corr".to_string(),
        fmt_num(raw_corr),
        sim_cell(estimates.as_ref().map(|e| e.raw_corr_estimate)),
    ]);
    table.push_row(vec![
        "residual_corr".to_string(),
        fmt_num(params.rho_eps),
        sim_cell(estimates.as_ref().map(|e| e.residual_corr_estimate)),
    ]);
    table.push_row(vec![
        "decorrelation_gap".to_string(),
        fmt_num(gap),
        sim_cell(
            estimates
                .as_ref()
                .map(|e| e.raw_corr_estimate - e.residual_corr_estimate),
        ),
    ]);
    if let Some(n) = args.n {
        table.push_note(format!("simulated with n: {n}"));
    }
    let text = match cli.format.unwrap_or(OutputFormat::Md) {
        OutputFormat::Csv => table.to_csv(&prov),
        OutputFormat::Md => table.to_markdown(&prov),
        OutputFormat::Json => json_document(
            &VrReport {
                params: &params,
                unadjusted_corr: raw_corr,
                residual_corr: params.rho_eps,
                decorrelation_gap: gap,
                n: args.n,
                simulated_unadjusted_corr: estimates.as_ref().map(|e| e.raw_corr_estimate),
                simulated_residual_corr: estimates.as_ref().map(|e| e.residual_corr_estimate),
            },
            &prov,
        )?,
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_corpus_generate(cli: &Cli, args: &CorpusGenerateArgs) -> Result<i32> {
    if let Some(format) = cli.format {
        if format != OutputFormat::Json {
            return Err(Error::validation(format!(
                "corpus generate emits line-delimited JSON records; \
                 --format {format} does not apply"
            )));
        }
    }
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str::<CorpusConfig>(&read_path(path)?)
            .map_err(|e| Error::validation(format!("{}: schema violation: {e}", origin_of(path))))?,
        None => CorpusConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let records = generate_corpus(&cfg)?;
    let text = records_to_string(&records)?;

    // Records go to stdout (or --out) so the stream stays pipeable into
    // `replay --corpus -`; the provenance line goes to stderr.
    let prov = Provenance::new(Some(cfg.seed), &cfg)?;
    eprintln!(
        "provenance: tool={} version={} seed={} config_hash={} records={}",
        prov.tool,
        prov.version,
        cfg.seed,
        prov.config_hash,
        records.len()
    );
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

/// Invocation fingerprint for `replay`: the corpus participates through a
/// content hash so the provenance pins both flags and data.
#[derive(Serialize)]
struct ReplayInvocation {
    corpus_hash: String,
    methods: Vec<String>,
    family_mode: String,
    alpha: f64,
    vr_on: bool,
    crossed: bool,
    score: bool,
}

fn cmd_replay(cli: &Cli, args: &ReplayArgs) -> Result<i32> {
    let text = read_path(&args.corpus)?;
    let origin = origin_of(&args.corpus);
    let corpus = records_from_str(&text, &origin)?;

    let prov = Provenance::new(
        cli.seed,
        &ReplayInvocation {
            corpus_hash: format!("{:016x}", fnv1a_64(text.as_bytes())),
            methods: args.methods.iter().map(|m| m.to_string()).collect(),
            family_mode: args.family.to_string(),
            alpha: args.alpha,
            vr_on: !args.no_vr,
            crossed: args.crossed,
            score: args.score,
        },
    )?;

    let format = cli.format.unwrap_or(OutputFormat::Md);
    let text = if args.crossed {
        let rows = vr_crossed_replay(&corpus, &args.methods, args.alpha)?;
        match format {
            OutputFormat::Csv => vr_crossed_table(&rows).to_csv(&prov),
            OutputFormat::Md => vr_crossed_table(&rows).to_markdown(&prov),
            OutputFormat::Json => json_document(&rows, &prov)?,
        }
    } else {
        let result = replay(&corpus, &args.methods, args.family, args.alpha, !args.no_vr)?;
        if args.score {
            let rows = score_corpus(&corpus, &result)?;
            match format {
                OutputFormat::Csv => score_table(&rows).to_csv(&prov),
                OutputFormat::Md => score_table(&rows).to_markdown(&prov),
                OutputFormat::Json => json_document(&rows, &prov)?,
            }
        } else {
            match format {
                OutputFormat::Csv => replay_table(&result).to_csv(&prov),
                OutputFormat::Md => replay_table(&result).to_markdown(&prov),
                OutputFormat::Json => json_document(&result, &prov)?,
            }
        }
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Input/output helpers
// ---------------------------------------------------------------------------

/// Reads a file argument; `-` means stdin.
fn read_path(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        return read_stdin();
    }
    std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))
}

/// Reads stdin to a string.
fn read_stdin() -> Result<String> {
    use std::io::Read;
    let mut buf = String::new();
    std::io::stdin()
        .read_to_string(&mut buf)
        .map_err(|e| Error::validation(format!("cannot read stdin: {e}")))?;
    Ok(buf)
}

/// Name used for a path in error messages (`<stdin>` for `-`).
fn origin_of(path: &Path) -> String {
    if path == Path::new("-") {
        "<stdin>".to_string()
    } else {
        path.display().to_string()
    }
}

/// Writes the rendered output to `--out` or stdout.
fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| Error::validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Parses whitespace- or comma-separated p-values, reporting the input
/// line of the first malformed or out-of-range token.
fn parse_pvalues(text: &str, origin: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        for tok in line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok.parse().map_err(|_| {
                Error::validation(format!(
                    "{origin}:{}: invalid p-value {tok:?}",
                    idx + 1
                ))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!(
                    "{origin}:{}: p-value out of [0, 1]: {tok}",
                    idx + 1
                )));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::validation("no p-values"));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Flag parsers (FromStr wrappers with clap-compatible error types)
// ---------------------------------------------------------------------------

fn parse_format(s: &str) -> Result<OutputFormat> {
    s.parse()
}

fn parse_method(s: &str) -> Result<AdjustMethod> {
    s.parse()
}

fn parse_family(s: &str) -> Result<FamilyMode> {
    s.parse()
}

fn parse_sides(s: &str) -> Result<Sides> {
    s.parse()
}

fn parse_spending(s: &str) -> Result<SpendingFunction> {
    s.parse()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
