//! `attrib`: compute attributions, choose step counts, audit axioms and
//! render heatmaps from the command line.
//!
//! Exit codes: 0 success (all audits pass), 1 some audit failed,
//! 2 invalid configuration or input, 3 numeric failure, 4 step budget
//! exhausted.

mod inputs;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use attrib_core::attribution::{
    adaptive_search, attribute, AdaptiveConfig, DiscreteVariant, MethodSpec, ModifiedRule, PathSpec,
    RiemannConfig, RiemannRule, ShapleyMode,
};
use attrib_core::axioms::{run_audit, AuditPlan, Axiom, SamplingConfig};
use attrib_core::fixtures::{build_fixture, FixtureId};
use attrib_core::io::{load_model, save_model, to_fixed_json};
use attrib_core::render::{read_pgm, render_heatmap, RenderShape};
use attrib_core::{Error, MethodSpec64, Model64, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use inputs::{parse_baseline, parse_input, parse_path};
use output::{emit, read_attributions, result_csv, sha256_hex, ResultDocument};

const EXIT_AUDIT_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "attrib", version, about = "Feature attribution and axiom audits for small graph models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attribute a model's output at one input to its features.
    Attribute(AttributeArgs),
    /// Choose an integrated-gradients step count by doubling until the
    /// completeness gap is small enough.
    Steps(StepsArgs),
    /// Audit a method against the attribution axioms.
    Audit(AuditArgs),
    /// Render attributions as a green/red heatmap (binary PPM).
    Render(RenderArgs),
    /// Write every built-in fixture as a model document.
    Fixtures(FixturesArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Gradients,
    GradTimesInput,
    Ig,
    IgAdaptive,
    Path,
    Shapley,
    Deeplift,
    Lrp,
    Deconvnet,
    Guided,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, value_enum)]
    method: MethodName,
    /// Riemann steps for ig and path.
    #[arg(long, default_value_t = 300)]
    steps: usize,
    /// Riemann rule: left, right, midpoint or trapezoid.
    #[arg(long, default_value = "right")]
    rule: String,
    /// Path for `--method path`: `straight`, `axis:<order>`, waypoints
    /// separated by `;`, or a file with one waypoint per line.
    #[arg(long)]
    path: Option<String>,
    /// Seed for sampled Shapley values and audit sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of sampled orderings for Shapley; exact when omitted.
    #[arg(long)]
    samples: Option<usize>,
    /// Completeness tolerance (fraction of |F(x) - F(x')|) for ig-adaptive.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// Smallest step count tried by ig-adaptive.
    #[arg(long, default_value_t = 20)]
    min: usize,
    /// Largest step count tried by ig-adaptive.
    #[arg(long, default_value_t = 300)]
    max: usize,
}

impl MethodArgs {
    fn spec(&self) -> Result<MethodSpec64> {
        let rule: RiemannRule = self.rule.parse()?;
        let riemann = || RiemannConfig::new(self.steps, rule);
        if self.path.is_some() && self.method != MethodName::Path {
            return Err(Error::InvalidParameter("--path only applies to --method path".into()));
        }
        Ok(match self.method {
            MethodName::Gradients => MethodSpec::Gradients,
            MethodName::GradTimesInput => MethodSpec::GradTimesInput,
            MethodName::Ig => MethodSpec::IntegratedGradients { config: riemann()? },
            MethodName::IgAdaptive => MethodSpec::AdaptiveIntegratedGradients {
                config: AdaptiveConfig {
                    tolerance_fraction: self.tol,
                    m_min: self.min,
                    m_max: self.max,
                    rule,
                },
            },
            MethodName::Path => MethodSpec::PathMethod {
                path: match &self.path {
                    Some(p) => parse_path(p)?,
                    None => PathSpec::Straightline,
                },
                config: riemann()?,
            },
            MethodName::Shapley => MethodSpec::ShapleyShubik {
                mode: match self.samples {
                    Some(num_orderings) => ShapleyMode::Sampled { num_orderings, seed: self.seed },
                    None => ShapleyMode::Exact,
                },
            },
            MethodName::Deeplift => MethodSpec::DiscreteGradient { variant: DiscreteVariant::DeepliftRescale },
            MethodName::Lrp => MethodSpec::DiscreteGradient { variant: DiscreteVariant::LrpZeroBaseline },
            MethodName::Deconvnet => MethodSpec::ModifiedBackprop { rule: ModifiedRule::Deconvnet },
            MethodName::Guided => MethodSpec::ModifiedBackprop { rule: ModifiedRule::Guided },
        })
    }
}

#[derive(Args)]
struct AttributeArgs {
    /// Model document, or `fixture:<id>` for a built-in fixture.
    #[arg(long)]
    model: String,
    /// Input: literal row such as `3,1`, a one-row CSV file, or a PGM image.
    #[arg(long)]
    input: String,
    /// Baseline: `zeros`, `constant:<v>`, a literal row, or a file.
    #[arg(long, default_value = "zeros")]
    baseline: String,
    #[command(flatten)]
    method: MethodArgs,
    /// Output file (stdout when omitted); a run record goes to `<out>.run.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall-clock time in the run record.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct StepsArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    input: String,
    #[arg(long, default_value = "zeros")]
    baseline: String,
    /// Target completeness gap as a fraction of |F(x) - F(x')|.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    min: usize,
    #[arg(long, default_value_t = 300)]
    max: usize,
    #[arg(long, default_value = "right")]
    rule: String,
    /// Write the report as JSON to this file (a text summary still goes to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct AuditArgs {
    /// Model to audit.
    #[arg(long, required_unless_present = "pair", conflicts_with = "pair")]
    model: Option<String>,
    /// Two functionally equivalent models `a,b`; `a` is audited and `b` is
    /// its implementation-invariance partner.
    #[arg(long)]
    pair: Option<String>,
    #[command(flatten)]
    method: MethodArgs,
    /// Comma-separated axioms (default: all).
    #[arg(long, value_delimiter = ',')]
    axioms: Vec<String>,
    /// Random trials for the sampled audits.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Input for single-point audits (default: all ones).
    #[arg(long)]
    input: Option<String>,
    #[arg(long, default_value = "zeros")]
    baseline: String,
    /// Declared symmetric pairs such as `0:1,2:3` (default: every pair the
    /// input and baseline treat alike, verified by swap sampling).
    #[arg(long)]
    symmetric: Option<String>,
    /// Feature the model ignores (default: a dummy feature is appended).
    #[arg(long)]
    dummy_index: Option<usize>,
    /// Tolerance override `axiom=value`; repeatable.
    #[arg(long = "tolerance")]
    tolerances: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Result file written by `attribute` (JSON or CSV).
    #[arg(long)]
    attrib: PathBuf,
    /// `HxW` or `HxWxC`; channels are summed per pixel.
    #[arg(long)]
    shape: String,
    /// Grayscale base image (binary PGM); mid-gray when omitted.
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FixturesArgs {
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Attribute(args) => cmd_attribute(&args),
        Command::Steps(args) => cmd_steps(&args),
        Command::Audit(args) => cmd_audit(&args),
        Command::Render(args) => cmd_render(&args),
        Command::Fixtures(args) => cmd_fixtures(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExhausted { .. } => EXIT_BUDGET,
        e if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_INVALID,
    }
}

/// Loads a model document (or `fixture:<id>`) and hashes its bytes.
fn load(spec: &str) -> Result<(Model64, String)> {
    if let Some(id) = spec.strip_prefix("fixture:") {
        let model = build_fixture(&id.parse::<FixtureId>()?)?;
        let doc = save_model(&model);
        return Ok((model, sha256_hex(doc.as_bytes())));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::InvalidParameter(format!("cannot read model {spec}: {e}")))?;
    let model = load_model(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{spec}: {msg}")),
        other => other,
    })?;
    Ok((model, sha256_hex(text.as_bytes())))
}

fn elapsed_ms(start: Instant, enabled: bool) -> Option<f64> {
    enabled.then(|| start.elapsed().as_secs_f64() * 1e3)
}

fn config_value<S: Serialize>(value: &S) -> serde_json::Value {
    serde_json::to_value(value).expect("configs serialize to JSON")
}

fn cmd_attribute(args: &AttributeArgs) -> Result<u8> {
    let start = Instant::now();
    let (model, hash) = load(&args.model)?;
    let input = parse_input(&args.input)?;
    let baseline = parse_baseline(&args.baseline)?;
    let method = args.method.spec()?;
    let result = attribute(&model, &input, &baseline, &method)?;
    let resolved = match &method {
        // these methods measure against zeros regardless of --baseline
        MethodSpec::DiscreteGradient { variant: DiscreteVariant::LrpZeroBaseline }
        | MethodSpec::ModifiedBackprop { .. } => vec![0.0; input.len()],
        _ => baseline.resolve(&input)?.into_values(),
    };
    let doc = ResultDocument {
        method: method.label(),
        input: input.values().to_vec(),
        baseline: resolved,
        result,
    };
    let bytes = match args.format {
        Format::Json => to_fixed_json(&doc),
        Format::Csv => result_csv(&doc),
    };
    emit(
        args.out.as_deref(),
        bytes.as_bytes(),
        config_value(&method),
        Some(hash),
        elapsed_ms(start, args.timing),
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct StepsReport {
    chosen_steps: usize,
    converged: bool,
    tolerance_fraction: f64,
    /// `(m, completeness gap)` per doubling.
    trajectory: Vec<(usize, f64)>,
    result: attrib_core::AttributionResult64,
}

fn cmd_steps(args: &StepsArgs) -> Result<u8> {
    let start = Instant::now();
    let (model, hash) = load(&args.model)?;
    let input = parse_input(&args.input)?;
    let baseline = parse_baseline(&args.baseline)?;
    let config = AdaptiveConfig {
        tolerance_fraction: args.tol,
        m_min: args.min,
        m_max: args.max,
        rule: args.rule.parse()?,
    };
    let outcome = adaptive_search(&model, &input, &baseline, &config)?;
    let report = StepsReport {
        chosen_steps: outcome.steps,
        converged: outcome.converged,
        tolerance_fraction: args.tol,
        trajectory: outcome.trajectory.clone(),
        result: outcome.result.clone(),
    };

    let mut text = String::new();
    for (m, gap) in &report.trajectory {
        text.push_str(&format!("m={m:<6} gap={gap:.6e}\n"));
    }
    let status = if report.converged { "converged" } else { "budget exhausted" };
    text.push_str(&format!("chosen m={} ({status})\n", report.chosen_steps));
    let values: Vec<String> = report.result.values.values().iter().map(|v| format!("{v:.12}")).collect();
    text.push_str(&format!("attributions: {}\n", values.join(", ")));
    print!("{text}");
    if let Some(out) = &args.out {
        emit(
            Some(out),
            to_fixed_json(&report).as_bytes(),
            config_value(&config),
            Some(hash),
            elapsed_ms(start, args.timing),
        )?;
    }
    if report.converged {
        Ok(0)
    } else {
        eprintln!(
            "error: no step count up to {} reaches a gap within {} of |F(x) - F(x')|",
            args.max, args.tol
        );
        Ok(EXIT_BUDGET)
    }
}

fn parse_symmetric(spec: &str) -> Result<Vec<(usize, usize)>> {
    spec.split(',')
        .map(|pair| {
            let bad = || Error::Parse(format!("'{pair}' is not a pair like 0:1"));
            let (i, j) = pair.split_once(':').ok_or_else(bad)?;
            Ok((i.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

fn cmd_audit(args: &AuditArgs) -> Result<u8> {
    let start = Instant::now();
    let method = args.method.spec()?;
    let mut plan = AuditPlan::new(method.clone());

    let (model, hash) = match (&args.model, &args.pair) {
        (Some(m), None) => load(m)?,
        (None, Some(pair)) => {
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| Error::InvalidParameter("--pair expects two files 'a,b'".into()))?;
            let (model, hash_a) = load(a.trim())?;
            let (partner, hash_b) = load(b.trim())?;
            plan.partner = Some(partner);
            (model, format!("{hash_a},{hash_b}"))
        }
        _ => return Err(Error::InvalidParameter("give exactly one of --model or --pair".into())),
    };
    if !args.axioms.is_empty() {
        plan.axioms = args.axioms.iter().map(|a| a.parse()).collect::<Result<_>>()?;
    }
    plan.input = args.input.as_deref().map(parse_input).transpose()?;
    plan.baseline = parse_baseline(&args.baseline)?;
    plan.sampling = SamplingConfig {
        trials: args.trials,
        seed: args.method.seed,
        ..SamplingConfig::default()
    };
    plan.symmetric_pairs = args.symmetric.as_deref().map(parse_symmetric).transpose()?;
    plan.dummy_index = args.dummy_index;
    for t in &args.tolerances {
        let (axiom, value) = t
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("tolerance '{t}' is not axiom=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("'{value}' is not a number")))?;
        plan.tolerances.push((axiom.parse::<Axiom>()?, value));
    }

    let batch = run_audit(&model, &plan)?;
    for r in &batch.reports {
        eprintln!("{:<26} {:?}", r.axiom.name(), r.verdict);
    }
    emit(
        args.out.as_deref(),
        to_fixed_json(&batch).as_bytes(),
        config_value(&method),
        Some(hash),
        elapsed_ms(start, args.timing),
    )?;
    Ok(if batch.any_failed() { EXIT_AUDIT_FAILED } else { 0 })
}

fn cmd_render(args: &RenderArgs) -> Result<u8> {
    let values = read_attributions(&args.attrib)?;
    let shape: RenderShape = args.shape.parse()?;
    let base = match &args.base {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
            Some(read_pgm(&bytes)?.0)
        }
        None => None,
    };
    let (image, info) = render_heatmap(&values, shape, base.as_ref())?;
    emit(
        Some(&args.out),
        &image.to_ppm(),
        config_value(&serde_json::json!({ "shape": shape, "render": info })),
        None,
        None,
    )?;
    Ok(0)
}

fn cmd_fixtures(args: &FixturesArgs) -> Result<u8> {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| {
        Error::InvalidParameter(format!("cannot create {}: {e}", args.out_dir.display()))
    })?;
    for id in FixtureId::catalog() {
        let model: Model64 = build_fixture(&id)?;
        let path = args.out_dir.join(format!("{}.model", id.file_stem()));
        output::write_atomic(&path, save_model(&model).as_bytes())?;
        println!("{}", path.display());
    }
    Ok(0)
}
