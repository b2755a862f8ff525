//! Command-line front end. Each subcommand parses its flags, calls one
//! library operation and prints the result as JSON.
//!
//! Exit codes: 0 success, 1 the analysis ran and produced a negative
//! finding, 2 usage or configuration error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_diffeomorphism, check_forward_invariance, classify, estimate_hessian_sup, min_hessian_norm, plan_stepsize,
    refine_critical, BoxDomain, ClassifyTolerances, InvarianceMode, InvarianceVerdict, RefineOptions,
};
use crate::dynamics::{GdMap, IterateOptions, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment_with, Execution, ExperimentConfig};
use crate::expr::VariableOrder;
use crate::expr::FUNCTIONS;
use crate::field::{Builtin, ScalarField};
use crate::linalg::Vector;
use crate::selfcheck::run_selfcheck;

/// Version of every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gdsaddle",
    version,
    about = "Gradient descent, strict saddles and step-size certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a point by gradient norm and Hessian spectrum.
    Classify(ClassifyArgs),
    /// Estimate L over a box and print step-size bounds.
    Stepsize(StepsizeArgs),
    /// Check whether the gradient-descent map keeps a box invariant.
    Invariance(InvarianceArgs),
    /// Sampled diffeomorphism diagnostics for the gradient-descent map.
    Diffeo(DiffeoArgs),
    /// Iterate the gradient-descent map from one initial point.
    Run(RunArgs),
    /// Monte Carlo basin experiment from a JSON config file.
    Experiment(ExperimentArgs),
    /// Finite-difference and eigensolver oracle suites.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// Builtin name (line-of-saddles, double-well, quadratic-bowl) or an expression.
    #[arg(long)]
    field: String,
    /// Comma-separated variable order for expressions; defaults to the
    /// sorted identifiers of the expression.
    #[arg(long)]
    vars: Option<String>,
    /// Dimension of quadratic-bowl.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Polish the point with damped Newton before classifying.
    #[arg(long)]
    refine: bool,
    #[arg(long, default_value_t = 1e-8)]
    crit: f64,
    #[arg(long, default_value_t = 1e-6)]
    eig_rel: f64,
}

#[derive(Debug, Args)]
struct StepsizeArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    domain: String,
    #[arg(long, default_value_t = 0.9)]
    margin: f64,
    #[arg(long, conflicts_with = "gamma_points")]
    gamma: Option<f64>,
    /// Semicolon-separated points; gamma is the smallest Hessian norm among them.
    #[arg(long, allow_hyphen_values = true)]
    gamma_points: Option<String>,
    /// Comma-separated grid counts per axis (default 41 per axis).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 3)]
    refine: usize,
}

#[derive(Debug, Args)]
struct InvarianceArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    domain: String,
    #[arg(long)]
    alpha: f64,
    /// Grid certification for separable fields instead of sampling.
    #[arg(long)]
    certify: bool,
    /// Nodes per axis (certify, default 20001) or total samples (default 100000).
    #[arg(long)]
    density: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DiffeoArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    domain: String,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Stop when an iterate leaves this box.
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Trajectory CSV; a JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report path; overrides `output.report` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 1000)]
    matrices: usize,
}

/// Experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputPaths,
    /// Worker threads; 1 runs serially. Defaults to the environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub trials_csv: Option<PathBuf>,
}

impl RunConfig {
    /// Reads a config and resolves output paths against its directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::config("config", e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", cfg.schema_version),
            ));
        }
        if cfg.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.output.report, &mut cfg.output.trials_csv]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn execution(&self) -> Execution {
        match self.threads {
            Some(1) => Execution::Serial,
            Some(t) => Execution::Parallel(Some(t)),
            None => Execution::from_env(),
        }
    }
}

/// Identifiers in `text` that are not function names, sorted and deduplicated.
pub fn infer_variables(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut names = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_digit() || c == b'.' {
            // skip a numeric literal, including an exponent part
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let name = &text[start..i];
            if !FUNCTIONS.contains(&name) {
                names.push(name.to_string());
            }
        } else {
            i += 1;
        }
    }
    names.sort();
    names.dedup();
    names
}

/// Builtin name or expression text to a field.
pub fn resolve_field(spec: &str, vars: Option<&str>, dim: Option<usize>) -> Result<ScalarField> {
    if let Some(b) = Builtin::from_name(spec.trim(), dim) {
        if vars.is_some() {
            return Err(Error::config("--vars", "not used with builtin fields"));
        }
        if dim.is_some() && !matches!(b, Builtin::QuadraticBowl { .. }) {
            return Err(Error::config("--dim", "only quadratic-bowl takes a dimension"));
        }
        return Ok(b.field());
    }
    if dim.is_some() {
        return Err(Error::config("--dim", "only quadratic-bowl takes a dimension"));
    }
    let names: Vec<String> = match vars {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        None => infer_variables(spec),
    };
    if names.is_empty() {
        return Err(Error::config("--vars", "expression has no variables; pass --vars"));
    }
    ScalarField::build(spec, VariableOrder::new(&names)?)
}

/// Comma-separated reals.
pub fn parse_point(text: &str) -> Result<Vector> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("point", format!("`{}` is not a number", s.trim())))
        })
        .collect::<Result<Vec<f64>>>()
        .map(Vector::new)
}

fn parse_domain(text: &str) -> Result<BoxDomain> {
    text.parse()
}

fn check_dim(field: &ScalarField, got: usize, what: &str) -> Result<()> {
    if got != field.dim() {
        return Err(Error::config(
            what,
            format!("has {got} components but the field has {} variables", field.dim()),
        ));
    }
    Ok(())
}

/// One-line hint printed after an error.
fn remedy(e: &Error) -> &'static str {
    match e {
        Error::Syntax { .. } => "check the expression: operators + - * / ^, functions sin cos exp, integer exponents",
        Error::UnknownVariable(_) => "declare every identifier with --vars x,y,... or in `variables`",
        Error::NonIntegerExponent(_) => "use a non-negative integer literal after ^",
        Error::DuplicateVariable(_) => "list each variable once",
        Error::DimensionMismatch { .. } => "make points, domains and grids match the number of variables",
        Error::InvalidDomain(_) => "write boxes as \"(a,b)x(c,d)\" with a < b",
        Error::InvalidBound(_) => "step sizes, L and gamma must be positive; margin must lie in (0,1)",
        Error::ModeUnsupported(_) => "drop --certify to use sampling, or use a separable field",
        Error::Config { .. } => "fix the named field and rerun",
        Error::NonFiniteValue | Error::NoConvergence { .. } => "shrink the domain or step size so values stay finite",
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    write_stdout(out, &text)
}

/// A closed pipe on stdout (`| head`) is not an error.
fn write_stdout(out: &mut dyn Write, text: &str) -> Result<()> {
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::config("stdout", e.to_string())),
        _ => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::config("output", format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::config("output", format!("cannot write {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::config("output", format!("cannot write {}: {e}", path.display()))
}

fn cmd_classify(a: &ClassifyArgs, out: &mut dyn Write) -> Result<i32> {
    let field = resolve_field(&a.field.field, a.field.vars.as_deref(), a.field.dim)?;
    let mut point = parse_point(&a.point)?;
    check_dim(&field, point.dim(), "--point")?;
    let tol = ClassifyTolerances {
        crit: a.crit,
        eig_rel: a.eig_rel,
    };
    if a.refine {
        let opts = RefineOptions {
            crit: a.crit,
            ..RefineOptions::default()
        };
        if let Some(p) = refine_critical(&field, &point, &opts) {
            point = p;
        }
    }
    emit(out, &classify(&field, &point, &tol)?)?;
    Ok(EXIT_OK)
}

fn cmd_stepsize(a: &StepsizeArgs, out: &mut dyn Write) -> Result<i32> {
    let field = resolve_field(&a.field.field, a.field.vars.as_deref(), a.field.dim)?;
    let domain = parse_domain(&a.domain)?;
    check_dim(&field, domain.dim(), "--domain")?;
    let grid: Vec<usize> = match &a.grid {
        Some(g) => g
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config("--grid", format!("`{}` is not a count", s.trim())))
            })
            .collect::<Result<_>>()?,
        None => vec![41; field.dim()],
    };
    let estimate = estimate_hessian_sup(&field, &domain, &grid, a.refine)?;
    let gamma = match (&a.gamma, &a.gamma_points) {
        (Some(g), _) => Some(*g),
        (None, Some(pts)) => {
            let points = pts.split(';').map(parse_point).collect::<Result<Vec<_>>>()?;
            for p in &points {
                check_dim(&field, p.dim(), "--gamma-points")?;
            }
            Some(min_hessian_norm(&field, &points)?)
        }
        (None, None) => None,
    };
    let plan = plan_stepsize(estimate.value, a.margin, gamma)?;
    emit(
        out,
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "estimate": estimate,
            "plan": plan,
        }),
    )?;
    Ok(EXIT_OK)
}

fn cmd_invariance(a: &InvarianceArgs, out: &mut dyn Write) -> Result<i32> {
    let field = resolve_field(&a.field.field, a.field.vars.as_deref(), a.field.dim)?;
    let domain = parse_domain(&a.domain)?;
    check_dim(&field, domain.dim(), "--domain")?;
    let map = GdMap::new(&field, a.alpha)?;
    let (mode, default_density) = if a.certify {
        (InvarianceMode::SeparableCertify, 20_001)
    } else {
        (InvarianceMode::Sample, 100_000)
    };
    let verdict = check_forward_invariance(&map, &domain, mode, a.density.unwrap_or(default_density), a.seed)?;
    emit(out, &verdict)?;
    Ok(match verdict {
        InvarianceVerdict::FalsifiedAt { .. } => EXIT_NEGATIVE,
        _ => EXIT_OK,
    })
}

fn cmd_diffeo(a: &DiffeoArgs, out: &mut dyn Write) -> Result<i32> {
    let field = resolve_field(&a.field.field, a.field.vars.as_deref(), a.field.dim)?;
    let domain = parse_domain(&a.domain)?;
    check_dim(&field, domain.dim(), "--domain")?;
    let report = check_diffeomorphism(&field, a.alpha, &domain, a.points, a.pairs, a.seed)?;
    emit(out, &report)?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_NEGATIVE })
}

/// Path of the JSON sidecar for a trajectory CSV.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let field = resolve_field(&a.field.field, a.field.vars.as_deref(), a.field.dim)?;
    let x0 = parse_point(&a.x0)?;
    check_dim(&field, x0.dim(), "--x0")?;
    let domain = a.domain.as_deref().map(parse_domain).transpose()?;
    if let Some(d) = &domain {
        check_dim(&field, d.dim(), "--domain")?;
    }
    let map = GdMap::new(&field, a.alpha)?;
    let mut opts = IterateOptions::with_budget(a.budget);
    opts.record = a.out.is_some();
    let traj = map.iterate(&x0, domain.as_ref(), &opts)?;
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        traj.write_csv(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
        let side = sidecar_path(path);
        let mut w = create(&side)?;
        serde_json::to_writer_pretty(&mut w, &traj.sidecar()).map_err(|e| Error::config("output", e.to_string()))?;
        w.flush().map_err(io_err(&side))?;
    }
    emit(out, &traj.sidecar())?;
    Ok(EXIT_OK)
}

fn cmd_experiment(a: &ExperimentArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::load(&a.config)?;
    let report = run_experiment_with(&cfg.experiment, cfg.execution())?;
    let report_path = a.out.clone().or(cfg.output.report.clone());
    match &report_path {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(report.to_json().as_bytes()).map_err(io_err(path))?;
            w.write_all(b"\n").map_err(io_err(path))?;
            w.flush().map_err(io_err(path))?;
        }
        None => write_stdout(out, &report.to_json())?,
    }
    if let Some(path) = &cfg.output.trials_csv {
        let mut w = create(path)?;
        report.write_trials_csv(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))?;
    }
    Ok(EXIT_OK)
}

fn cmd_selfcheck(a: &SelfcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let report = run_selfcheck(a.seed, a.points, a.matrices)?;
    emit(out, &report)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_NEGATIVE })
}

/// Runs the CLI with the given arguments (including the program name),
/// writing results to `out` and diagnostics to `err`.
pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => cmd_classify(a, out),
        Command::Stepsize(a) => cmd_stepsize(a, out),
        Command::Invariance(a) => cmd_invariance(a, out),
        Command::Diffeo(a) => cmd_diffeo(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
        Command::Selfcheck(a) => cmd_selfcheck(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let _ = writeln!(err, "hint: {}", remedy(&e));
            EXIT_USAGE
        }
    }
}

/// [`dispatch_to`] on the process's standard streams.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}
