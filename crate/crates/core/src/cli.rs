//! Command-line front end: `fit`, `simulate` and `influence`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure. Output files are pure functions of the inputs,
//! flags and seed; the manifest timestamp comes from `SOURCE_DATE_EPOCH`
//! (or the wall clock with `--timestamp`) and is `null` otherwise.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use serde::Serialize;

use crate::data::{read_csv, standardize, Dataset, ResponseColumn};
use crate::diagnostics::{influence, influence_ratio, InfluenceReport};
use crate::error::Error;
use crate::penalty::{PenaltyFamily, PenaltySpec};
use crate::selection::{cross_validate, CvConfig, CvPoint, CvScoring};
use crate::simulation::{run_scenario_sweep, scenario_preset, Method, ScenarioModel, ScenarioSpec, SweepAxis};
use crate::solver::{default_lambda_grid, fit, FitConfig, DEFAULT_ALPHA, DEFAULT_DELTA, DEFAULT_MAX_ITERS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "exlasso", version, about = "Sparse regression for features tied to extreme responses")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "EXLASSO_THREADS")]
    threads: Option<usize>,

    /// Record the current time in the run manifest (breaks byte-identical reruns)
    #[arg(long, global = true)]
    timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the penalized power-loss model to a CSV file
    Fit(FitArgs),
    /// Run a simulation sweep and write F-1/TPR/FPR tables
    Simulate(SimulateArgs),
    /// Influence of one contaminating point on a fitted model
    Influence(InfluenceArgs),
}

#[derive(Debug, Args, Serialize)]
struct ModelArgs {
    /// Input CSV; a header row is detected automatically
    #[arg(long)]
    data: PathBuf,
    /// Response column, by header name or 0-based index
    #[arg(long)]
    response: String,
    /// Even power of the loss
    #[arg(long, default_value_t = 4)]
    gamma: u32,
    /// Penalty family: l1, scad, mcp or none
    #[arg(long, default_value = "l1")]
    penalty: String,
    /// Penalty level on the standardized scale
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// Choose lambda by k-fold cross-validation over the default grid
    #[arg(long)]
    lambda_cv: bool,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Held-out score for cross-validation: gamma or squared
    #[arg(long, default_value = "gamma")]
    cv_scoring: String,
    #[arg(long, env = "EXLASSO_SEED", default_value_t = 0)]
    seed: u64,
    /// Output JSON file (stdout when absent)
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value = "linear")]
    model: String,
    /// Preset axis and values (1 tau, 2 events, 3 error rate, 4 p)
    #[arg(long)]
    scenario: Option<u8>,
    /// Explicit axis: tau, events, gamma_rate or p
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated axis values
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "exlasso4,exlasso6,lasso")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    #[arg(long, env = "EXLASSO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma_rate: Option<f64>,
    /// Output directory
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct InfluenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    model: ModelArgs,
    /// Contaminating point on the raw scale: `y0,x1,...,xp`
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Also evaluate the gamma = 2 influence at the same fit and report ratios
    #[arg(long)]
    compare_lasso: bool,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub command: String,
    pub config_snapshot: C,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: Option<String>,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

/// Exit code of a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidSpec(_)
        | Error::FoldTooSmall(_)
        | Error::SubsampleTooSmall(_)
        | Error::EmptyLambdaGrid
        | Error::EmptyPath => EXIT_CONFIG,
        Error::EmptyData
        | Error::ConstantColumn(_)
        | Error::Io { .. }
        | Error::Parse { .. }
        | Error::NonFiniteValue { .. }
        | Error::MissingColumn(_)
        | Error::DimensionMismatch { .. }
        | Error::NotStandardized
        | Error::SeriesTooShort { .. } => EXIT_DATA,
        Error::ResidualOverflow(_)
        | Error::ZeroCoefficient
        | Error::StepUnderflow
        | Error::SingularSystem(_)
        | Error::EmptyActiveSet => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_CONFIG;
        }
    };
    let stamp = cli.timestamp;
    let outcome = pool.install(|| match &cli.command {
        Command::Fit(a) => cmd_fit(a, stamp),
        Command::Simulate(a) => cmd_simulate(a, stamp),
        Command::Influence(a) => cmd_influence(a, stamp),
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn timestamp(wall_clock: bool) -> Option<String> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v.trim().parse::<i64>().ok()?,
        Err(_) if wall_clock => std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()?
            .as_secs() as i64,
        Err(_) => return None,
    };
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn manifest<C: Serialize>(command: &str, config: C, seed: u64, stamp: bool) -> RunManifest<C> {
    RunManifest {
        command: command.to_string(),
        config_snapshot: config,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: timestamp(stamp),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| config_error(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| config_error(format!("cannot write to stdout: {e}")))
        }
    }
}

fn parse_penalty(name: &str, lambda: f64) -> Result<PenaltySpec, Failure> {
    let family: PenaltyFamily = name.parse()?;
    Ok(PenaltySpec::new(family, lambda))
}

fn load(model: &ModelArgs) -> Result<(Dataset, Dataset), Failure> {
    if model.gamma < 2 || model.gamma % 2 != 0 {
        return Err(config_error(format!("gamma must be even and at least 2, got {}", model.gamma)));
    }
    let response: ResponseColumn = model.response.parse().unwrap_or_else(|e| match e {});
    let raw = read_csv(&model.data, &response)?;
    let data = standardize(&raw)?;
    Ok((raw, data))
}

fn base_config(model: &ModelArgs, lambda: f64) -> Result<FitConfig, Failure> {
    let mut cfg = FitConfig::new(model.gamma, parse_penalty(&model.penalty, lambda)?);
    cfg.delta = model.delta;
    cfg.alpha = model.alpha;
    cfg.max_iters = model.max_iters;
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TraceSummary {
    initial: f64,
    last: f64,
    length: usize,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    manifest: RunManifest<&'a FitArgs>,
    gamma: u32,
    penalty: PenaltyFamily,
    lambda: f64,
    converged: bool,
    iterations: usize,
    objective: TraceSummary,
    support: Vec<usize>,
    support_names: Option<Vec<String>>,
    beta_standardized: Vec<f64>,
    beta_raw: Vec<f64>,
    intercept_raw: f64,
    cv_curve: Option<Vec<CvPoint>>,
}

fn cmd_fit(args: &FitArgs, stamp: bool) -> Result<(), Failure> {
    let (_, data) = load(&args.model)?;
    let (lambda, curve) = match (args.lambda_cv, args.model.lambda) {
        (true, _) => {
            let base = base_config(&args.model, 0.0)?;
            let scoring = match args.cv_scoring.as_str() {
                "gamma" => CvScoring::GammaLoss,
                "squared" => CvScoring::SquaredLoss,
                other => return Err(config_error(format!("unknown cv scoring `{other}`"))),
            };
            let cv = CvConfig::new(default_lambda_grid(&data, args.model.gamma)?)
                .with_folds(args.folds)
                .with_seed(args.seed)
                .with_scoring(scoring);
            let res = cross_validate(&data, &base, &cv)?;
            (res.best_lambda, Some(res.curve))
        }
        (false, Some(l)) => (l, None),
        (false, None) => return Err(config_error("either --lambda or --lambda-cv is required")),
    };
    let cfg = base_config(&args.model, lambda)?;
    let res = fit(&data, &cfg)?;
    let raw = data.to_raw_scale(&res.coefficients);
    let support = res.coefficients.support().to_vec();
    let out = FitOutput {
        manifest: manifest("fit", args, args.seed, stamp),
        gamma: cfg.gamma,
        penalty: cfg.penalty.family,
        lambda,
        converged: res.converged,
        iterations: res.iterations,
        objective: TraceSummary {
            initial: res.objective_trace[0],
            last: *res.objective_trace.last().expect("trace holds the starting point"),
            length: res.objective_trace.len(),
        },
        support_names: data.names().map(|n| support.iter().map(|&j| n[j].clone()).collect()),
        support,
        beta_standardized: res.coefficients.beta().to_vec(),
        beta_raw: raw.beta().to_vec(),
        intercept_raw: raw.intercept(),
        cv_curve: curve,
    };
    emit(args.out.as_deref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct SimulateConfig<'a> {
    args: &'a SimulateArgs,
    base: &'a ScenarioSpec,
    axis: SweepAxis,
    values: &'a [f64],
}

fn cmd_simulate(args: &SimulateArgs, stamp: bool) -> Result<(), Failure> {
    let model: ScenarioModel = args.model.parse()?;
    let methods: Vec<Method> = args.methods.iter().map(|m| m.trim().parse()).collect::<Result<_, _>>()?;
    let (axis, values) = match (args.scenario, &args.axis, &args.values) {
        (Some(k), None, None) => scenario_preset(model, k)?,
        (None, Some(a), Some(v)) => (a.parse()?, v.clone()),
        (None, None, None) => return Err(config_error("give --scenario or both --axis and --values")),
        _ => return Err(config_error("--scenario cannot be combined with --axis/--values, which go together")),
    };
    let mut base = match model {
        ScenarioModel::Linear => ScenarioSpec::linear(),
        ScenarioModel::Mixture => ScenarioSpec::mixture(),
    };
    base.seed = args.seed;
    if let Some(v) = args.n {
        base.n = v;
    }
    if let Some(v) = args.p {
        base.p = v;
    }
    if let Some(v) = args.events {
        base.events = v;
    }
    if let Some(v) = args.tau {
        base.tau = v;
    }
    if let Some(v) = args.gamma_rate {
        base.gamma_rate = v;
    }
    let table = run_scenario_sweep(&base, axis, &values, &methods, args.replicates)?;

    fs::create_dir_all(&args.out).map_err(|e| {
        Failure::from(Error::Io {
            path: args.out.clone(),
            source: e,
        })
    })?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    write_file(&args.out.join("table.csv"), &csv)?;
    let mut long = Vec::new();
    table.write_long_csv(&mut long)?;
    write_file(&args.out.join("long.csv"), &long)?;
    write_file(&args.out.join("table.json"), to_json(&table)?.as_bytes())?;
    let config = SimulateConfig {
        args,
        base: &base,
        axis,
        values: &values,
    };
    write_file(
        &args.out.join("manifest.json"),
        to_json(&manifest("simulate", config, args.seed, stamp))?.as_bytes(),
    )
}

/// Parses `y0,x1,...,xp`.
fn parse_point(s: &str, p: usize) -> Result<(f64, Array1<f64>), Failure> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| config_error(format!("--point must be comma-separated numbers, got `{s}`")))?;
    if vals.len() != p + 1 || vals.iter().any(|v| !v.is_finite()) {
        return Err(config_error(format!(
            "--point needs {} finite values (y0 then {p} predictors), got {}",
            p + 1,
            vals.len()
        )));
    }
    Ok((vals[0], Array1::from(vals[1..].to_vec())))
}

#[derive(Serialize)]
struct RatioEntry {
    index: usize,
    /// `null` when the least-squares influence is zero.
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct InfluenceOutput<'a> {
    manifest: RunManifest<&'a InfluenceArgs>,
    report: InfluenceReport,
    lasso_report: Option<InfluenceReport>,
    ratios: Option<Vec<RatioEntry>>,
}

fn cmd_influence(args: &InfluenceArgs, stamp: bool) -> Result<(), Failure> {
    let (_, data) = load(&args.model)?;
    let lambda = args
        .model
        .lambda
        .ok_or_else(|| config_error("--lambda is required"))?;
    let (y0, x0) = parse_point(&args.point, data.n_features())?;
    let cfg = base_config(&args.model, lambda)?;
    let res = fit(&data, &cfg)?;
    let xs = data.standardize_row(x0.view());
    let ys = data.standardize_response(y0);
    let report = influence(&data, &res.coefficients, &cfg.penalty, cfg.gamma, xs.view(), ys)?;
    let (lasso_report, ratios) = if args.compare_lasso {
        let lasso = influence(&data, &res.coefficients, &cfg.penalty, 2, xs.view(), ys)?;
        let r = influence_ratio(&report, &lasso);
        let entries = report
            .active_set
            .iter()
            .map(|&j| RatioEntry {
                index: j,
                ratio: r[j].is_finite().then_some(r[j]),
            })
            .collect();
        (Some(lasso), Some(entries))
    } else {
        (None, None)
    };
    let out = InfluenceOutput {
        manifest: manifest("influence", args, 0, stamp),
        report,
        lasso_report,
        ratios,
    };
    emit(args.out.as_deref(), &to_json(&out)?)
}
