//! Command-line front end: flag and config-file resolution, dispatch, and
//! CSV/JSON reporting.
//!
//! Exit codes: 0 when every verdict passes, 1 on a verdict failure, 2 on
//! usage, parse, domain or regime errors.

pub mod config;
pub mod parse;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::algebra::{Polynomial, TraceEngine};
use crate::covariance::HurstParams;
use crate::error::{Error, Result};
use crate::integrators::{
    check_regime, integrate, ito_formula_residual, ito_identification_check, ito_strato_residual, rough_case_decay,
    AreaRule, ConvergenceReport, FitTarget, IntegralKind, ResidualOptions, DEFAULT_QUAD_POINTS,
};
use crate::malliavin::{dual_residual, energy_bound_slack, isometry_residual};
use crate::matrix_oracle::{bias_budget, cross_check, sample_paths};
use crate::random;
use crate::time::Time;

pub use parse::{parse_levels, parse_pair, parse_polynomial, parse_word, LetterSpec, WordSpec, DEFAULT_SNAP_DEPTH};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// JSON report schema shipped with the crate.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

#[derive(Parser, Debug)]
#[command(name = "ncfbm", version, about = "Wick-calculus engine for the non-commutative fractional Brownian motion")]
pub struct Cli {
    #[command(flatten)]
    pub flags: Flags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Every flag may also come from the config file under the same name.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// key=value file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub hurst: Option<f64>,
    /// Horizon T (default 1).
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Interval `s:t` (default `0:T`).
    #[arg(long, global = true)]
    pub interval: Option<String>,
    #[arg(long, global = true)]
    pub p: Option<String>,
    #[arg(long, global = true)]
    pub q: Option<String>,
    /// Word such as `X(1) X(0.25,0.5)`.
    #[arg(long, global = true)]
    pub word: Option<String>,
    /// Level range `a:b`.
    #[arg(long, global = true)]
    pub levels: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Quadrature cells for correction integrals.
    #[arg(long, global = true)]
    pub quad: Option<usize>,
    /// Double the quadrature until the correction moves by less than this.
    #[arg(long = "quad-tol", global = true)]
    pub quad_tol: Option<f64>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path prefix for `<prefix>.csv` and `<prefix>.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write only this format (default: both).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Maximum degree of random inputs for `check`.
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Random cases for `check`.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Inner power for `rough-case`.
    #[arg(long = "d", global = true)]
    pub d: Option<usize>,
    /// Left power for `rough-case`.
    #[arg(long = "d1", global = true)]
    pub d1: Option<usize>,
    /// Right power for `rough-case`.
    #[arg(long = "d2", global = true)]
    pub d2: Option<usize>,
    /// Maximum extra Lévy-area levels for `rough-case`.
    #[arg(long = "area-extra", global = true)]
    pub area_extra: Option<u32>,
    /// Bias constant `C` in the matrix budget `C/d²`.
    #[arg(long = "bias-c", global = true)]
    pub bias_c: Option<f64>,
    /// Dyadic depth that input times snap to.
    #[arg(long = "snap-depth", global = true)]
    pub snap_depth: Option<u32>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Trace of a word.
    Trace,
    /// Randomized identity checks.
    Check {
        #[command(subcommand)]
        which: CheckKind,
    },
    /// Partition integral of P(X) dX Q(X) over dyadic levels.
    Integrate {
        #[arg(value_enum)]
        kind: Option<KindArg>,
        #[arg(long = "kind", value_enum, conflicts_with = "kind")]
        kind_flag: Option<KindArg>,
    },
    /// Convergence experiments.
    Experiment {
        #[command(subcommand)]
        which: ExperimentKind,
    },
    /// Monte Carlo matrix model against the Wick trace.
    MatrixCrosscheck,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Dual,
    Isometry,
    Bound,
    IdentifyIto,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ItoStrato,
    ItoFormula,
    RoughCase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Young,
    Rough,
    Skorohod,
}

impl From<KindArg> for IntegralKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Young => IntegralKind::Young,
            KindArg::Rough => IntegralKind::Rough,
            KindArg::Skorohod => IntegralKind::Skorohod,
        }
    }
}

/// Resolved task after merging flags, config file and defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Trace,
    Check(CheckKind),
    Integrate(IntegralKind),
    Experiment(ExperimentKind),
    MatrixCrosscheck,
}

impl Task {
    pub fn name(self) -> String {
        match self {
            Task::Trace => "trace".into(),
            Task::Check(k) => format!("check {}", kebab(format!("{k:?}"))),
            Task::Integrate(k) => format!("integrate {}", k.name()),
            Task::Experiment(k) => format!("experiment {}", kebab(format!("{k:?}"))),
            Task::MatrixCrosscheck => "matrix-crosscheck".into(),
        }
    }
}

fn kebab(s: String) -> String {
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push('-');
        }
        out.extend(c.to_lowercase());
    }
    out
}

/// Fully validated experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub task: Task,
    pub params: HurstParams,
    pub interval: (Time, Time),
    pub p: Polynomial,
    pub q: Polynomial,
    pub word: Option<WordSpec>,
    pub levels: (u32, u32),
    pub tol: f64,
    pub quad: usize,
    pub quad_tol: Option<f64>,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub degree: usize,
    pub trials: usize,
    pub powers: [usize; 3],
    pub area_extra: u32,
    pub bias_c: f64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    /// Snapping and similar notices for the diagnostic stream.
    pub warnings: Vec<String>,
}

fn task_of(cmd: &Command) -> Result<Task> {
    Ok(match cmd {
        Command::Trace => Task::Trace,
        Command::Check { which } => Task::Check(*which),
        Command::Integrate { kind, kind_flag } => match kind.or(*kind_flag) {
            Some(k) => Task::Integrate(k.into()),
            None => return Err(Error::Domain("integrate needs a kind: young, rough or skorohod".into())),
        },
        Command::Experiment { which } => Task::Experiment(*which),
        Command::MatrixCrosscheck => Task::MatrixCrosscheck,
    })
}

fn config_value_error(e: &config::Entry, what: &str) -> Error {
    Error::Parse {
        offset: e.offset,
        message: format!("config key `{}` has invalid value `{}`", e.key, e.value),
        expected: vec![what.into()],
    }
}

fn set<T: std::str::FromStr>(slot: &mut Option<T>, e: &config::Entry, what: &str) -> Result<()> {
    if slot.is_none() {
        *slot = Some(e.value.parse().map_err(|_| config_value_error(e, what))?);
    }
    Ok(())
}

/// Fills flags missing on the command line from config entries.
pub fn merge_config(flags: &mut Flags, entries: &[config::Entry]) -> Result<()> {
    for e in entries {
        match e.key.as_str() {
            "hurst" => set(&mut flags.hurst, e, "number")?,
            "horizon" => set(&mut flags.horizon, e, "number")?,
            "interval" => set(&mut flags.interval, e, "s:t")?,
            "p" => set(&mut flags.p, e, "polynomial")?,
            "q" => set(&mut flags.q, e, "polynomial")?,
            "word" => set(&mut flags.word, e, "word")?,
            "levels" => set(&mut flags.levels, e, "a:b")?,
            "tol" => set(&mut flags.tol, e, "number")?,
            "quad" => set(&mut flags.quad, e, "unsigned integer")?,
            "quad-tol" => set(&mut flags.quad_tol, e, "number")?,
            "dim" => set(&mut flags.dim, e, "unsigned integer")?,
            "samples" => set(&mut flags.samples, e, "unsigned integer")?,
            "seed" => set(&mut flags.seed, e, "unsigned integer")?,
            "out" => set(&mut flags.out, e, "path")?,
            "format" => {
                if flags.format.is_none() {
                    flags.format =
                        Some(Format::from_str(&e.value, true).map_err(|_| config_value_error(e, "csv or json"))?);
                }
            }
            "degree" => set(&mut flags.degree, e, "unsigned integer")?,
            "trials" => set(&mut flags.trials, e, "unsigned integer")?,
            "d" => set(&mut flags.d, e, "unsigned integer")?,
            "d1" => set(&mut flags.d1, e, "unsigned integer")?,
            "d2" => set(&mut flags.d2, e, "unsigned integer")?,
            "area-extra" => set(&mut flags.area_extra, e, "unsigned integer")?,
            "bias-c" => set(&mut flags.bias_c, e, "number")?,
            "snap-depth" => set(&mut flags.snap_depth, e, "unsigned integer")?,
            _ => {
                return Err(Error::Parse {
                    offset: e.offset,
                    message: format!("unknown config key `{}`", e.key),
                    expected: vec!["a flag name".into()],
                })
            }
        }
    }
    Ok(())
}

fn polynomial_flag(text: Option<&str>, name: &str) -> Result<Polynomial> {
    match text {
        None => Ok(Polynomial::constant(1.0)),
        Some(t) => parse_polynomial(t).map_err(|e| match e {
            Error::Parse { offset, message, expected } => {
                Error::Parse { offset, message: format!("--{name}: {message}"), expected }
            }
            other => other,
        }),
    }
}

/// Resolves flags (already merged with any config file) for `cmd`,
/// applying defaults and regime guards.
pub fn resolve(cmd: &Command, flags: &Flags) -> Result<ExperimentConfig> {
    let task = task_of(cmd)?;
    let hurst = flags.hurst.ok_or_else(|| Error::Domain("--hurst is required".into()))?;
    let horizon = flags.horizon.unwrap_or(1.0);
    let params = HurstParams::new(hurst, horizon)?;
    let depth = flags.snap_depth.unwrap_or(DEFAULT_SNAP_DEPTH);
    let mut warnings = Vec::new();

    let interval = match &flags.interval {
        None => (Time::ZERO, Time::HORIZON),
        Some(text) => {
            let (a, b) = parse_pair(text)?;
            let sa = parse::snap_time(a, horizon, depth, 0)?;
            let sb = parse::snap_time(b, horizon, depth, 0)?;
            warnings.extend(sa.warning(horizon));
            warnings.extend(sb.warning(horizon));
            if sa.time >= sb.time {
                return Err(Error::Domain(format!("interval {a}:{b} is empty")));
            }
            (sa.time, sb.time)
        }
    };
    let word = match &flags.word {
        None => None,
        Some(text) => {
            let w = parse_word(text, horizon, depth)?;
            warnings.extend(w.warnings(horizon));
            Some(w)
        }
    };
    let default_levels = match task {
        Task::Check(CheckKind::IdentifyIto) => (3, 6),
        _ => (4, 9),
    };
    let levels = match &flags.levels {
        None => default_levels,
        Some(t) => parse_levels(t)?,
    };
    let default_tol = match task {
        Task::Check(CheckKind::IdentifyIto) => 1e-12,
        Task::Check(_) => 1e-9,
        _ => 1e-3,
    };
    let cfg = ExperimentConfig {
        task,
        params,
        interval,
        p: polynomial_flag(flags.p.as_deref(), "p")?,
        q: polynomial_flag(flags.q.as_deref(), "q")?,
        word,
        levels,
        tol: flags.tol.unwrap_or(default_tol),
        quad: flags.quad.unwrap_or(DEFAULT_QUAD_POINTS),
        quad_tol: flags.quad_tol,
        dim: flags.dim.unwrap_or(64),
        samples: flags.samples.unwrap_or(1000),
        seed: flags.seed.unwrap_or(0),
        degree: flags.degree.unwrap_or(4),
        trials: flags.trials.unwrap_or(100),
        powers: [flags.d.unwrap_or(0), flags.d1.unwrap_or(0), flags.d2.unwrap_or(0)],
        area_extra: flags.area_extra.unwrap_or(2),
        bias_c: flags.bias_c.unwrap_or(1.0),
        out: flags.out.clone(),
        format: flags.format,
        warnings,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    let h = cfg.params.hurst();
    match cfg.task {
        Task::Integrate(k) => check_regime(&cfg.params, k)?,
        Task::Experiment(ExperimentKind::ItoStrato | ExperimentKind::ItoFormula) => {
            check_regime(&cfg.params, IntegralKind::Rough)?
        }
        Task::Experiment(ExperimentKind::RoughCase) if !cfg.params.is_rough() => {
            return Err(Error::Regime(format!("rough-case requires 1/3<H<=1/2, got H={h}")))
        }
        Task::Check(CheckKind::IdentifyIto) if h != 0.5 => {
            return Err(Error::Regime(format!("identify-ito requires H=1/2, got H={h}")))
        }
        _ => {}
    }
    if !(cfg.tol >= 0.0) {
        return Err(Error::Domain(format!("tolerance {} must be nonnegative", cfg.tol)));
    }
    if cfg.quad == 0 || cfg.dim == 0 || cfg.samples < 2 || cfg.trials == 0 {
        return Err(Error::Domain("--quad, --dim and --trials must be positive and --samples at least 2".into()));
    }
    let needs_word = matches!(cfg.task, Task::Trace | Task::MatrixCrosscheck);
    match &cfg.word {
        None if needs_word => return Err(Error::Domain("--word is required".into())),
        Some(w) if cfg.task == Task::MatrixCrosscheck && w.atom_times().is_none() => {
            return Err(Error::Domain("matrix-crosscheck accepts only atoms X(t)".into()))
        }
        _ => {}
    }
    Ok(())
}

/// Result of one dispatched task.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub verdict: String,
    pub report: Option<ConvergenceReport>,
    pub results: Value,
}

impl Outcome {
    fn from_report(report: ConvergenceReport, results: Value) -> Outcome {
        Outcome { pass: report.pass, verdict: report.verdict.clone(), report: Some(report), results }
    }
}

fn verdict(pass: bool, detail: String) -> String {
    format!("{}: {detail}", if pass { "pass" } else { "fail" })
}

/// Runs the configured task; does not write files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    let engine = TraceEngine::new(cfg.params);
    let (s, t) = cfg.interval;
    let levels = cfg.levels.0..=cfg.levels.1;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.task {
        Task::Trace => {
            let w = cfg.word.as_ref().expect("validated");
            let value = engine.element_trace(&w.to_element())?;
            Ok(Outcome { pass: true, verdict: format!("trace {value}"), report: None, results: json!({ "trace": value }) })
        }
        Task::Check(CheckKind::Dual) => {
            let mut worst = 0.0f64;
            for _ in 0..cfg.trials {
                let y = random::element(&mut rng, cfg.degree);
                let bp = random::biprocess(&mut rng, cfg.degree);
                worst = worst.max(dual_residual(&engine, &y, &bp)?);
            }
            let pass = worst <= cfg.tol;
            Ok(Outcome {
                pass,
                verdict: verdict(pass, format!("max dual residual {worst:e} vs tol {:e}", cfg.tol)),
                report: None,
                results: json!({ "max_residual": worst, "trials": cfg.trials }),
            })
        }
        Task::Check(CheckKind::Isometry) => {
            let mut worst = 0.0f64;
            for _ in 0..cfg.trials {
                let u = random::biprocess(&mut rng, cfg.degree);
                let v = random::biprocess(&mut rng, cfg.degree);
                worst = worst.max(isometry_residual(&engine, &u, &v)?);
            }
            let pass = worst <= cfg.tol;
            Ok(Outcome {
                pass,
                verdict: verdict(pass, format!("max isometry residual {worst:e} vs tol {:e}", cfg.tol)),
                report: None,
                results: json!({ "max_residual": worst, "trials": cfg.trials }),
            })
        }
        Task::Check(CheckKind::Bound) => {
            let mut violations = 0usize;
            let mut min_slack = f64::INFINITY;
            for _ in 0..cfg.trials {
                let u = random::biprocess(&mut rng, cfg.degree);
                let slack = energy_bound_slack(&engine, &u)?;
                min_slack = min_slack.min(slack);
                if slack < -cfg.tol {
                    violations += 1;
                }
            }
            let pass = violations == 0;
            Ok(Outcome {
                pass,
                verdict: verdict(pass, format!("{violations} of {} cases violate the energy bound", cfg.trials)),
                report: None,
                results: json!({ "violations": violations, "min_slack": min_slack, "trials": cfg.trials }),
            })
        }
        Task::Check(CheckKind::IdentifyIto) => {
            let mut report = ConvergenceReport::new("identify-ito", FitTarget::Values, cfg.tol);
            for n in levels {
                let v = ito_identification_check(&engine, &cfg.p, &cfg.q, s, t, n)?;
                report.push(n, 0, v, f64::NAN);
            }
            let worst = report.values().into_iter().fold(0.0, f64::max);
            let pass = worst <= cfg.tol;
            report.conclude(pass, verdict(pass, format!("max difference {worst:e} vs tol {:e}", cfg.tol)));
            Ok(Outcome::from_report(report, json!({ "max_difference": worst })))
        }
        Task::Integrate(kind) => {
            let (value, report) = integrate(&engine, kind, &cfg.p, &cfg.q, s, t, cfg.tol, levels)?;
            let trace = engine.element_trace(&value)?;
            Ok(Outcome::from_report(report, json!({ "final_trace": trace, "final_terms": value.len() })))
        }
        Task::Experiment(which) => {
            let opts = ResidualOptions { quad_points: cfg.quad, quad_tol: cfg.quad_tol, extra_area_levels: 0 };
            let report = match which {
                ExperimentKind::ItoStrato => {
                    ito_strato_residual(&engine, &cfg.p, &cfg.q, s, t, levels, cfg.tol, &opts)?
                }
                ExperimentKind::ItoFormula => ito_formula_residual(&engine, &cfg.p, s, t, levels, cfg.tol, &opts)?,
                ExperimentKind::RoughCase => {
                    let [d, d1, d2] = cfg.powers;
                    let rule = AreaRule::Cauchy { tol: cfg.tol, max_extra: cfg.area_extra };
                    rough_case_decay(&engine, d, d1, d2, levels, rule)?
                }
            };
            let rate = report.fitted_rate();
            Ok(Outcome::from_report(report, json!({ "fitted_rate_log2": rate })))
        }
        Task::MatrixCrosscheck => {
            let w = cfg.word.as_ref().expect("validated");
            let word = w.atom_times().expect("validated");
            let mut grid = word.clone();
            grid.sort();
            grid.dedup();
            let samples = sample_paths(cfg.dim, &cfg.params, &grid, cfg.seed, cfg.samples)?;
            let budget = bias_budget(cfg.dim, cfg.bias_c);
            let c = cross_check(&engine, &samples, &word, budget)?;
            Ok(Outcome {
                pass: c.pass,
                verdict: verdict(
                    c.pass,
                    format!(
                        "empirical {:.6} ± {:.2e} vs Wick {:.6} (allowance {:.2e}, heuristic bias budget {budget:.2e})",
                        c.empirical.mean, c.empirical.stderr, c.wick, c.allowance
                    ),
                ),
                report: None,
                results: json!({
                    "empirical_mean": c.empirical.mean,
                    "stderr": c.empirical.stderr,
                    "wick": c.wick,
                    "allowance": c.allowance,
                    "bias_budget": budget,
                    "bias_budget_heuristic": true,
                }),
            })
        }
    }
}

/// Echo of the resolved configuration for JSON reports.
pub fn config_echo(cfg: &ExperimentConfig) -> Value {
    let horizon = cfg.params.horizon();
    json!({
        "hurst": cfg.params.hurst(),
        "horizon": horizon,
        "interval": [cfg.interval.0.at(horizon), cfg.interval.1.at(horizon)],
        "p": cfg.p.to_string(),
        "q": cfg.q.to_string(),
        "word": cfg.word.as_ref().map(|w| format!("{}", w.to_element())),
        "levels": [cfg.levels.0, cfg.levels.1],
        "tol": cfg.tol,
        "quad": cfg.quad,
        "quad_tol": cfg.quad_tol,
        "dim": cfg.dim,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "degree": cfg.degree,
        "trials": cfg.trials,
        "powers": cfg.powers,
        "area_extra": cfg.area_extra,
        "bias_c": cfg.bias_c,
    })
}

/// Full JSON report object.
pub fn report_json(cfg: &ExperimentConfig, outcome: &Outcome, wall_time: f64) -> Value {
    let (rows, notes, fit) = match &outcome.report {
        Some(r) => (
            serde_json::to_value(&r.rows).expect("rows serialize"),
            json!(r.notes),
            serde_json::to_value(r.fit).expect("fit serializes"),
        ),
        None => (json!([]), json!([]), Value::Null),
    };
    json!({
        "schema_version": 1,
        "command": cfg.task.name(),
        "config": config_echo(cfg),
        "rows": rows,
        "fit": fit,
        "results": outcome.results,
        "pass": outcome.pass,
        "verdict": outcome.verdict,
        "notes": notes,
        "warnings": cfg.warnings,
        "wall_time_seconds": wall_time,
    })
}

fn csv_text(outcome: &Outcome) -> String {
    match &outcome.report {
        Some(r) => r.to_csv(),
        None => format!("{}\n", crate::integrators::CSV_HEADER),
    }
}

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_outputs(cfg: &ExperimentConfig, outcome: &Outcome, wall: f64) -> Result<Vec<PathBuf>> {
    let Some(prefix) = &cfg.out else {
        return Ok(Vec::new());
    };
    let io = |p: &Path, e: std::io::Error| Error::Domain(format!("cannot write {}: {e}", p.display()));
    let mut written = Vec::new();
    if cfg.format != Some(Format::Json) {
        let path = with_extension(prefix, "csv");
        fs::write(&path, csv_text(outcome)).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    if cfg.format != Some(Format::Csv) {
        let path = with_extension(prefix, "json");
        let text = serde_json::to_string_pretty(&report_json(cfg, outcome, wall)).expect("json");
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NoConvergence(_) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

/// Parses `args`, runs, writes reports; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match run_cli(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}

fn run_cli(cli: &Cli, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> Result<i32> {
    let mut flags = cli.flags.clone();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {}: {e}", path.display())))?;
        merge_config(&mut flags, &config::parse_config(&text)?)?;
    }
    let cfg = resolve(&cli.command, &flags)?;
    for w in &cfg.warnings {
        let _ = writeln!(stderr, "{w}");
    }
    let start = Instant::now();
    let outcome = run_experiment(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    if outcome.report.is_some() {
        let _ = write!(stdout, "{}", csv_text(&outcome));
    } else if let Value::Object(m) = &outcome.results {
        for (k, v) in m {
            let _ = writeln!(stdout, "{k} = {v}");
        }
    }
    let _ = writeln!(stdout, "{}: {} ({wall:.3} s)", cfg.task.name(), outcome.verdict);
    for path in write_outputs(&cfg, &outcome, wall)? {
        let _ = writeln!(stderr, "wrote {}", path.display());
    }
    Ok(if outcome.pass { EXIT_PASS } else { EXIT_FAIL })
}
