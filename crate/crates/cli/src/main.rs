//! `fracint` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 problem validation
//! failure, 4 numeric failure. Failures print one JSON object to stderr.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fracint::analysis::{max_error_1d, run_ladder_with, LadderSpec};
use fracint::fracops::CaputoScheme;
use fracint::haar::WaveletSystem2D;
use fracint::problems::Builtin;
use fracint::reference::{reproduce, ReproduceOptions};
use fracint::solver1d::{solve_1d, Solve1DOptions};
use fracint::solver2d::{solve_2d_with, Solve2DOptions};
use serde::de::DeserializeOwned;
use serde_json::json;

use config::{ProblemSpec, RunConfig};

#[derive(Parser)]
#[command(name = "fracint", version, about = "Solvers for time-fractional integro-differential equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a 1D problem and write (x, t, value) rows.
    Solve1d(Opts),
    /// Solve a 2D problem by wavelet collocation and write (x, y, t, value) rows.
    Solve2d(Opts),
    /// Run a refinement ladder and write one row per rung.
    Ladder(Opts),
    /// Run the same 1D ladder with both Caputo schemes.
    Compare(Opts),
    /// Recompute a reference error table and compare cell by cell.
    ReproduceTable(Opts),
}

fn enum_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Args, Clone)]
struct Opts {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in problem name (inline problems go in the config file).
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Space intervals M.
    #[arg(long = "M", alias = "intervals")]
    intervals: Option<usize>,
    /// Time steps N.
    #[arg(long = "N", alias = "steps")]
    steps: Option<usize>,
    /// Time step, alternative to N.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    j1: Option<u32>,
    #[arg(long)]
    j2: Option<u32>,
    /// l2-1sigma or l1.
    #[arg(long, value_parser = enum_arg::<CaputoScheme>)]
    scheme: Option<CaputoScheme>,
    /// as-printed or quadrature-consistent.
    #[arg(long, value_parser = enum_arg::<fracint::solver1d::SigmaVariant>)]
    sigma_variant: Option<fracint::solver1d::SigmaVariant>,
    /// as-printed or include-initial.
    #[arg(long, value_parser = enum_arg::<fracint::analysis::L2Samples>)]
    l2_samples: Option<fracint::analysis::L2Samples>,
    /// exact or double-mesh.
    #[arg(long, value_parser = enum_arg::<fracint::analysis::ErrorMeasure>)]
    measure: Option<fracint::analysis::ErrorMeasure>,
    /// Comma-separated rungs: N/M (1D) or 2Mx2M/N (2D).
    #[arg(long)]
    rungs: Option<String>,
    /// First rung's time steps for a generated ladder.
    #[arg(long)]
    n0: Option<usize>,
    /// First rung's space intervals for a generated 1D ladder.
    #[arg(long)]
    m0: Option<usize>,
    /// Resolution level for a generated 2D ladder.
    #[arg(long)]
    j: Option<u32>,
    /// Number of rungs in a generated ladder.
    #[arg(long)]
    count: Option<usize>,
    /// Table number for reproduce-table.
    #[arg(long)]
    id: Option<u32>,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// JSON report path.
    #[arg(long)]
    json: Option<String>,
    /// Run ladder rungs in parallel.
    #[arg(long)]
    parallel: bool,
    /// Run even when problem validation fails.
    #[arg(long)]
    override_validation: bool,
    /// Omit the timestamp header line from CSV output.
    #[arg(long)]
    no_timestamp: bool,
    /// Keep wall-clock times in JSON reports.
    #[arg(long)]
    timings: bool,
}

impl Opts {
    fn flags(&self) -> RunConfig {
        RunConfig {
            problem: self.problem.clone().map(ProblemSpec::Named),
            alpha: self.alpha,
            intervals: self.intervals,
            steps: self.steps,
            dt: self.dt,
            j1: self.j1,
            j2: self.j2,
            scheme: self.scheme,
            sigma_variant: self.sigma_variant,
            l2_samples: self.l2_samples,
            measure: self.measure,
            rungs: self.rungs.clone(),
            n0: self.n0,
            m0: self.m0,
            j: self.j,
            count: self.count,
            id: self.id,
            out: self.out.clone(),
            json: self.json.clone(),
            parallel: self.parallel,
            override_validation: self.override_validation,
            no_timestamp: self.no_timestamp,
            timings: self.timings,
        }
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<RunConfig>(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        Ok(file.merge(self.flags()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Config,
    Validation,
    Numeric,
}

#[derive(Debug)]
struct CliError {
    kind: Kind,
    message: String,
    details: Option<serde_json::Value>,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
            details: None,
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Numeric,
            message: message.into(),
            details: None,
        }
    }

    fn code(&self) -> u8 {
        match self.kind {
            Kind::Config => 2,
            Kind::Validation => 3,
            Kind::Numeric => 4,
        }
    }

    fn to_json(&self) -> String {
        let kind = match self.kind {
            Kind::Config => "config",
            Kind::Validation => "validation",
            Kind::Numeric => "numeric",
        };
        let mut err = json!({ "kind": kind, "exit_code": self.code(), "message": self.message });
        if let Some(d) = &self.details {
            err["details"] = d.clone();
        }
        json!({ "error": err }).to_string()
    }
}

impl From<fracint::Error> for CliError {
    fn from(e: fracint::Error) -> Self {
        use fracint::Error as E;
        let message = e.to_string();
        let (kind, details) = match &e {
            E::InvalidAlpha(_) | E::InvalidGrid(_) | E::NotPowerOfTwo(_) | E::UnknownProblem(_) | E::NoExactSolution(_) => {
                (Kind::Config, None)
            }
            E::Validation(report) => (Kind::Validation, serde_json::to_value(report).ok()),
            E::WeightMonotonicity { .. } => (Kind::Validation, None),
            _ => (Kind::Numeric, None),
        };
        Self { kind, message, details }
    }
}

fn emit(path: Option<&str>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| CliError::numeric(format!("cannot write {p}: {e}"))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn emit_csv(cfg: &RunConfig, body: String) -> Result<(), CliError> {
    emit(cfg.out.as_deref(), &output::with_header(body, !cfg.no_timestamp))
}

fn emit_json(cfg: &RunConfig, value: &impl serde::Serialize) -> Result<(), CliError> {
    if let Some(p) = &cfg.json {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::numeric(e.to_string()))? + "\n";
        emit(Some(p), &text)?;
    }
    Ok(())
}

fn solve1d(cfg: &RunConfig) -> Result<(), CliError> {
    let Builtin::OneD(prob) = cfg.build_problem().map_err(CliError::config)? else {
        return Err(CliError::config("solve1d needs a 1D problem"));
    };
    let intervals = RunConfig::require(cfg.intervals, "intervals (M)").map_err(CliError::config)?;
    let steps = cfg.time_steps(prob.t_final).map_err(CliError::config)?;
    let opts = Solve1DOptions {
        scheme: cfg.scheme.unwrap_or(CaputoScheme::L21Sigma),
        sigma_variant: cfg.sigma_variant.unwrap_or_default(),
        override_validation: cfg.override_validation,
        ..Solve1DOptions::default()
    };
    let field = solve_1d(&prob, intervals, steps, &opts)?;
    if prob.exact.is_some() {
        eprintln!("max error {:.6e}", max_error_1d(&prob, &field)?);
    }
    emit_csv(cfg, output::field_csv(&field).map_err(CliError::numeric)?)
}

fn solve2d(cfg: &RunConfig) -> Result<(), CliError> {
    let Builtin::TwoD(prob) = cfg.build_problem().map_err(CliError::config)? else {
        return Err(CliError::config("solve2d needs a 2D problem"));
    };
    let j1 = RunConfig::require(cfg.j1, "j1").map_err(CliError::config)?;
    let j2 = cfg.j2.unwrap_or(j1);
    let steps = cfg.time_steps(prob.t_final).map_err(CliError::config)?;
    if cfg.scheme.is_some_and(|s| s != CaputoScheme::L21Sigma) {
        return Err(CliError::config("the 2D solver uses L2-1sigma only"));
    }
    let opts = Solve2DOptions {
        override_validation: cfg.override_validation,
        ..Solve2DOptions::default()
    };
    let field = solve_2d_with(&prob, &WaveletSystem2D::new(j1, j2)?, steps, &opts)?;
    if prob.exact.is_some() {
        let norms = fracint::analysis::errors_2d_problem(&prob, &field, cfg.l2_samples.unwrap_or_default())?;
        eprintln!("linf error {:.6e}, l2 error {:.6e}", norms.linf, norms.l2);
    }
    emit_csv(cfg, output::field_csv(&field).map_err(CliError::numeric)?)
}

fn ladder_spec(cfg: &RunConfig, prob: &Builtin, scheme: CaputoScheme) -> Result<LadderSpec, CliError> {
    let rungs = cfg.ladder_rungs(matches!(prob, Builtin::TwoD(_))).map_err(CliError::config)?;
    let mut spec = LadderSpec::new(prob.name(), cfg.alpha.unwrap_or_default(), scheme, rungs);
    spec.sigma_variant = cfg.sigma_variant.unwrap_or_default();
    spec.measure = cfg.measure.unwrap_or_default();
    spec.l2_samples = cfg.l2_samples.unwrap_or_default();
    spec.override_validation = cfg.override_validation;
    Ok(spec)
}

fn run(cfg: &RunConfig, spec: &LadderSpec, prob: &Builtin) -> Result<fracint::analysis::ConvergenceReport, CliError> {
    let report = run_ladder_with(spec, prob, cfg.parallel)?;
    Ok(if cfg.timings { report } else { report.without_timings() })
}

fn failed_rungs(reports: &[fracint::analysis::ConvergenceReport]) -> Result<(), CliError> {
    let failures: Vec<String> = reports
        .iter()
        .flat_map(|r| r.rungs.iter().filter_map(|g| g.failure.as_ref().map(|f| format!("{}: {f}", g.rung.label()))))
        .collect();
    if failures.is_empty() {
        return Ok(());
    }
    Err(CliError {
        kind: Kind::Numeric,
        message: format!("{} rung(s) failed", failures.len()),
        details: Some(json!(failures)),
    })
}

fn ladder(cfg: &RunConfig) -> Result<(), CliError> {
    let prob = cfg.build_problem().map_err(CliError::config)?;
    let spec = ladder_spec(cfg, &prob, cfg.scheme.unwrap_or(CaputoScheme::L21Sigma))?;
    let report = run(cfg, &spec, &prob)?;
    emit_csv(cfg, report.to_csv()?)?;
    emit_json(cfg, &report)?;
    failed_rungs(std::slice::from_ref(&report))
}

fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let prob = cfg.build_problem().map_err(CliError::config)?;
    if !matches!(prob, Builtin::OneD(_)) {
        return Err(CliError::config("compare needs a 1D problem"));
    }
    let reports = [CaputoScheme::L1, CaputoScheme::L21Sigma]
        .into_iter()
        .map(|s| ladder_spec(cfg, &prob, s).and_then(|spec| run(cfg, &spec, &prob)))
        .collect::<Result<Vec<_>, _>>()?;
    emit_csv(cfg, output::compare_csv(&reports).map_err(CliError::numeric)?)?;
    emit_json(cfg, &reports)?;
    failed_rungs(&reports)
}

fn reproduce_table(cfg: &RunConfig) -> Result<(), CliError> {
    let id = RunConfig::require(cfg.id, "id").map_err(CliError::config)?;
    let opts = ReproduceOptions {
        sigma_variant: cfg.sigma_variant.unwrap_or_default(),
        l2_samples: cfg.l2_samples,
        parallel: cfg.parallel,
    };
    let mut rep = reproduce(id, &opts)?;
    if !cfg.timings {
        rep.reports = rep.reports.into_iter().map(|r| r.without_timings()).collect();
    }
    eprintln!(
        "table {id}: errors {} (worst {:.3}%), orders {} (worst {:.4})",
        if rep.errors_ok() { "ok" } else { "off" },
        100.0 * rep.worst_error_deviation(),
        if rep.orders_ok() { "ok" } else { "off" },
        rep.worst_order_deviation()
    );
    emit_csv(cfg, rep.to_csv()?)?;
    emit_json(cfg, &rep)
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    let opts = match cmd {
        Command::Solve1d(o) | Command::Solve2d(o) | Command::Ladder(o) | Command::Compare(o) | Command::ReproduceTable(o) => o,
    };
    let cfg = opts.resolve()?;
    match cmd {
        Command::Solve1d(_) => solve1d(&cfg),
        Command::Solve2d(_) => solve2d(&cfg),
        Command::Ladder(_) => ladder(&cfg),
        Command::Compare(_) => compare(&cfg),
        Command::ReproduceTable(_) => reproduce_table(&cfg),
    }
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FRACINT_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n >= 1)
            .ok_or_else(|| CliError::config(format!("FRACINT_THREADS must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::numeric(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.code());
        }
    };
    let result = thread_pool().and_then(|pool| pool.install(|| dispatch(&cli.command)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.code())
        }
    }
}
