//! `ges`: solve, validate and profile pickup-and-delivery instances.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ges_core::ges::{CancelToken, GesConfig, GesError};
use ges_core::io::{parse_instance, parse_solution, validate_solution, write_solution};
use ges_core::model::Instance;
use ges_core::profiler::{run_sweep, sweep_instance, ScalingReport, SweepConfig};
use ges_core::ring::run_parallel;
use ges_core::synthetic::{generate_text, GeneratorConfig, Layout};

#[derive(Parser, Debug)]
#[command(name = "ges", version, about = "Fleet minimization for pickup and delivery with time windows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the number of routes of one instance.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
    /// Measure operation counts over a size sweep of synthetic instances.
    Profile(ProfileArgs),
    /// Write a synthetic instance in the benchmark format.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Default, Clone)]
struct SearchArgs {
    /// Maximum number of requests ejected at once.
    #[arg(long)]
    kmax: Option<usize>,
    /// Perturbation steps after each ejection.
    #[arg(long)]
    perturb_steps: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Stop once a solution with at most this many routes is found.
    #[arg(long)]
    target_routes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Outer iterations per worker.
    #[arg(long)]
    max_outer: Option<u64>,
    /// Inner iterations per outer iteration.
    #[arg(long)]
    inner_cap: Option<u64>,
    /// Stop after this many consecutive failed attempts.
    #[arg(long)]
    max_failed: Option<u64>,
    /// Reset to the initial solution after a failed attempt.
    #[arg(long)]
    literal_line_31: bool,
    /// Seconds a finished worker may wait for the rest of the ring.
    #[arg(long)]
    watchdog: Option<f64>,
    /// TOML file with defaults for these options; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance file; relative paths are also looked up in $GES_BENCHMARK_DIR.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Solution file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one line per cooperation message.
    #[arg(long)]
    message_log: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    /// Customer counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    /// Worker counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    workers: Vec<usize>,
    /// Layouts cycled over repetitions (c, r, rc).
    #[arg(long, value_delimiter = ',', default_value = "r,c,rc")]
    layouts: Vec<Layout>,
    /// Inner iteration cap as a multiple of the request count.
    #[arg(long, default_value_t = 1.0)]
    inner_cap_factor: f64,
    /// CSV report path (stdout when absent).
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value = "r")]
    layout: Layout,
    #[arg(long, default_value_t = 100)]
    customers: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    workers: Option<usize>,
    kmax: Option<usize>,
    perturb_steps: Option<usize>,
    time_limit: Option<f64>,
    target_routes: Option<usize>,
    seed: Option<u64>,
    max_outer: Option<u64>,
    inner_cap: Option<u64>,
    max_failed: Option<u64>,
    literal_line_31: Option<bool>,
    watchdog: Option<f64>,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    Unsolved(String),
    Input(String),
    Watchdog(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Unsolved(_) => 2,
            Failure::Input(_) => 3,
            Failure::Watchdog(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Unsolved(_) => "unsolved",
            Failure::Input(_) => "input_error",
            Failure::Watchdog(_) => "watchdog",
            Failure::Other(_) => "error",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Unsolved(m) | Failure::Input(m) | Failure::Watchdog(m) | Failure::Other(m) => m,
        }
    }
}

impl From<GesError> for Failure {
    fn from(e: GesError) -> Self {
        match e {
            GesError::Unsolvable { .. } => Failure::Unsolved(e.to_string()),
            GesError::Watchdog(_) => Failure::Watchdog(e.to_string()),
            GesError::Config(_) => Failure::Input(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn status_line(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{k}={v}");
    }
    s
}

fn quote(s: &str) -> String {
    format!("{s:?}")
}

fn resolve_instance(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os("GES_BENCHMARK_DIR") {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let path = resolve_instance(path);
    let text = read(&path)?;
    let name = path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned());
    parse_instance(&name, &text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

/// Merges flags over the optional config file over defaults.
fn search_config(args: &SearchArgs, cancel: &CancelToken) -> Result<(GesConfig, FileConfig), Failure> {
    let file = match &args.config {
        Some(p) => toml::from_str::<FileConfig>(&read(p)?)
            .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        None => FileConfig::default(),
    };
    let d = GesConfig::default();
    let time_limit = args.time_limit.or(file.time_limit);
    let time_limit = match time_limit {
        Some(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(Failure::Input(format!("time limit must be positive, got {t}")));
        }
        Some(t) => Some(Duration::from_secs_f64(t)),
        None => d.time_limit,
    };
    let cfg = GesConfig {
        k_max: args.kmax.or(file.kmax).unwrap_or(d.k_max),
        perturb_steps: args.perturb_steps.or(file.perturb_steps).unwrap_or(d.perturb_steps),
        max_outer_iterations: args.max_outer.or(file.max_outer),
        inner_iteration_cap: args.inner_cap.or(file.inner_cap),
        time_limit,
        max_failed_attempts: args.max_failed.or(file.max_failed),
        target_route_count: args.target_routes.or(file.target_routes),
        seed: args.seed.or(file.seed).unwrap_or(d.seed),
        literal_line_31: args.literal_line_31 || file.literal_line_31.unwrap_or(false),
        cancel: cancel.clone(),
    };
    if cfg.k_max == 0 {
        return Err(Failure::Input("--kmax must be at least 1".into()));
    }
    Ok((cfg, file))
}

fn watchdog(args: &SearchArgs, file: &FileConfig) -> Result<Duration, Failure> {
    let secs = args.watchdog.or(file.watchdog).unwrap_or(30.0);
    if !(secs > 0.0 && secs.is_finite()) {
        return Err(Failure::Input(format!("watchdog must be positive, got {secs}")));
    }
    Ok(Duration::from_secs_f64(secs))
}

fn cmd_solve(args: SolveArgs, cancel: &CancelToken) -> Result<String, Failure> {
    let (cfg, file) = search_config(&args.search, cancel)?;
    let workers = args.workers.or(file.workers).unwrap_or(4);
    if workers == 0 {
        return Err(Failure::Input("--workers must be at least 1".into()));
    }
    let dog = watchdog(&args.search, &file)?;
    let inst = load_instance(&args.instance)?;
    let out = run_parallel(&inst, &cfg, workers, dog)?;
    let mut text = Vec::new();
    write_solution(&out.best, Some(&inst.name), &mut text).map_err(|e| Failure::Unsolved(e.to_string()))?;
    let text = String::from_utf8(text).expect("solution text is UTF-8");
    match &args.out {
        Some(p) => write_out(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &args.message_log {
        let mut log = String::new();
        for m in &out.messages {
            let _ = writeln!(log, "{m}");
        }
        write_out(p, &log)?;
    }
    Ok(status_line(&[
        ("status", "ok".into()),
        ("instance", quote(&inst.name)),
        ("routes", out.best.route_count().to_string()),
        ("initial_routes", out.initial_route_count().to_string()),
        ("workers", workers.to_string()),
        ("best_worker", out.best_worker.to_string()),
        ("stop", out.stop().as_str().into()),
        ("outer_iterations", out.counters.outer_iterations.to_string()),
        ("inner_iterations", out.counters.inner_iterations.to_string()),
        ("messages", out.messages.len().to_string()),
        ("wall_seconds", format!("{:.3}", out.elapsed.as_secs_f64())),
    ]))
}

fn cmd_validate(args: ValidateArgs) -> Result<String, Failure> {
    let inst = load_instance(&args.instance)?;
    let file = parse_solution(&read(&args.solution)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", args.solution.display())))?;
    let verdict = validate_solution(&file, &inst);
    if verdict.accepted() {
        return Ok(status_line(&[
            ("status", "accepted".into()),
            ("routes", file.route_count().to_string()),
        ]));
    }
    let mut msg = format!("{} violation(s)", verdict.violations.len());
    for v in &verdict.violations {
        let _ = write!(msg, "\n  {v}");
    }
    Err(Failure::Unsolved(msg))
}

fn cmd_profile(args: ProfileArgs, cancel: &CancelToken) -> Result<String, Failure> {
    let (mut solver, file) = search_config(&args.search, cancel)?;
    if args.search.time_limit.is_none() && file.time_limit.is_none() {
        solver.time_limit = None;
    }
    if solver.max_failed_attempts.is_none() && solver.time_limit.is_none() && solver.max_outer_iterations.is_none() {
        solver.max_failed_attempts = Some(1);
    }
    if args.sizes.is_empty() || args.reps == 0 || args.workers.contains(&0) || args.layouts.is_empty() {
        return Err(Failure::Input("sizes, reps, workers and layouts must be nonempty and positive".into()));
    }
    if let Some(s) = args.sizes.iter().find(|s| **s % 2 != 0) {
        return Err(Failure::Input(format!("size {s} is odd; sizes count customers, two per request")));
    }
    let cfg = SweepConfig {
        sizes: args.sizes.clone(),
        reps: args.reps,
        workers: args.workers.clone(),
        solver: solver.clone(),
        inner_cap_per_request: (args.search.inner_cap.is_none() && file.inner_cap.is_none()).then_some(args.inner_cap_factor),
        layouts: args.layouts.clone(),
        watchdog: watchdog(&args.search, &file)?,
    };
    let runs = run_sweep(
        &cfg,
        |s, r| sweep_instance(&cfg, s, r),
        |run| {
            eprintln!(
                "run n={} p={} rep={} routes={} wall_seconds={:.3}",
                run.n, run.p, run.rep, run.route_count, run.wall_seconds
            )
        },
    )?;
    let report = ScalingReport::from_runs(&runs, solver.perturb_steps);
    let csv = report.to_csv();
    match &args.report {
        Some(p) => write_out(p, &csv)?,
        None => print!("{csv}"),
    }
    for f in &report.fits {
        if let Some(fit) = &f.fit {
            eprintln!("fit {} exponent={:.3} residual={:.3}", f.phase, fit.exponent, fit.residual);
        }
    }
    for b in &report.bounds {
        eprintln!("bound {} <= c*{}: {}", b.phase, b.phase.bound_label(), if b.pass { "pass" } else { "fail" });
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let exponent = report
        .fit_for("ejection_steps")
        .and_then(|f| f.fit.as_ref())
        .map_or_else(|| "NA".to_string(), |f| format!("{:.4}", f.exponent));
    Ok(status_line(&[
        ("status", "ok".into()),
        ("runs", runs.len().to_string()),
        ("ejection_exponent", exponent),
        ("bounds_passed", report.bounds.iter().filter(|b| b.pass).count().to_string()),
        ("bounds_checked", report.bounds.len().to_string()),
        ("warnings", report.warnings.len().to_string()),
    ]))
}

fn cmd_generate(args: GenerateArgs) -> Result<String, Failure> {
    let cfg = GeneratorConfig::new(args.layout, args.customers, args.seed);
    let text = generate_text(&cfg).map_err(Failure::Input)?;
    match &args.out {
        Some(p) => write_out(p, &text)?,
        None => print!("{text}"),
    }
    Ok(status_line(&[
        ("status", "ok".into()),
        ("instance", quote(&cfg.name())),
        ("requests", (args.customers / 2).to_string()),
    ]))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("{}", status_line(&[("status", "usage_error".into())]));
            return ExitCode::from(3);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let cancel = CancelToken::default();
    {
        let cancel = cancel.clone();
        let _ = ctrlc::set_handler(move || cancel.cancel());
    }
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a, &cancel),
        Command::Validate(a) => cmd_validate(a),
        Command::Profile(a) => cmd_profile(a, &cancel),
        Command::Generate(a) => cmd_generate(a),
    };
    let _ = io::stdout().flush();
    match result {
        Ok(status) => {
            eprintln!("{status}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            eprintln!(
                "{}",
                status_line(&[("status", f.kind().into()), ("exit_code", f.code().to_string())])
            );
            ExitCode::from(f.code())
        }
    }
}
