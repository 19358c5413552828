//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 no convergence, 3 derivative
//! check failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::bench;
use crate::check::{check_derivatives, CheckOptions};
use crate::cost::Curvature;
use crate::fddp::{solve, Settings, Status};
use crate::io::{export_plots, Trajectory};
use crate::robot::RobotParams;
use crate::tasks::{build_problem_with, initial_guess, resolve_task, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_DERIVATIVES: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "centroidal-to",
    version,
    about = "Quadruped trajectory optimisation with full-centroidal dynamics"
)]
pub struct Cli {
    /// Robot description (TOML); the builtin quadruped when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub robot: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a task and write trajectory.csv, trace.jsonl and summary.json.
    Solve(SolveArgs),
    /// Compare every analytic derivative with finite differences.
    CheckDerivatives(CheckArgs),
    /// Time the discrete dynamics and its derivatives.
    Bench(BenchArgs),
    /// Write per-quantity CSV series from a solved trajectory.
    ExportPlots(ExportArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Builtin task (standing, lemniscate, squat_jump, rotational_jump) or a
    /// task file.
    #[arg(long, value_name = "NAME|PATH")]
    pub task: String,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub max_iter: usize,
    /// Evaluate knot derivatives on the thread pool.
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, value_name = "TOL", default_value_t = 1e-6)]
    pub stop_tol: f64,
    #[arg(long, value_name = "TOL", default_value_t = 1e-9)]
    pub gap_tol: f64,
    #[arg(long, value_name = "MU", default_value_t = 1e-9)]
    pub reg_min: f64,
    #[arg(long, value_name = "MU", default_value_t = 1e9)]
    pub reg_max: f64,
    /// Print one line per iteration.
    #[arg(long)]
    pub verbose: bool,
    #[arg(long, hide = true)]
    pub flip_curvature: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Also write the report as JSON into this directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub flip_curvature: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Also write the report as JSON into this directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Directory holding trajectory.csv; plot series are written next to it.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Trajectory to read instead of `<out>/trajectory.csv`.
    #[arg(long, value_name = "PATH")]
    pub trajectory: Option<PathBuf>,
}

/// Outcome of `solve`, written to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub task: String,
    pub status: Status,
    pub iterations: usize,
    pub cost: f64,
    pub gap_norm: f64,
    pub stop_metric: f64,
    pub wall_time_s: f64,
    pub knots: usize,
    pub dt: f64,
    pub report: Report,
}

struct Failure(i32, String);

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure(EXIT_INPUT, e.to_string())
}

fn load_robot(path: Option<&Path>) -> Result<RobotParams, Failure> {
    match path {
        Some(p) => RobotParams::from_file(p).map_err(input),
        None => Ok(RobotParams::default_quadruped()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure(EXIT_INPUT, format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialises") + "\n"
}

fn cmd_solve(robot: Option<&Path>, args: &SolveArgs) -> Result<i32, Failure> {
    let params = load_robot(robot)?;
    let spec = resolve_task(&args.task, &params).map_err(input)?;
    let curvature = if args.flip_curvature {
        Curvature::Flipped
    } else {
        Curvature::Exact
    };
    let problem = build_problem_with(&params, &spec, curvature).map_err(input)?;
    create_dir(&args.out)?;
    let settings = Settings {
        max_iterations: args.max_iter,
        stop_threshold: args.stop_tol,
        gap_threshold: args.gap_tol,
        reg_init: args.reg_min,
        reg_min: args.reg_min,
        reg_max: args.reg_max,
        parallel: args.parallel,
        ..Settings::default()
    };
    let (xs, us) = initial_guess(&problem);
    let start = Instant::now();
    let (solution, trace) =
        solve(&problem, xs, us, &settings).map_err(|e| Failure(EXIT_NOT_CONVERGED, format!("solver failed: {e}")))?;
    let wall_time_s = start.elapsed().as_secs_f64();
    if args.verbose {
        for r in &trace.records {
            println!(
                "{:4}  cost {:.6e}  dJ {:.3e}  alpha {:.4}  mu {:.0e}  gap {:.2e}",
                r.iter, r.cost, r.expected_improvement, r.alpha, r.reg, r.gap_norm
            );
        }
    }

    let schedule = spec.schedule().map_err(input)?;
    let summary = Summary {
        task: spec.name.clone(),
        status: solution.status,
        iterations: solution.iterations,
        cost: solution.cost,
        gap_norm: solution.gap_norm,
        stop_metric: solution.stop_metric,
        wall_time_s,
        knots: problem.horizon(),
        dt: spec.dt,
        report: Report::new(&problem, &schedule, &solution.xs, &solution.us),
    };
    Trajectory::new(spec.dt, solution.xs, &solution.us)
        .write_csv(&args.out.join("trajectory.csv"), &params)
        .map_err(input)?;
    write_file(&args.out.join("trace.jsonl"), &trace.to_jsonl())?;
    write_file(&args.out.join("summary.json"), &to_json(&summary))?;
    println!(
        "{}: {:?} after {} iterations, cost {:.6e}, gap {:.1e}, {:.2} s",
        summary.task, summary.status, summary.iterations, summary.cost, summary.gap_norm, wall_time_s
    );
    Ok(if summary.status == Status::Converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn cmd_check(robot: Option<&Path>, args: &CheckArgs) -> Result<i32, Failure> {
    let params = load_robot(robot)?;
    let options = CheckOptions {
        seed: args.seed,
        samples: args.samples,
        curvature: if args.flip_curvature {
            Curvature::Flipped
        } else {
            Curvature::Exact
        },
    };
    let report = check_derivatives(&params, &options);
    print!("{report}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("derivatives.json"), &to_json(&report))?;
    }
    if report.passed() {
        Ok(EXIT_OK)
    } else {
        eprintln!("failing families: {}", report.failing().join(", "));
        Ok(EXIT_DERIVATIVES)
    }
}

fn cmd_bench(robot: Option<&Path>, args: &BenchArgs) -> Result<i32, Failure> {
    let params = load_robot(robot)?;
    if args.samples == 0 {
        return Err(input("--samples must be positive"));
    }
    let report = bench(&params, args.seed, args.samples, args.dt);
    println!("{report}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("bench.json"), &to_json(&report))?;
    }
    Ok(EXIT_OK)
}

fn cmd_export(args: &ExportArgs) -> Result<i32, Failure> {
    let source = args
        .trajectory
        .clone()
        .unwrap_or_else(|| args.out.join("trajectory.csv"));
    let trajectory = Trajectory::read_csv(&source).map_err(input)?;
    create_dir(&args.out)?;
    for p in export_plots(&trajectory, &args.out).map_err(input)? {
        println!("{}", p.display());
    }
    Ok(EXIT_OK)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let robot = cli.robot.as_deref();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(robot, a),
        Command::CheckDerivatives(a) => cmd_check(robot, a),
        Command::Bench(a) => cmd_bench(robot, a),
        Command::ExportPlots(a) => cmd_export(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            code
        }
    }
}

/// Entry point of the binary. Usage errors exit with 1, not clap's 2.
pub fn main() -> std::process::ExitCode {
    let code = match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_OK
            }
        }
    };
    std::process::ExitCode::from(code as u8)
}
