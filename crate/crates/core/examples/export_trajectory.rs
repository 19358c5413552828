//! Solving a task, writing the trajectory CSV and the per-quantity plot
//! series, then reading the trajectory back.
//!
//! ```text
//! cargo run --release --example export_trajectory -- rotational_jump out/rot
//! ```

use std::path::PathBuf;

use centroidal_to::fddp::{solve, Settings};
use centroidal_to::io::{export_plots, Trajectory};
use centroidal_to::robot::RobotParams;
use centroidal_to::tasks::{build_problem, initial_guess, resolve_task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "rotational_jump".into());
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&dir)?;

    let params = RobotParams::default_quadruped();
    let spec = resolve_task(&name, &params)?;
    let problem = build_problem(&params, &spec)?;
    let (xs, us) = initial_guess(&problem);
    let (solution, _) = solve(&problem, xs, us, &Settings::default())?;

    let trajectory = Trajectory::new(spec.dt, solution.xs, &solution.us);
    let csv = dir.join("trajectory.csv");
    trajectory.write_csv(&csv, &params)?;
    println!("{}", csv.display());
    for path in export_plots(&trajectory, &dir)? {
        println!("{}", path.display());
    }
    let reread = Trajectory::read_csv(&csv)?;
    println!("round trip exact: {}", reread == trajectory);
    Ok(())
}
