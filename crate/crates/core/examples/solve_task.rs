//! Solve a builtin task or task file and print a summary.
//!
//! ```text
//! cargo run --release --example solve_task -- squat_jump
//! ```

use centroidal_to::fddp::{solve, Settings};
use centroidal_to::robot::RobotParams;
use centroidal_to::tasks::{build_problem, initial_guess, resolve_task, Report};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "squat_jump".into());
    let params = RobotParams::default_quadruped();
    let spec = resolve_task(&name, &params)?;
    let problem = build_problem(&params, &spec)?;
    let (xs, us) = initial_guess(&problem);
    let start = std::time::Instant::now();
    let (solution, trace) = solve(&problem, xs, us, &Settings::default())?;
    for r in &trace.records {
        println!(
            "{:3}  cost {:12.6e}  dJ {:10.3e}  alpha {:.4}  reg {:.1e}  gap {:.2e}",
            r.iter, r.cost, r.expected_improvement, r.alpha, r.reg, r.gap_norm
        );
    }
    println!(
        "{:?} after {} iterations in {:.1} s, cost {:.6e}",
        solution.status,
        solution.iterations,
        start.elapsed().as_secs_f64(),
        solution.cost
    );
    let report = Report::new(&problem, &spec.schedule()?, &solution.xs, &solution.us);
    println!("{report:#?}");
    Ok(())
}
