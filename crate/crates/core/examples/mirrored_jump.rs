//! Sagittal symmetry: the rotational jump turned the other way is the
//! mirror image of the original solution.
//!
//! ```text
//! cargo run --release --example mirrored_jump
//! ```

use centroidal_to::fddp::{solve, Settings};
use centroidal_to::robot::RobotParams;
use centroidal_to::tasks::{build_problem, initial_guess, mirror_state, rotational_jump_task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RobotParams::default_quadruped();
    let left = rotational_jump_task(&params);
    let right = left.mirrored();
    let mut solutions = Vec::new();
    for spec in [&left, &right] {
        let problem = build_problem(&params, spec)?;
        let (xs, us) = initial_guess(&problem);
        let (solution, _) = solve(&problem, xs, us, &Settings::default())?;
        println!(
            "{:?} after {} iterations, final yaw {:+.2} deg",
            solution.status,
            solution.iterations,
            solution.xs.last().unwrap().pose.yaw().to_degrees()
        );
        solutions.push(solution);
    }
    let worst = solutions[0]
        .xs
        .iter()
        .zip(&solutions[1].xs)
        .map(|(a, b)| (mirror_state(a).pose.position - b.pose.position).amax())
        .fold(0.0, f64::max);
    println!("largest base position mismatch against the mirror image: {worst:.1e} m");
    Ok(())
}
