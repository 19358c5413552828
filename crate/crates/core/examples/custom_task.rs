//! Describing a task in TOML and solving it: a sideways body sway followed
//! by lifting the diagonal leg pairs in turn.
//!
//! ```text
//! cargo run --release --example custom_task
//! ```

use std::path::Path;

use centroidal_to::fddp::{solve, Settings};
use centroidal_to::robot::RobotParams;
use centroidal_to::tasks::{build_problem, initial_guess, parse_task, Report};

const TASK: &str = r#"
[task]
name = "sway_and_step"
duration = 2.0
dt = 0.01

[[phases]]
name = "sway"
duration = 1.0
stance = [true, true, true, true]

[[phases]]
name = "lift_lf_rh"
duration = 0.2
stance = [false, true, true, false]

[[phases]]
name = "lift_lh_rf"
duration = 0.2
stance = [true, false, false, true]

[[phases]]
name = "settle"
duration = 0.6
stance = [true, true, true, true]

[[references]]
component = "base_y"
value = 0.0
amplitude = 0.05
period = 1.0
weight = 100.0
phases = ["sway"]

[[references]]
component = "feet_z"
value = 0.06
weight = 1000.0
phases = ["lift_lf_rh", "lift_lh_rf"]

[[references]]
component = "base_z"
value = 0.52
weight = 1000.0

[weights]
orientation = [100.0, 100.0, 10.0]
linear_velocity = 1.0
angular_velocity = 1.0
feet = [100.0, 100.0, 1000.0]
force = 1e-5
foot_velocity = 1e-2
kinematic = 1e4
friction = 1e3
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RobotParams::default_quadruped();
    let spec = parse_task(TASK, Path::new("sway_and_step.toml"), &params)?;
    let problem = build_problem(&params, &spec)?;
    let (xs, us) = initial_guess(&problem);
    let (solution, _) = solve(&problem, xs, us, &Settings::default())?;
    println!(
        "{:?} after {} iterations, cost {:.4e}",
        solution.status, solution.iterations, solution.cost
    );
    let report = Report::new(&problem, &spec.schedule()?, &solution.xs, &solution.us);
    println!(
        "largest swing force {:.1e} N, stance drift {:.1e} m, friction penalty {:.1e}",
        report.max_swing_force, report.max_stance_drift, report.max_friction_penalty
    );
    let lift = solution.xs.iter().flat_map(|x| x.feet.map(|r| r.z)).fold(0.0, f64::max);
    println!("highest swing foot {lift:.3} m");
    let sway = solution.xs.iter().map(|x| x.pose.position.y.abs()).fold(0.0, f64::max);
    println!("largest lateral sway {sway:.3} m");
    Ok(())
}
