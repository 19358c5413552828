//! Finite-difference verification of every analytic derivative, then the
//! same check against a deliberately broken state-cost Hessian.
//!
//! ```text
//! cargo run --release --example derivative_check -- 7
//! ```

use centroidal_to::check::{check_derivatives, CheckOptions};
use centroidal_to::cost::Curvature;
use centroidal_to::robot::RobotParams;

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let params = RobotParams::default_quadruped();
    let options = CheckOptions {
        seed,
        ..CheckOptions::default()
    };
    let report = check_derivatives(&params, &options);
    print!("{report}");

    let broken = check_derivatives(
        &params,
        &CheckOptions {
            curvature: Curvature::Flipped,
            ..options
        },
    );
    println!("with the curvature term flipped, failing: {:?}", broken.failing());
}
