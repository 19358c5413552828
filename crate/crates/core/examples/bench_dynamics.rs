//! Timing of the discrete dynamics and of its analytic derivatives.
//!
//! ```text
//! cargo run --release --example bench_dynamics -- 5000
//! ```

use centroidal_to::bench::bench;
use centroidal_to::robot::RobotParams;

fn main() {
    let samples = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let report = bench(&RobotParams::default_quadruped(), 0, samples, 0.01);
    println!("{report}");
}
