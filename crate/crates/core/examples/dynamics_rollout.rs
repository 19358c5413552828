//! Rolling the discrete full-centroidal dynamics forward: a push from the
//! ground followed by a ballistic flight.
//!
//! ```text
//! cargo run --example dynamics_rollout
//! ```

use centroidal_to::centroidal::{step, Control};
use centroidal_to::manifold::Pose;
use centroidal_to::robot::{nominal_stance, RobotParams};
use nalgebra::Vector3;

fn main() {
    let params = RobotParams::default_quadruped();
    let mut x = nominal_stance(&params, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.45), 0.0));
    let dt = 0.01;
    let weight = params.mass() * params.gravity.norm();

    // Push with twice the body weight, slightly asymmetric to induce a spin.
    let mut push = Control::zeros();
    for leg in 0..4 {
        let lateral = if leg < 2 { 4.0 } else { -4.0 };
        push.set_force(leg, Vector3::new(lateral, 0.0, 0.5 * weight));
    }
    for _ in 0..20 {
        x = step(&params, &x, &push, dt);
    }
    println!(
        "after push: height {:.4} m, vertical speed {:.4} m/s",
        x.pose.position.z, x.v.z
    );

    let mut k = 0;
    while x.pose.position.z > 0.45 && k < 200 {
        let before = x.pose.position.z;
        x = step(&params, &x, &Control::zeros(), dt);
        if x.pose.position.z < before && k % 5 == 0 {
            println!(
                "t = {:.2} s  height {:.4} m  yaw {:+.4} rad",
                0.2 + k as f64 * dt,
                x.pose.position.z,
                x.pose.yaw()
            );
        }
        k += 1;
    }
    println!("landed after {:.2} s of flight", k as f64 * dt);
}
