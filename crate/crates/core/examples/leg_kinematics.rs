//! Closed-form leg inverse kinematics, the joint configuration implied by a
//! state and the configuration-dependent composite inertia.
//!
//! ```text
//! cargo run --example leg_kinematics
//! ```

use centroidal_to::manifold::Pose;
use centroidal_to::robot::{
    composite_inertia, foot_in_hip, implicit_configuration, leg_fk, leg_ik, nominal_stance, LegId, RobotParams,
    LEG_NAMES,
};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RobotParams::default_quadruped();

    let target = Vector3::new(0.05, 0.08, -0.45);
    for leg in LegId::ALL {
        let q = leg_ik(&params, leg, &target)?;
        let err = (leg_fk(&params, leg, q) - target).norm();
        println!("{:?}: q = {:+.4?}, FK error {err:.1e} m", leg, q);
    }

    for height in [0.40, 0.52, 0.60] {
        let x = nominal_stance(&params, Pose::from_yaw(Vector3::new(0.0, 0.0, height), 0.0));
        let q = implicit_configuration(&params, &x);
        let inertia = composite_inertia(&params, &q);
        let (r, _) = foot_in_hip(&params, &x, 0);
        println!(
            "base at {height:.2} m: {} foot {:.3} m from hip, q = {:+.3?}",
            LEG_NAMES[0],
            r.norm(),
            q.leg(0)
        );
        println!(
            "  inertia diag {:.4?} kg m², CoM offset {:+.4?} m",
            inertia.inertia.diagonal().as_slice(),
            inertia.com.as_slice()
        );
    }
    Ok(())
}
