//! Integration and difference on the state manifold, and the curvature of
//! a tracking cost under large orientation errors.
//!
//! ```text
//! cargo run --example manifold_calculus
//! ```

use centroidal_to::check::{fd_state, relative_error};
use centroidal_to::cost::{state_cost_with, Curvature};
use centroidal_to::manifold::{difference, exp_so3, integrate, Pose, State, Tangent, TangentVector};
use centroidal_to::robot::{nominal_stance, RobotParams};
use nalgebra::Vector3;

fn main() {
    let params = RobotParams::default_quadruped();
    let x = nominal_stance(&params, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.52), 0.0));

    let mut dx = TangentVector::zeros();
    dx[0] = 0.3; // forward, in the base frame
    dx[5] = 1.2; // yaw
    let moved = integrate(&x, &Tangent(dx));
    let back = difference(&x, &moved);
    println!("x ⊕ δ moves the base to {:.4?}", moved.pose.position.as_slice());
    println!("yaw after the step: {:.4} rad", moved.pose.yaw());
    println!("x ⊕ δ ⊖ x recovers δ to {:.1e}", (back.0 + dx).amax());

    // Orientation tracking cost against references turned further and
    // further away: how well each Hessian matches differences of the exact
    // gradient (symmetrised, as perturbations compose on the right).
    let mut q = TangentVector::zeros();
    q.fixed_rows_mut::<3>(3).fill(1.0);
    for angle in [0.1, 0.5, 1.0, 2.0] {
        let mut x_ref: State = moved;
        x_ref.pose = Pose::new(
            moved.pose.position,
            moved.pose.orientation() * exp_so3(&(Vector3::new(0.6, -0.3, 0.74) * angle)),
        );
        let fd = fd_state(&moved, 1e-6, |y| state_cost_with(&x_ref, y, &q, Curvature::Exact).lx);
        let fd = 0.5 * (fd + fd.transpose());
        let error = |c| relative_error(&state_cost_with(&x_ref, &moved, &q, c).lxx, &fd);
        println!(
            "residual {angle:.1} rad: Hessian error exact {:.1e}, Gauss-Newton {:.1e}",
            error(Curvature::Exact),
            error(Curvature::GaussNewton)
        );
    }
}
