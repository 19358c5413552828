//! Full-centroidal dynamics on the hybrid state manifold.
//!
//! The CoM obeys Newton's law in the world frame, the base rotates under the
//! configuration-dependent composite inertia, and the CoM acceleration is
//! projected onto the base origin:
//!
//! ```text
//! a_com = ΣF / m + g
//! ω̇     = I_B⁻¹ [ -ω × I_B ω + Σ (p_i - c_B) × Rᵀ F_i ]
//! v̇_b   = Rᵀ a_com + ω̇ × d + ω × (ω × d) - ω × v_b,     d = -c_B
//! ```
//!
//! Everything on the right is expressed in the base frame; `p_i` is foothold
//! `i` relative to the base origin and `c_B` the composite CoM. Discretisation
//! is symplectic Euler: velocities first, then the pose is integrated with the
//! updated twist.

use std::ops::AddAssign;

use nalgebra::{Matrix3, Matrix6, SMatrix, SVector, Vector3, Vector6};

use crate::manifold::{exp_se3, hat, se3, State, Tangent, TangentMatrix, NDX};
use crate::robot::{
    composite_inertia, configuration_jacobian, implicit_configuration, InertiaResult, RobotError, RobotParams,
};

/// Control dimension.
pub const NU: usize = 24;

pub type ControlVector = SVector<f64, NU>;
pub type ControlMatrix = SMatrix<f64, NDX, NU>;

/// Contact forces and foothold velocities, interleaved per leg as
/// `[F_i, ṙ_i]` at offset `6 i`. Both are world-frame quantities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control(pub ControlVector);

impl Control {
    pub fn zeros() -> Self {
        Self(ControlVector::zeros())
    }

    pub const fn force_index(leg: usize) -> usize {
        6 * leg
    }

    pub const fn velocity_index(leg: usize) -> usize {
        6 * leg + 3
    }

    pub fn force(&self, leg: usize) -> Vector3<f64> {
        self.0.fixed_rows::<3>(Self::force_index(leg)).into_owned()
    }

    pub fn foot_velocity(&self, leg: usize) -> Vector3<f64> {
        self.0.fixed_rows::<3>(Self::velocity_index(leg)).into_owned()
    }

    pub fn set_force(&mut self, leg: usize, f: Vector3<f64>) {
        self.0.fixed_rows_mut::<3>(Self::force_index(leg)).copy_from(&f);
    }

    pub fn set_foot_velocity(&mut self, leg: usize, v: Vector3<f64>) {
        self.0.fixed_rows_mut::<3>(Self::velocity_index(leg)).copy_from(&v);
    }

    pub fn total_force(&self) -> Vector3<f64> {
        (0..4).map(|i| self.force(i)).sum()
    }
}

/// Intermediate quantities of one dynamics evaluation.
#[derive(Debug, Clone)]
pub struct Accelerations {
    /// CoM acceleration in the world frame.
    pub com: Vector3<f64>,
    /// Base angular acceleration in the base frame.
    pub angular: Vector3<f64>,
    /// Base linear acceleration in the base frame.
    pub linear: Vector3<f64>,
    pub inertia: InertiaResult,
}

/// Footholds relative to the base origin, in the base frame.
fn relative_feet(x: &State) -> [Vector3<f64>; 4] {
    let rt = x.pose.rotation().transpose();
    x.feet.map(|r| rt * (r - x.pose.position))
}

pub fn accelerations(params: &RobotParams, x: &State, u: &Control) -> Accelerations {
    let inertia = composite_inertia(params, &implicit_configuration(params, x));
    accelerations_with(params, x, u, inertia)
}

fn accelerations_with(params: &RobotParams, x: &State, u: &Control, inertia: InertiaResult) -> Accelerations {
    let rt = x.pose.rotation().transpose();
    let com = u.total_force() / params.mass() + params.gravity;
    let c = inertia.com;
    let i_b = inertia.inertia;
    let w = x.omega;
    let feet = relative_feet(x);
    let mut torque = -w.cross(&(i_b * w));
    for (leg, p) in feet.iter().enumerate() {
        torque += (p - c).cross(&(rt * u.force(leg)));
    }
    let angular = i_b.cholesky().expect("composite inertia is SPD").solve(&torque);
    let d = -c;
    let linear = rt * com + angular.cross(&d) + w.cross(&w.cross(&d)) - w.cross(&x.v);
    Accelerations {
        com,
        angular,
        linear,
        inertia,
    }
}

/// `ẋ = f(x, u)` as a tangent-space rate `(v_b, ω, v̇_b, ω̇, ṙ)`.
pub fn continuous_dynamics(params: &RobotParams, x: &State, u: &Control) -> Tangent {
    let acc = accelerations(params, x, u);
    let mut pose = Vector6::zeros();
    pose.fixed_rows_mut::<3>(0).copy_from(&x.v);
    pose.fixed_rows_mut::<3>(3).copy_from(&x.omega);
    Tangent::from_parts(
        pose,
        acc.linear,
        acc.angular,
        std::array::from_fn(|i| u.foot_velocity(i)),
    )
}

fn advance(x: &State, u: &Control, acc: &Accelerations, dt: f64) -> (State, Vector6<f64>) {
    let v = x.v + dt * acc.linear;
    let omega = x.omega + dt * acc.angular;
    let mut xi = Vector6::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&(dt * v));
    xi.fixed_rows_mut::<3>(3).copy_from(&(dt * omega));
    let next = State {
        pose: x.pose.compose(&exp_se3(&xi)),
        v,
        omega,
        feet: std::array::from_fn(|i| x.feet[i] + dt * u.foot_velocity(i)),
    };
    (next, xi)
}

/// One symplectic Euler step.
pub fn step(params: &RobotParams, x: &State, u: &Control, dt: f64) -> State {
    advance(x, u, &accelerations(params, x, u), dt).0
}

/// Tangent-space Jacobians of [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsDerivatives {
    pub fx: TangentMatrix,
    pub fu: ControlMatrix,
}

/// Continuous accelerations and their tangent derivatives, rows
/// `(v̇_b, ω̇)`.
struct AccelerationJacobian {
    acc: Accelerations,
    dx: SMatrix<f64, 6, NDX>,
    du: SMatrix<f64, 6, NU>,
}

fn acceleration_jacobian(params: &RobotParams, x: &State, u: &Control) -> Result<AccelerationJacobian, RobotError> {
    let q = implicit_configuration(params, x);
    let jq = configuration_jacobian(params, x)?;
    let acc = accelerations_with(params, x, u, composite_inertia(params, &q));
    let inr = &acc.inertia;
    let rt = x.pose.rotation().transpose();
    let m = params.mass();
    let (i_b, c, w, v) = (inr.inertia, inr.com, x.omega, x.v);
    let i_inv = i_b.cholesky().expect("composite inertia is SPD").inverse();
    let feet = relative_feet(x);
    let forces: [Vector3<f64>; 4] = std::array::from_fn(|i| rt * u.force(i));

    let dc: SMatrix<f64, 3, NDX> = inr.d_com * jq;
    // Angular: h = -ω × Iω + Σ (p_i - c) × f_i, ω̇ = I⁻¹ h.
    let mut dh = SMatrix::<f64, 3, NDX>::zeros();
    let mut dh_u = SMatrix::<f64, 3, NU>::zeros();
    let iw = i_b * w;
    for col in 0..NDX {
        let mut di = Matrix3::zeros();
        for j in 0..12 {
            let s = jq[(j, col)];
            if s != 0.0 {
                di += s * inr.d_inertia[j];
            }
        }
        let d = -w.cross(&(di * w)) - di * acc.angular;
        dh.set_column(col, &d);
    }
    dh.fixed_view_mut::<3, 3>(0, 9).add_assign(&(-hat(&w) * i_b + hat(&iw)));
    for (leg, (p, f)) in feet.iter().zip(&forces).enumerate() {
        let arm = hat(&(p - c));
        let fh = hat(f);
        // p_i moves with -δp, rotates with δθ, translates with δr_i.
        dh.fixed_view_mut::<3, 3>(0, 0).add_assign(&fh);
        dh.fixed_view_mut::<3, 3>(0, 3).add_assign(&(-fh * hat(p) + arm * fh));
        dh.fixed_view_mut::<3, 3>(0, 12 + 3 * leg).add_assign(&(-fh * rt));
        dh += fh * dc;
        dh_u.fixed_view_mut::<3, 3>(0, Control::force_index(leg))
            .copy_from(&(arm * rt));
    }
    let dwdot = i_inv * dh;
    let dwdot_u = i_inv * dh_u;

    // Linear: v̇ = Rᵀa + ω̇ × d + ω × (ω × d) - ω × v, d = -c.
    let d = -c;
    let ra = rt * acc.com;
    let mut dv = SMatrix::<f64, 3, NDX>::zeros();
    dv.fixed_view_mut::<3, 3>(0, 3).copy_from(&hat(&ra));
    dv += -hat(&d) * dwdot;
    let d_d = -dc;
    dv += (hat(&acc.angular) + hat(&w) * hat(&w)) * d_d;
    let d_omega = w * d.transpose() + Matrix3::identity() * w.dot(&d) - 2.0 * d * w.transpose() + hat(&v);
    dv.fixed_view_mut::<3, 3>(0, 9).add_assign(&d_omega);
    dv.fixed_view_mut::<3, 3>(0, 6).add_assign(&(-hat(&w)));
    let mut dv_u = -hat(&d) * dwdot_u;
    for leg in 0..4 {
        dv_u.fixed_view_mut::<3, 3>(0, Control::force_index(leg))
            .add_assign(&(rt / m));
    }

    let mut dx = SMatrix::<f64, 6, NDX>::zeros();
    dx.fixed_view_mut::<3, NDX>(0, 0).copy_from(&dv);
    dx.fixed_view_mut::<3, NDX>(3, 0).copy_from(&dwdot);
    let mut du = SMatrix::<f64, 6, NU>::zeros();
    du.fixed_view_mut::<3, NU>(0, 0).copy_from(&dv_u);
    du.fixed_view_mut::<3, NU>(3, 0).copy_from(&dwdot_u);
    Ok(AccelerationJacobian { acc, dx, du })
}

/// Next state together with the analytic derivatives of [`step`].
pub fn step_with_derivatives(
    params: &RobotParams,
    x: &State,
    u: &Control,
    dt: f64,
) -> Result<(State, DynamicsDerivatives), RobotError> {
    let AccelerationJacobian { acc, dx, du } = acceleration_jacobian(params, x, u)?;
    let (next, xi) = advance(x, u, &acc, dt);

    // Velocity rows of the discrete map.
    let mut dvel_x = dt * dx;
    dvel_x.fixed_view_mut::<6, 6>(0, 6).add_assign(&Matrix6::identity());
    let dvel_u = dt * du;

    let ad_inv = exp_se3(&xi).inverse().adjoint();
    let jr = dt * se3::right_jacobian_se3(&xi);

    let mut fx = TangentMatrix::identity();
    fx.fixed_view_mut::<6, 6>(0, 0).copy_from(&ad_inv);
    fx.fixed_view_mut::<6, NDX>(0, 0).add_assign(&(jr * dvel_x));
    fx.fixed_view_mut::<6, NDX>(6, 0).copy_from(&dvel_x);

    let mut fu = ControlMatrix::zeros();
    fu.fixed_view_mut::<6, NU>(0, 0).copy_from(&(jr * dvel_u));
    fu.fixed_view_mut::<6, NU>(6, 0).copy_from(&dvel_u);
    for leg in 0..4 {
        fu.fixed_view_mut::<3, 3>(12 + 3 * leg, Control::velocity_index(leg))
            .copy_from(&(dt * Matrix3::identity()));
    }
    Ok((next, DynamicsDerivatives { fx, fu }))
}

pub fn step_derivatives(
    params: &RobotParams,
    x: &State,
    u: &Control,
    dt: f64,
) -> Result<DynamicsDerivatives, RobotError> {
    step_with_derivatives(params, x, u, dt).map(|(_, d)| d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Pose;
    use crate::robot::nominal_stance;

    fn standing(params: &RobotParams) -> State {
        nominal_stance(params, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.52), 0.0))
    }

    #[test]
    fn free_fall_from_rest() {
        let p = RobotParams::default_quadruped();
        let x = standing(&p);
        let acc = accelerations(&p, &x, &Control::zeros());
        assert_eq!(acc.com, p.gravity);
        assert!(acc.angular.norm() < 1e-15);
    }

    #[test]
    fn foothold_rows_pass_velocity_through() {
        let p = RobotParams::default_quadruped();
        let x = standing(&p);
        let d = step_derivatives(&p, &x, &Control::zeros(), 0.01).unwrap();
        for leg in 0..4 {
            let block = d.fu.fixed_view::<3, 3>(12 + 3 * leg, Control::velocity_index(leg));
            assert_eq!(block.into_owned(), 0.01 * Matrix3::identity());
        }
    }

    #[test]
    fn swing_force_columns_only_touch_velocities() {
        let p = RobotParams::default_quadruped();
        let x = standing(&p);
        let d = step_derivatives(&p, &x, &Control::zeros(), 0.01).unwrap();
        for leg in 0..4 {
            let cols = d.fu.fixed_columns::<3>(Control::force_index(leg));
            assert!(cols.fixed_rows::<12>(12).iter().all(|v| *v == 0.0));
        }
    }
}
