//! Composite rigid-body inertia and centre of mass as functions of the leg
//! configuration, with exact derivatives.
//!
//! Each link inertia is rotated into the base frame and shifted with the
//! parallel-axis theorem; legs are independent, so their contributions are
//! computed separately and then reduced in LF, LH, RF, RH order.

use nalgebra::{Matrix3, SMatrix, Vector3};
use rayon::prelude::*;

use super::kinematics::{JointConfiguration, LegFrames};
use super::params::{LegParams, Link, RobotParams};

/// Composite inertia about the CoM and CoM position, both in the base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct InertiaResult {
    pub inertia: Matrix3<f64>,
    pub com: Vector3<f64>,
    /// `∂I/∂q_j`, one 3×3 slice per joint.
    pub d_inertia: [Matrix3<f64>; 12],
    /// `∂com/∂q`.
    pub d_com: SMatrix<f64, 3, 12>,
}

/// `|c|² I - c cᵀ`: parallel-axis shift per unit mass.
fn shift(c: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() * c.norm_squared() - c * c.transpose()
}

fn shift_derivative(c: &Vector3<f64>, dc: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() * (2.0 * c.dot(dc)) - dc * c.transpose() - c * dc.transpose()
}

/// Mass moments of one leg about the base origin.
#[derive(Debug, Clone, Copy)]
pub struct LegMoments {
    pub mass: f64,
    /// `Σ m c`
    pub first: Vector3<f64>,
    /// `Σ (R I Rᵀ + m S(c))`
    pub second: Matrix3<f64>,
    pub d_first: [Vector3<f64>; 3],
    pub d_second: [Matrix3<f64>; 3],
}

pub fn leg_moments(leg: &LegParams, q: [f64; 3]) -> LegMoments {
    let frames = LegFrames::new(leg, q);
    let mut out = LegMoments {
        mass: 0.0,
        first: Vector3::zeros(),
        second: Matrix3::zeros(),
        d_first: [Vector3::zeros(); 3],
        d_second: [Matrix3::zeros(); 3],
    };
    for (k, link) in leg.links.iter().enumerate() {
        let rot = frames.rotations[k];
        let c = frames.origins[k] + rot * link.com;
        let rotated = rot * link.inertia * rot.transpose();
        out.mass += link.mass;
        out.first += link.mass * c;
        out.second += rotated + link.mass * shift(&c);
        // Joints up to and including k move link k.
        for j in 0..=k {
            let axis = frames.axes[j];
            let dc = axis.cross(&(c - frames.origins[j]));
            let a = nalgebra::Matrix3::new(0.0, -axis.z, axis.y, axis.z, 0.0, -axis.x, -axis.y, axis.x, 0.0);
            let d_rot = a * rotated - rotated * a;
            out.d_first[j] += link.mass * dc;
            out.d_second[j] += d_rot + link.mass * shift_derivative(&c, &dc);
        }
    }
    out
}

fn reduce(base: &Link, legs: &[LegMoments; 4]) -> InertiaResult {
    let mut mass = base.mass;
    let mut first = base.mass * base.com;
    let mut second = base.inertia + base.mass * shift(&base.com);
    for l in legs {
        mass += l.mass;
        first += l.first;
        second += l.second;
    }
    let com = first / mass;
    let inertia = second - mass * shift(&com);
    let mut d_com = SMatrix::<f64, 3, 12>::zeros();
    let mut d_inertia = [Matrix3::zeros(); 12];
    for (leg, l) in legs.iter().enumerate() {
        for j in 0..3 {
            let dc = l.d_first[j] / mass;
            d_com.set_column(3 * leg + j, &dc);
            d_inertia[3 * leg + j] = l.d_second[j] - mass * shift_derivative(&com, &dc);
        }
    }
    InertiaResult {
        inertia: 0.5 * (inertia + inertia.transpose()),
        com,
        d_inertia,
        d_com,
    }
}

pub fn composite_inertia(params: &RobotParams, q: &JointConfiguration) -> InertiaResult {
    let legs = std::array::from_fn(|i| leg_moments(&params.legs[i], q.leg(i)));
    reduce(&params.base, &legs)
}

/// Same as [`composite_inertia`] with the four legs evaluated on the rayon
/// pool. The reduction order is fixed, so results are bitwise identical.
pub fn composite_inertia_parallel(params: &RobotParams, q: &JointConfiguration) -> InertiaResult {
    let legs: Vec<LegMoments> = (0..4)
        .into_par_iter()
        .map(|i| leg_moments(&params.legs[i], q.leg(i)))
        .collect();
    reduce(&params.base, &[legs[0], legs[1], legs[2], legs[3]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{Pose, State};
    use crate::robot::{implicit_configuration, nominal_stance};

    #[test]
    fn symmetric_stance_has_no_lateral_products() {
        let p = RobotParams::default_quadruped();
        let x: State = nominal_stance(&p, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.52), 0.0));
        let q = implicit_configuration(&p, &x);
        let r = composite_inertia(&p, &q);
        assert!(r.com.y.abs() < 1e-15);
        assert!(r.com.x.abs() < 1e-12, "{}", r.com.x);
        assert!(r.inertia[(0, 1)].abs() < 1e-12);
        assert!(r.inertia[(1, 2)].abs() < 1e-12);
    }

    #[test]
    fn parallel_reduction_is_bitwise_identical() {
        let p = RobotParams::default_quadruped();
        let q = JointConfiguration([0.1, 0.7, -1.2, -0.05, -0.6, 1.1, 0.2, 0.8, -1.4, 0.0, -0.9, 1.3]);
        assert_eq!(composite_inertia(&p, &q), composite_inertia_parallel(&p, &q));
    }
}
