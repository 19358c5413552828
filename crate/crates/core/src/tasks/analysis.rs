//! Post-hoc measurements of a solved trajectory.

use nalgebra::{DVector, Quaternion, UnitQuaternion, Vector3};
use serde::Serialize;

use super::{CentroidalProblem, ContactPhase};
use crate::centroidal::{Control, ControlVector};
use crate::cost::{friction_penalty, kinematic_barrier};
use crate::manifold::{Pose, State};

/// Scalar summary of a solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub initial_height: f64,
    pub final_height: f64,
    /// Highest base position over flight knots.
    pub apex_height: Option<f64>,
    /// Lowest, over the feet, of each foot's highest point in flight.
    pub swing_clearance: Option<f64>,
    pub final_yaw: f64,
    /// Base yaw rate at the first knot after the last flight phase.
    pub touchdown_yaw_rate: Option<f64>,
    /// Largest force component on a swing leg.
    pub max_swing_force: f64,
    /// Largest displacement of a stance foot within one stance phase.
    pub max_stance_drift: f64,
    /// Largest distance of a stance foot from the ground plane.
    pub max_stance_foot_height: f64,
    /// Largest per-knot weighted friction penalty.
    pub max_friction_penalty: f64,
    /// Largest per-knot weighted kinematic penalty.
    pub max_kinematic_penalty: f64,
}

impl Report {
    pub fn new(problem: &CentroidalProblem, schedule: &[ContactPhase], xs: &[State], us: &[DVector<f64>]) -> Self {
        let control = |k: usize| Control(ControlVector::from_column_slice(us[k].as_slice()));
        let flight: Vec<&ContactPhase> = schedule.iter().filter(|p| p.is_flight()).collect();
        let flight_knots = || flight.iter().flat_map(|p| p.knots().chain(std::iter::once(p.end)));

        let apex_height = flight_knots().map(|k| xs[k].pose.position.z).reduce(f64::max);
        let swing_clearance = (!flight.is_empty()).then(|| {
            (0..4)
                .map(|leg| {
                    flight_knots()
                        .map(|k| xs[k].feet[leg].z)
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        });
        let touchdown_yaw_rate = flight.last().map(|p| {
            let x = &xs[p.end];
            (x.pose.rotation() * x.omega).z
        });

        let mut max_swing_force = 0.0f64;
        let mut max_stance_drift = 0.0f64;
        let mut max_stance_foot_height = 0.0f64;
        for phase in schedule {
            for leg in 0..4 {
                if phase.stance[leg] {
                    let r0 = xs[phase.start].feet[leg];
                    for k in phase.start..=phase.end {
                        max_stance_drift = max_stance_drift.max((xs[k].feet[leg] - r0).amax());
                        max_stance_foot_height = max_stance_foot_height.max(xs[k].feet[leg].z.abs());
                    }
                } else {
                    for k in phase.knots() {
                        max_swing_force = max_swing_force.max(control(k).force(leg).amax());
                    }
                }
            }
        }

        let mut max_friction_penalty = 0.0f64;
        let mut max_kinematic_penalty = 0.0f64;
        for (k, m) in problem.running.iter().enumerate() {
            let w = &m.weights;
            max_friction_penalty =
                max_friction_penalty.max(friction_penalty(&control(k), &m.stance, w.mu, w.friction).value);
            max_kinematic_penalty =
                max_kinematic_penalty.max(kinematic_barrier(&m.params, &xs[k], w.kinematic, w.kinematic_margin).value);
        }
        let t = &problem.terminal;
        let last = xs.last().expect("trajectory is non-empty");
        max_kinematic_penalty =
            max_kinematic_penalty.max(kinematic_barrier(&t.params, last, t.kinematic, t.kinematic_margin).value);

        Self {
            initial_height: xs[0].pose.position.z,
            final_height: last.pose.position.z,
            apex_height,
            swing_clearance,
            final_yaw: last.pose.yaw(),
            touchdown_yaw_rate,
            max_swing_force,
            max_stance_drift,
            max_stance_foot_height,
            max_friction_penalty,
            max_kinematic_penalty,
        }
    }
}

fn reflect(v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, -v.y, v.z)
}

fn reflect_axial(w: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(-w.x, w.y, -w.z)
}

/// Legs swap with their lateral partner: LF ↔ RF, LH ↔ RH.
const PARTNER: [usize; 4] = [2, 3, 0, 1];

/// Image of a state under reflection through the sagittal plane `y = 0`.
pub fn mirror_state(x: &State) -> State {
    let q = x.pose.orientation().quaternion();
    let axis = reflect_axial(&q.imag());
    let orientation = UnitQuaternion::new_unchecked(Quaternion::new(q.w, axis.x, axis.y, axis.z));
    State {
        pose: Pose::new(reflect(&x.pose.position), orientation),
        v: reflect(&x.v),
        omega: reflect_axial(&x.omega),
        feet: std::array::from_fn(|i| reflect(&x.feet[PARTNER[i]])),
    }
}

pub fn mirror_control(u: &Control) -> Control {
    let mut out = Control::zeros();
    for leg in 0..4 {
        out.set_force(leg, reflect(&u.force(PARTNER[leg])));
        out.set_foot_velocity(leg, reflect(&u.foot_velocity(PARTNER[leg])));
    }
    out
}
