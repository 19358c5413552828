//! Quadruped model: parameters, leg kinematics and configuration-dependent
//! composite inertia.

mod inertia;
mod kinematics;
mod params;

pub use inertia::{composite_inertia, composite_inertia_parallel, leg_moments, InertiaResult, LegMoments};
pub use kinematics::{
    configuration_jacobian, foot_in_hip, implicit_configuration, leg_fk, leg_fk_jacobian, leg_ik, normalise_workspace,
    ConfigurationJacobian, JointConfiguration, LegFrames,
};
pub(crate) use params::{find_key_line, line_of};
pub use params::{JointLimits, KneeBranch, LegId, LegParams, Link, RobotParams, Workspace, DEFAULT_ROBOT, LEG_NAMES};

use nalgebra::Vector3;

use crate::manifold::{Pose, State};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobotError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}:{line}: invalid `{key}`: {message}")]
    Invalid {
        path: String,
        line: usize,
        key: String,
        message: String,
    },
    #[error("leg {leg}: foot at distance {distance:.4} m is outside the reachable workspace")]
    Unreachable { leg: usize, distance: f64 },
    #[error("leg {leg}: kinematic Jacobian is singular (condition number {condition:.3e})")]
    Singular { leg: usize, condition: f64 },
}

/// Nominal footholds in the base frame: directly below each HFE joint on the
/// ground plane `z = -height`.
pub fn nominal_feet_base(params: &RobotParams, height: f64) -> [Vector3<f64>; 4] {
    std::array::from_fn(|i| {
        let l = &params.legs[i];
        Vector3::new(l.hip.x, l.hip.y + l.lateral_offset, -height)
    })
}

/// Resting state at `pose` with the feet below the hips on the plane `z = 0`.
pub fn nominal_stance(params: &RobotParams, pose: Pose) -> State {
    let height = pose.position.z;
    let feet = nominal_feet_base(params, height).map(|f| {
        let mut w = pose.orientation() * Vector3::new(f.x, f.y, 0.0) + pose.position;
        w.z = 0.0;
        w
    });
    State::standing(pose, feet)
}
