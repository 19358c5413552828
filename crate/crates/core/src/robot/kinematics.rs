//! Closed-form leg kinematics and the implicit joint configuration.
//!
//! Each leg is an HAA (about base x), HFE and KFE (both about the rotated
//! y axis) chain. Positions are expressed in the base frame, relative to the
//! HAA joint origin unless stated otherwise.

use nalgebra::{Matrix3, Rotation3, SMatrix, Vector3};

use super::params::{LegId, LegParams, RobotParams};
use super::RobotError;
use crate::manifold::{hat, State, NDX};

/// Joint angles, `(HAA, HFE, KFE)` per leg, legs ordered LF, LH, RF, RH.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointConfiguration(pub [f64; 12]);

impl JointConfiguration {
    pub fn leg(&self, leg: usize) -> [f64; 3] {
        [self.0[3 * leg], self.0[3 * leg + 1], self.0[3 * leg + 2]]
    }

    pub fn set_leg(&mut self, leg: usize, q: [f64; 3]) {
        self.0[3 * leg..3 * leg + 3].copy_from_slice(&q);
    }

    pub fn within_limits(&self, params: &RobotParams) -> bool {
        self.0.iter().enumerate().all(|(i, q)| {
            let j = i % 3;
            *q >= params.limits.lower[j] && *q <= params.limits.upper[j]
        })
    }
}

/// Joint frames of one leg in the base frame.
#[derive(Debug, Clone, Copy)]
pub struct LegFrames {
    /// Link rotations for hip, thigh and shank.
    pub rotations: [Matrix3<f64>; 3],
    /// Joint origins (HAA, HFE, KFE) in the base frame.
    pub origins: [Vector3<f64>; 3],
    /// Joint axes in the base frame.
    pub axes: [Vector3<f64>; 3],
    pub foot: Vector3<f64>,
}

impl LegFrames {
    pub fn new(leg: &LegParams, q: [f64; 3]) -> Self {
        let r0 = *Rotation3::from_axis_angle(&Vector3::x_axis(), q[0]).matrix();
        let r1 = r0 * Rotation3::from_axis_angle(&Vector3::y_axis(), q[1]).matrix();
        let r2 = r1 * Rotation3::from_axis_angle(&Vector3::y_axis(), q[2]).matrix();
        let o0 = leg.hip;
        let o1 = o0 + r0 * Vector3::new(0.0, leg.lateral_offset, 0.0);
        let o2 = o1 + r1 * Vector3::new(0.0, 0.0, -leg.thigh);
        let foot = o2 + r2 * Vector3::new(0.0, 0.0, -leg.shank);
        let a1 = r0 * Vector3::y();
        Self {
            rotations: [r0, r1, r2],
            origins: [o0, o1, o2],
            axes: [Vector3::x(), a1, a1],
            foot,
        }
    }

    /// `∂foot/∂q` in the base frame.
    pub fn jacobian(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&std::array::from_fn::<_, 3, _>(|j| {
            self.axes[j].cross(&(self.foot - self.origins[j]))
        }))
    }
}

/// Foot position relative to the hip for joint angles `q`.
pub fn leg_fk(params: &RobotParams, leg: LegId, q: [f64; 3]) -> Vector3<f64> {
    let l = params.leg(leg);
    LegFrames::new(l, q).foot - l.hip
}

/// Analytic `∂(leg_fk)/∂q`.
pub fn leg_fk_jacobian(params: &RobotParams, leg: LegId, q: [f64; 3]) -> Matrix3<f64> {
    LegFrames::new(params.leg(leg), q).jacobian()
}

const REACH_TOLERANCE: f64 = 1e-9;

/// Closed-form inverse kinematics for a foot position relative to the hip.
pub fn leg_ik(params: &RobotParams, leg: LegId, r_hip: &Vector3<f64>) -> Result<[f64; 3], RobotError> {
    let w = params.workspace;
    let l = params.leg(leg);
    let dist = r_hip.norm();
    let frontal = r_hip.y * r_hip.y + r_hip.z * r_hip.z - l.lateral_offset * l.lateral_offset;
    if dist < w.r_min - REACH_TOLERANCE || dist > w.r_max + REACH_TOLERANCE || frontal < -REACH_TOLERANCE {
        return Err(RobotError::Unreachable {
            leg: leg.index(),
            distance: dist,
        });
    }
    Ok(solve_ik(l, r_hip))
}

/// IK that never fails: the radicands are clamped at the reach boundaries.
fn solve_ik(l: &LegParams, p: &Vector3<f64>) -> [f64; 3] {
    let d = l.lateral_offset;
    let z = -(p.y * p.y + p.z * p.z - d * d).max(0.0).sqrt();
    let haa = wrap(p.z.atan2(p.y) - z.atan2(d));
    // Planar two-link problem in the rotated sagittal plane.
    let (x_fwd, z_down) = (-p.x, -z);
    let (l1, l2) = (l.thigh, l.shank);
    let cos_knee = ((x_fwd * x_fwd + z_down * z_down - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let kfe = l.knee.sign() * cos_knee.acos();
    let hfe = x_fwd.atan2(z_down) - (l2 * kfe.sin()).atan2(l1 + l2 * kfe.cos());
    [haa, wrap(hfe), kfe]
}

fn wrap(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut a = a % two_pi;
    if a > std::f64::consts::PI {
        a -= two_pi;
    } else if a <= -std::f64::consts::PI {
        a += two_pi;
    }
    a
}

/// Radial projection into `[r_min + ε, r_max - ε]`.
pub fn normalise_workspace(params: &RobotParams, r_hip: &Vector3<f64>) -> Vector3<f64> {
    normalise_with_jacobian(params, r_hip).0
}

fn normalise_with_jacobian(params: &RobotParams, p: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
    let w = params.workspace;
    let (lo, hi) = (w.r_min + w.margin, w.r_max - w.margin);
    let n = p.norm();
    if n >= lo && n <= hi {
        return (*p, Matrix3::identity());
    }
    let target = if n > hi { hi } else { lo };
    if n == 0.0 {
        return (Vector3::new(0.0, 0.0, -target), Matrix3::zeros());
    }
    let u = p / n;
    (u * target, target / n * (Matrix3::identity() - u * u.transpose()))
}

/// Foot position of `leg` relative to its hip for state `x`, before normalisation,
/// together with the foot in the base frame.
pub fn foot_in_hip(params: &RobotParams, x: &State, leg: usize) -> (Vector3<f64>, Vector3<f64>) {
    let rt = x.pose.orientation().inverse();
    let p_rel = rt * (x.feet[leg] - x.pose.position);
    (p_rel - params.legs[leg].hip, p_rel)
}

/// `q_cfg = IK(x)`: footholds mapped into each hip frame, normalised, then
/// solved in closed form.
pub fn implicit_configuration(params: &RobotParams, x: &State) -> JointConfiguration {
    let mut q = JointConfiguration::default();
    for leg in 0..4 {
        let (p, _) = foot_in_hip(params, x, leg);
        let pn = normalise_workspace(params, &p);
        q.set_leg(leg, solve_ik(&params.legs[leg], &pn));
    }
    q
}

pub type ConfigurationJacobian = SMatrix<f64, 12, NDX>;

const MAX_CONDITION: f64 = 1e8;

/// Tangent-space derivative `Dq_cfg/Dx` of [`implicit_configuration`].
pub fn configuration_jacobian(params: &RobotParams, x: &State) -> Result<ConfigurationJacobian, RobotError> {
    let rt = x.pose.rotation().transpose();
    let mut jac = ConfigurationJacobian::zeros();
    for leg in 0..4 {
        let (p, p_rel) = foot_in_hip(params, x, leg);
        let (pn, dn) = normalise_with_jacobian(params, &p);
        let q = solve_ik(&params.legs[leg], &pn);
        let j_fk = LegFrames::new(&params.legs[leg], q).jacobian();
        let svd = j_fk.svd(false, false);
        let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
        if smin <= 0.0 || smax / smin > MAX_CONDITION {
            return Err(RobotError::Singular {
                leg,
                condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            });
        }
        let j_inv = j_fk.try_inverse().ok_or(RobotError::Singular {
            leg,
            condition: f64::INFINITY,
        })?;
        let dq_dp = j_inv * dn;
        let rows = 3 * leg;
        jac.fixed_view_mut::<3, 3>(rows, 0).copy_from(&(-dq_dp));
        jac.fixed_view_mut::<3, 3>(rows, 3).copy_from(&(dq_dp * hat(&p_rel)));
        jac.fixed_view_mut::<3, 3>(rows, 12 + 3 * leg).copy_from(&(dq_dp * rt));
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> RobotParams {
        RobotParams::default_quadruped()
    }

    #[test]
    fn zero_angles_sum_link_offsets() {
        let p = params();
        for leg in LegId::ALL {
            let l = p.leg(leg);
            let foot = leg_fk(&p, leg, [0.0; 3]);
            assert_relative_eq!(
                foot,
                Vector3::new(0.0, l.lateral_offset, -(l.thigh + l.shank)),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn knee_rotation_traces_shank_circle() {
        let p = params();
        let leg = LegId::LH;
        let base = [0.1, 0.4, 0.9];
        let knee = LegFrames::new(p.leg(leg), base).origins[2];
        for k in [-1.0, -0.2, 0.5, 1.7] {
            let foot = LegFrames::new(p.leg(leg), [base[0], base[1], k]).foot;
            assert!(((foot - knee).norm() - p.leg(leg).shank).abs() < 1e-14);
        }
    }

    #[test]
    fn stance_below_hip_has_zero_abduction() {
        let p = params();
        let leg = LegId::LF;
        let l = p.leg(leg);
        let height = 0.5;
        let target = Vector3::new(0.0, l.lateral_offset, -height);
        let q = leg_ik(&p, leg, &target).unwrap();
        assert!(q[0].abs() < 1e-14);
        let cos_knee = (height * height - l.thigh.powi(2) - l.shank.powi(2)) / (2.0 * l.thigh * l.shank);
        assert_relative_eq!(q[2], -cos_knee.acos(), epsilon = 1e-14);
        assert_relative_eq!(leg_fk(&p, leg, q), target, epsilon = 1e-12);
    }

    #[test]
    fn stretched_leg_has_zero_knee() {
        let p = params();
        let leg = LegId::RF;
        let l = p.leg(leg);
        let target = Vector3::new(0.0, l.lateral_offset, -(l.thigh + l.shank));
        let mut w = p.clone();
        w.workspace.r_max = l.full_reach();
        let q = leg_ik(&w, leg, &target).unwrap();
        assert!(q[2].abs() < 1e-7, "{q:?}");
    }

    #[test]
    fn out_of_reach_target_is_rejected() {
        let p = params();
        let err = leg_ik(&p, LegId::LF, &Vector3::new(0.0, 0.0, -2.0)).unwrap_err();
        assert!(matches!(err, RobotError::Unreachable { leg: 0, .. }));
    }

    #[test]
    fn normalisation_projects_onto_margin() {
        let p = params();
        let w = p.workspace;
        let inside = Vector3::new(0.0, 0.05, -0.45);
        assert_eq!(normalise_workspace(&p, &inside), inside);
        let dir = Vector3::new(0.2, -0.1, -0.9).normalize();
        let far = dir * 1.5 * w.r_max;
        assert_relative_eq!(
            normalise_workspace(&p, &far),
            dir * (w.r_max - w.margin),
            epsilon = 1e-15
        );
        let near = dir * 0.5 * w.r_min;
        assert_relative_eq!(
            normalise_workspace(&p, &near),
            dir * (w.r_min + w.margin),
            epsilon = 1e-15
        );
    }

    #[test]
    fn fore_and_hind_knees_bend_opposite_ways() {
        let p = params();
        for leg in LegId::ALL {
            let l = p.leg(leg);
            let q = leg_ik(&p, leg, &Vector3::new(0.02, l.lateral_offset, -0.5)).unwrap();
            if leg.is_fore() {
                assert!(q[2] < 0.0);
            } else {
                assert!(q[2] > 0.0);
            }
        }
    }
}
