//! Rigid-body pose group with tangent ordered `(ρ, θ)`: translation first.

use nalgebra::{Matrix3, Matrix6, UnitQuaternion, Vector3, Vector6};

use super::so3::{
    self, coef_a1, coef_a2, coef_a3, hat, left_jacobian, left_jacobian_inv, left_jacobian_inv_derivatives,
};

/// Base pose: position and orientation of the base origin in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Builds a pose, renormalising the quaternion onto `w ≥ 0`.
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation: so3::canonical(orientation),
        }
    }

    pub fn from_yaw(position: Vector3<f64>, yaw: f64) -> Self {
        Self::new(position, so3::exp_so3(&Vector3::new(0.0, 0.0, yaw)))
    }

    pub fn orientation(&self) -> &UnitQuaternion<f64> {
        &self.orientation
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        *self.orientation.to_rotation_matrix().matrix()
    }

    /// Quaternion as `(w, x, y, z)`.
    pub fn quaternion_wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    /// `Ad` of this pose acting on `(ρ, θ)` tangents.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let r = self.rotation();
        let mut ad = Matrix6::zeros();
        ad.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(3, 3).copy_from(&r);
        ad.fixed_view_mut::<3, 3>(0, 3).copy_from(&(hat(&self.position) * r));
        ad
    }

    /// ZYX yaw angle of the orientation.
    pub fn yaw(&self) -> f64 {
        self.orientation.euler_angles().2
    }
}

pub fn exp_se3(xi: &Vector6<f64>) -> Pose {
    let rho = xi.fixed_rows::<3>(0).into_owned();
    let theta = xi.fixed_rows::<3>(3).into_owned();
    Pose::new(left_jacobian(&theta) * rho, so3::exp_so3(&theta))
}

pub fn log_se3(pose: &Pose) -> Vector6<f64> {
    let theta = so3::log_so3(pose.orientation());
    let rho = left_jacobian_inv(&theta) * pose.position;
    let mut xi = Vector6::zeros();
    xi.fixed_rows_mut::<3>(0).copy_from(&rho);
    xi.fixed_rows_mut::<3>(3).copy_from(&theta);
    xi
}

fn split(xi: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (xi.fixed_rows::<3>(0).into_owned(), xi.fixed_rows::<3>(3).into_owned())
}

/// Products of `T = θ^` and `P = ρ^` that make up the coupling block.
struct Words {
    m1: Matrix3<f64>,
    m2: Matrix3<f64>,
    m3: Matrix3<f64>,
}

impl Words {
    fn new(t: &Matrix3<f64>, p: &Matrix3<f64>) -> Self {
        let tp = t * p;
        let pt = p * t;
        let tpt = tp * t;
        let tt = t * t;
        Self {
            m1: tp + pt + tpt,
            m2: tt * p + p * tt - 3.0 * tpt,
            m3: tpt * t + tt * p * t,
        }
    }

    /// Derivative of each word when `T` moves along `E`.
    fn along(t: &Matrix3<f64>, p: &Matrix3<f64>, e: &Matrix3<f64>) -> Self {
        let tt = t * t;
        Self {
            m1: e * p + p * e + e * p * t + t * p * e,
            m2: e * t * p + t * e * p + p * e * t + p * t * e - 3.0 * (e * p * t + t * p * e),
            m3: e * p * tt + t * p * e * t + t * p * t * e + e * t * p * t + t * e * p * t + tt * p * e,
        }
    }
}

/// Coupling block `Q(ρ, θ)` of the SE(3) left Jacobian.
pub fn coupling(rho: &Vector3<f64>, theta: &Vector3<f64>) -> Matrix3<f64> {
    let n = theta.norm();
    let t = hat(theta);
    let p = hat(rho);
    let w = Words::new(&t, &p);
    0.5 * p + coef_a1(n).value * w.m1 + coef_a2(n).value * w.m2 + coef_a3(n).value * w.m3
}

/// `∂Q/∂θ_j` for j = 0..3.
fn coupling_theta_derivatives(rho: &Vector3<f64>, theta: &Vector3<f64>) -> [Matrix3<f64>; 3] {
    let n = theta.norm();
    let (a1, a2, a3) = (coef_a1(n), coef_a2(n), coef_a3(n));
    let t = hat(theta);
    let p = hat(rho);
    let w = Words::new(&t, &p);
    std::array::from_fn(|j| {
        let e = hat(&Vector3::ith(j, 1.0));
        let dw = Words::along(&t, &p, &e);
        theta[j] * (a1.dvalue * w.m1 + a2.dvalue * w.m2 + a3.dvalue * w.m3)
            + a1.value * dw.m1
            + a2.value * dw.m2
            + a3.value * dw.m3
    })
}

fn blocks(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(a);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(a);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(b);
    m
}

pub fn left_jacobian_se3(xi: &Vector6<f64>) -> Matrix6<f64> {
    let (rho, theta) = split(xi);
    blocks(&left_jacobian(&theta), &coupling(&rho, &theta))
}

pub fn right_jacobian_se3(xi: &Vector6<f64>) -> Matrix6<f64> {
    left_jacobian_se3(&(-xi))
}

/// Inverse left Jacobian `[[A, -A Q A], [0, A]]` with `A = J_l⁻¹(θ)`.
pub fn left_jacobian_inv_se3(xi: &Vector6<f64>) -> Matrix6<f64> {
    let (rho, theta) = split(xi);
    let a = left_jacobian_inv(&theta);
    blocks(&a, &(-a * coupling(&rho, &theta) * a))
}

/// Partial derivatives of [`left_jacobian_inv_se3`] with respect to each
/// tangent coordinate.
pub fn left_jacobian_inv_se3_derivatives(xi: &Vector6<f64>) -> [Matrix6<f64>; 6] {
    let (rho, theta) = split(xi);
    let a = left_jacobian_inv(&theta);
    let q = coupling(&rho, &theta);
    let da = left_jacobian_inv_derivatives(&theta);
    let dq = coupling_theta_derivatives(&rho, &theta);
    std::array::from_fn(|c| {
        if c < 3 {
            // Q is linear in ρ.
            let q_c = coupling(&Vector3::ith(c, 1.0), &theta);
            let mut m = Matrix6::zeros();
            m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-a * q_c * a));
            m
        } else {
            let j = c - 3;
            let db = -(da[j] * q * a + a * dq[j] * a + a * q * da[j]);
            blocks(&da[j], &db)
        }
    })
}
