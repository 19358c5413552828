use nalgebra::{Matrix6, SMatrix, SVector, Vector3, Vector6};

use super::se3::{self, Pose};

/// Tangent dimension.
pub const NDX: usize = 24;
/// Number of scalars in the state representation.
pub const NQ: usize = 25;

pub type TangentVector = SVector<f64, NDX>;
pub type TangentMatrix = SMatrix<f64, NDX, NDX>;

pub(crate) const POSE: usize = 0;
pub(crate) const LIN_VEL: usize = 6;
pub(crate) const ANG_VEL: usize = 9;
pub(crate) const FEET: usize = 12;

/// Point on the state manifold.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub pose: Pose,
    /// Base linear velocity in the base frame.
    pub v: Vector3<f64>,
    /// Base angular velocity in the base frame.
    pub omega: Vector3<f64>,
    /// World-frame footholds ordered LF, LH, RF, RH.
    pub feet: [Vector3<f64>; 4],
}

impl State {
    pub fn standing(pose: Pose, feet: [Vector3<f64>; 4]) -> Self {
        Self {
            pose,
            v: Vector3::zeros(),
            omega: Vector3::zeros(),
            feet,
        }
    }

    /// Largest absolute component, used to detect divergent rollouts.
    pub fn max_abs(&self) -> f64 {
        let mut m = self.pose.position.amax().max(self.v.amax()).max(self.omega.amax());
        for r in &self.feet {
            m = m.max(r.amax());
        }
        if m.is_nan() {
            f64::INFINITY
        } else {
            m
        }
    }
}

/// Element of the tangent space, ordered `(dp, dθ, dv, dω, dr_LF..dr_RH)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tangent(pub TangentVector);

impl Tangent {
    pub fn zeros() -> Self {
        Self(TangentVector::zeros())
    }

    pub fn dp(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(POSE).into_owned()
    }
    pub fn dtheta(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(POSE + 3).into_owned()
    }
    pub fn dv(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(LIN_VEL).into_owned()
    }
    pub fn domega(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(ANG_VEL).into_owned()
    }
    pub fn dr(&self, leg: usize) -> Vector3<f64> {
        self.0.fixed_rows::<3>(FEET + 3 * leg).into_owned()
    }

    pub fn pose_block(&self) -> Vector6<f64> {
        self.0.fixed_rows::<6>(POSE).into_owned()
    }

    pub fn from_parts(pose: Vector6<f64>, dv: Vector3<f64>, domega: Vector3<f64>, dr: [Vector3<f64>; 4]) -> Self {
        let mut t = TangentVector::zeros();
        t.fixed_rows_mut::<6>(POSE).copy_from(&pose);
        t.fixed_rows_mut::<3>(LIN_VEL).copy_from(&dv);
        t.fixed_rows_mut::<3>(ANG_VEL).copy_from(&domega);
        for (i, r) in dr.iter().enumerate() {
            t.fixed_rows_mut::<3>(FEET + 3 * i).copy_from(r);
        }
        Self(t)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

impl std::ops::Mul<f64> for Tangent {
    type Output = Tangent;
    fn mul(self, rhs: f64) -> Tangent {
        Tangent(self.0 * rhs)
    }
}

impl std::ops::Add for Tangent {
    type Output = Tangent;
    fn add(self, rhs: Tangent) -> Tangent {
        Tangent(self.0 + rhs.0)
    }
}

/// `x ⊕ dx`.
pub fn integrate(x: &State, dx: &Tangent) -> State {
    let pose = x.pose.compose(&se3::exp_se3(&dx.pose_block()));
    State {
        pose,
        v: x.v + dx.dv(),
        omega: x.omega + dx.domega(),
        feet: std::array::from_fn(|i| x.feet[i] + dx.dr(i)),
    }
}

/// `x_ref ⊖ x`, the tangent at `x` that carries `x` onto `x_ref`.
pub fn difference(x_ref: &State, x: &State) -> Tangent {
    let tau = se3::log_se3(&x.pose.inverse().compose(&x_ref.pose));
    Tangent::from_parts(
        tau,
        x_ref.v - x.v,
        x_ref.omega - x.omega,
        std::array::from_fn(|i| x_ref.feet[i] - x.feet[i]),
    )
}

/// `D(x_ref ⊖ x)/Dx`.
pub fn difference_jacobian(x_ref: &State, x: &State) -> TangentMatrix {
    let tau = difference(x_ref, x).pose_block();
    let mut j = -TangentMatrix::identity();
    j.fixed_view_mut::<6, 6>(0, 0)
        .copy_from(&(-se3::left_jacobian_inv_se3(&tau)));
    j
}

/// Second tangent derivative of `x_ref ⊖ x` with respect to `x`.
///
/// Only the pose block curves; it is stored as one dense 6×6 slice per
/// pose output coordinate. Every other entry of the 24×24×24 tensor is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceHessian {
    pub slices: [Matrix6<f64>; 6],
}

impl DifferenceHessian {
    /// Entry `∂²(x_ref ⊖ x)_i / ∂x_a ∂x_b`.
    pub fn get(&self, i: usize, a: usize, b: usize) -> f64 {
        if i < 6 && a < 6 && b < 6 {
            self.slices[i][(a, b)]
        } else {
            0.0
        }
    }

    /// `Σ_i w_i H_i`, the contraction with a residual-space covector.
    pub fn contract(&self, w: &TangentVector) -> TangentMatrix {
        let mut block = Matrix6::zeros();
        for (i, s) in self.slices.iter().enumerate() {
            block += w[i] * s;
        }
        let mut out = TangentMatrix::zeros();
        out.fixed_view_mut::<6, 6>(0, 0).copy_from(&block);
        out
    }
}

/// Chart Hessian of `x_ref ⊖ x` at `x`.
///
/// The derivative of the Jacobian field `-J_l⁻¹(τ(x))` along `x` is
/// `∂(-J_l⁻¹)/∂τ · Dτ/Dx`; its antisymmetric part is a Lie-bracket term that
/// does not belong to the second-order expansion of `δ ↦ x_ref ⊖ (x ⊕ δ)`,
/// so the returned slices are the symmetric part.
pub fn difference_hessian(x_ref: &State, x: &State) -> DifferenceHessian {
    let tau = difference(x_ref, x).pose_block();
    let jac = -se3::left_jacobian_inv_se3(&tau);
    let djinv = se3::left_jacobian_inv_se3_derivatives(&tau);
    let slices = std::array::from_fn(|i| {
        let mut field = Matrix6::zeros();
        for a in 0..6 {
            for b in 0..6 {
                let mut acc = 0.0;
                for (c, d) in djinv.iter().enumerate() {
                    acc -= d[(i, a)] * jac[(c, b)];
                }
                field[(a, b)] = acc;
            }
        }
        0.5 * (field + field.transpose())
    });
    DifferenceHessian { slices }
}
