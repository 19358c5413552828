//! Running and terminal costs with analytic gradients and Hessians.
//!
//! Every term is a half-weighted square. The state term keeps the exact
//! second-order expansion of the manifold difference; the penalties use
//! Gauss-Newton curvature on their active residuals.

use nalgebra::{RowVector3, SMatrix, Vector3};

use crate::centroidal::{Control, ControlVector, NU};
use crate::manifold::{
    difference, difference_hessian, difference_jacobian, hat, State, TangentMatrix, TangentVector, NDX,
};
use crate::robot::{foot_in_hip, RobotParams};

pub type ControlHessian = SMatrix<f64, NU, NU>;
pub type CrossHessian = SMatrix<f64, NU, NDX>;

/// Per-knot weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    /// Diagonal of `Q`, tangent order.
    pub state: TangentVector,
    /// Diagonal of `R`, control order.
    pub control: ControlVector,
    pub kinematic: f64,
    pub friction: f64,
    pub mu: f64,
    /// Soft margin inside the workspace shell where the barrier starts.
    pub kinematic_margin: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            state: TangentVector::zeros(),
            control: ControlVector::zeros(),
            kinematic: 0.0,
            friction: 0.0,
            mu: 0.7,
            kinematic_margin: 0.02,
        }
    }
}

/// How the state term curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Curvature {
    /// `JᵀQJ + (Qr)·D²⊖`.
    #[default]
    Exact,
    /// `JᵀQJ` only.
    GaussNewton,
    /// Exact with the curvature term negated; a fault fixture for the
    /// derivative checker.
    Flipped,
}

/// Value and derivatives of one knot.
#[derive(Debug, Clone, PartialEq)]
pub struct CostEval {
    pub value: f64,
    pub lx: TangentVector,
    pub lu: ControlVector,
    pub lxx: TangentMatrix,
    pub luu: ControlHessian,
    pub lux: CrossHessian,
}

impl CostEval {
    pub fn zeros() -> Self {
        Self {
            value: 0.0,
            lx: TangentVector::zeros(),
            lu: ControlVector::zeros(),
            lxx: TangentMatrix::zeros(),
            luu: ControlHessian::zeros(),
            lux: CrossHessian::zeros(),
        }
    }

    fn add_state(&mut self, t: &StateTerm) {
        self.value += t.value;
        self.lx += t.lx;
        self.lxx += t.lxx;
    }

    fn add_control(&mut self, t: &ControlTerm) {
        self.value += t.value;
        self.lu += t.lu;
        self.luu += t.luu;
    }
}

/// A term that depends on the state only.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTerm {
    pub value: f64,
    pub lx: TangentVector,
    pub lxx: TangentMatrix,
}

/// A term that depends on the control only.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlTerm {
    pub value: f64,
    pub lu: ControlVector,
    pub luu: ControlHessian,
}

/// `½ ‖x_ref ⊖ x‖²_Q` with the exact Hessian.
pub fn state_cost(x_ref: &State, x: &State, q: &TangentVector) -> StateTerm {
    state_cost_with(x_ref, x, q, Curvature::Exact)
}

pub fn state_cost_with(x_ref: &State, x: &State, q: &TangentVector, curvature: Curvature) -> StateTerm {
    let r = difference(x_ref, x).0;
    let qr = q.component_mul(&r);
    let j = difference_jacobian(x_ref, x);
    let jt_q = j.transpose() * TangentMatrix::from_diagonal(q);
    let mut lxx = jt_q * j;
    let sign = match curvature {
        Curvature::Exact => 1.0,
        Curvature::GaussNewton => 0.0,
        Curvature::Flipped => -1.0,
    };
    if sign != 0.0 && qr.fixed_rows::<6>(0).amax() > 0.0 {
        lxx += sign * difference_hessian(x_ref, x).contract(&qr);
    }
    StateTerm {
        value: 0.5 * r.dot(&qr),
        lx: j.transpose() * qr,
        lxx,
    }
}

/// `½ ‖u_ref - u‖²_R`.
pub fn control_cost(u_ref: &Control, u: &Control, r: &ControlVector) -> ControlTerm {
    let e = u.0 - u_ref.0;
    let re = r.component_mul(&e);
    ControlTerm {
        value: 0.5 * e.dot(&re),
        lu: re,
        luu: ControlHessian::from_diagonal(r),
    }
}

/// Quadratic barrier on the distance of every foot from its hip, active
/// outside `[r_min + δ, r_max - δ]`.
pub fn kinematic_barrier(params: &RobotParams, x: &State, weight: f64, margin: f64) -> StateTerm {
    let mut out = StateTerm {
        value: 0.0,
        lx: TangentVector::zeros(),
        lxx: TangentMatrix::zeros(),
    };
    if weight == 0.0 {
        return out;
    }
    let w = params.workspace;
    let (lo, hi) = (w.r_min + margin, w.r_max - margin);
    let rt = x.pose.rotation().transpose();
    for leg in 0..4 {
        let (p, p_rel) = foot_in_hip(params, x, leg);
        let n = p.norm();
        let (s, sign) = if n > hi {
            (n - hi, 1.0)
        } else if n < lo {
            (lo - n, -1.0)
        } else {
            continue;
        };
        let dn: RowVector3<f64> = sign * p.transpose() / n;
        let mut grad = SMatrix::<f64, 1, NDX>::zeros();
        grad.fixed_view_mut::<1, 3>(0, 0).copy_from(&(-dn));
        grad.fixed_view_mut::<1, 3>(0, 3).copy_from(&(dn * hat(&p_rel)));
        grad.fixed_view_mut::<1, 3>(0, 12 + 3 * leg).copy_from(&(dn * rt));
        out.value += 0.5 * weight * s * s;
        out.lx += weight * s * grad.transpose();
        out.lxx += weight * grad.transpose() * grad;
    }
    out
}

/// Outer friction pyramid plus unilaterality on stance legs, flat ground.
pub fn friction_penalty(u: &Control, stance: &[bool; 4], mu: f64, weight: f64) -> ControlTerm {
    let mut out = ControlTerm {
        value: 0.0,
        lu: ControlVector::zeros(),
        luu: ControlHessian::zeros(),
    };
    if weight == 0.0 {
        return out;
    }
    let facets = [
        Vector3::new(1.0, 0.0, -mu),
        Vector3::new(-1.0, 0.0, -mu),
        Vector3::new(0.0, 1.0, -mu),
        Vector3::new(0.0, -1.0, -mu),
        Vector3::new(0.0, 0.0, -1.0),
    ];
    for leg in (0..4).filter(|&l| stance[l]) {
        let f = u.force(leg);
        let i = Control::force_index(leg);
        for a in &facets {
            let c = a.dot(&f);
            if c > 0.0 {
                out.value += 0.5 * weight * c * c;
                let mut g = out.lu.fixed_rows_mut::<3>(i);
                g += weight * c * a;
                let mut h = out.luu.fixed_view_mut::<3, 3>(i, i);
                h += weight * a * a.transpose();
            }
        }
    }
    out
}

/// Everything a running knot needs to evaluate its cost.
#[derive(Debug, Clone, Copy)]
pub struct KnotCost<'a> {
    pub params: &'a RobotParams,
    pub weights: &'a CostWeights,
    pub x_ref: &'a State,
    pub u_ref: &'a Control,
    pub stance: [bool; 4],
    pub curvature: Curvature,
}

impl KnotCost<'_> {
    pub fn value(&self, x: &State, u: &Control) -> f64 {
        let w = self.weights;
        let r = difference(self.x_ref, x).0;
        0.5 * r.dot(&w.state.component_mul(&r))
            + control_cost(self.u_ref, u, &w.control).value
            + kinematic_barrier(self.params, x, w.kinematic, w.kinematic_margin).value
            + friction_penalty(u, &self.stance, w.mu, w.friction).value
    }

    /// Sum of the four terms; `lux` is identically zero.
    pub fn eval(&self, x: &State, u: &Control) -> CostEval {
        let w = self.weights;
        let mut out = CostEval::zeros();
        out.add_state(&state_cost_with(self.x_ref, x, &w.state, self.curvature));
        out.add_control(&control_cost(self.u_ref, u, &w.control));
        out.add_state(&kinematic_barrier(self.params, x, w.kinematic, w.kinematic_margin));
        out.add_control(&friction_penalty(u, &self.stance, w.mu, w.friction));
        out
    }
}
