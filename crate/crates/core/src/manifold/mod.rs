//! Hybrid state manifold `SE(3) × ℝ¹⁸` and its calculus.
//!
//! A [`State`] holds the base pose, the body-frame base twist and the four
//! world-frame footholds. Perturbations live in the 24-dimensional
//! [`Tangent`] space and act on the right:
//!
//! ```text
//! x ⊕ δ   = (pose · Exp(δp, δθ), v + δv, ω + δω, r + δr)
//! y ⊖ x   = (Log(pose_x⁻¹ · pose_y), v_y - v_x, ω_y - ω_x, r_y - r_x)
//! ```
//!
//! Under this local (right) perturbation convention the Jacobian of
//! `x_ref ⊖ x` with respect to `x` is `-J_l⁻¹(τ)` on the pose block, with
//! `τ = x_ref ⊖ x`, and `-I` on the Euclidean blocks.

pub mod se3;
pub mod so3;
mod state;

pub use se3::{exp_se3, log_se3, Pose};
pub use so3::{exp_so3, hat, log_so3};
pub use state::{
    difference, difference_hessian, difference_jacobian, integrate, DifferenceHessian, State, Tangent, TangentMatrix,
    TangentVector, NDX, NQ,
};
