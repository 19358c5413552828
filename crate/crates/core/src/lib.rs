//! Task-space trajectory optimisation for agile quadruped manoeuvres.
//!
//! The robot is a floating base with four three-joint legs. The decision
//! variables are the base pose and twist, the four footholds, the contact
//! forces and the foothold velocities; joint angles follow from closed-form
//! inverse kinematics and only enter through the composite inertia.
//!
//! - [`manifold`]: the state manifold and its derivatives
//! - [`robot`]: parameters, kinematics, composite inertia
//! - [`centroidal`]: full-centroidal dynamics and its discretisation
//! - [`cost`]: tracking costs and constraint penalties
//! - [`fddp`]: box-constrained feasibility-driven DDP
//! - [`tasks`]: contact schedules and the reference manoeuvres
//! - [`check`], [`bench`], [`io`], [`cli`]: verification, timing, files and
//!   the command-line front end

pub mod bench;
pub mod centroidal;
pub mod check;
pub mod cli;
pub mod cost;
pub mod fddp;
pub mod io;
pub mod manifold;
pub mod robot;
pub mod tasks;
