//! Contact schedules, references and weights for the reference manoeuvres,
//! and their assembly into an FDDP problem.
//!
//! A task is a list of timed contact phases plus a sparse set of references.
//! Every knot carries a full state reference; components nobody references
//! keep their initial value and zero weight.

mod analysis;
mod file;
mod model;

pub use analysis::{mirror_control, mirror_state, Report};
pub use model::{build_problem, build_problem_with, initial_guess, CentroidalProblem, KnotModel, TerminalCost};

use std::path::Path;

use nalgebra::Vector3;

use crate::robot::RobotParams;

pub const SQUAT_JUMP: &str = include_str!("../../tasks/squat_jump.toml");
pub const ROTATIONAL_JUMP: &str = include_str!("../../tasks/rotational_jump.toml");
pub const LEMNISCATE: &str = include_str!("../../tasks/lemniscate.toml");
pub const STANDING: &str = include_str!("../../tasks/standing.toml");

/// Names accepted by [`builtin`].
pub const BUILTIN_TASKS: [&str; 4] = ["standing", "lemniscate", "squat_jump", "rotational_jump"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{path}:{line}: invalid task: {invariant}")]
    Invalid {
        path: String,
        line: usize,
        invariant: String,
    },
    #[error("invalid task: {0}")]
    Spec(String),
    #[error("unknown task `{0}`; builtin tasks are standing, lemniscate, squat_jump, rotational_jump")]
    Unknown(String),
}

/// Knot interval `[start, end)` with fixed contact flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactPhase {
    pub name: String,
    pub start: usize,
    pub end: usize,
    /// LF, LH, RF, RH.
    pub stance: [bool; 4],
}

impl ContactPhase {
    pub fn knots(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }

    pub fn is_flight(&self) -> bool {
        self.stance.iter().all(|s| !s)
    }
}

/// Regularisation weights of one phase. Vectors are per axis; feet weights
/// apply to all four footholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseWeights {
    pub position: Vector3<f64>,
    pub orientation: Vector3<f64>,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
    pub feet: Vector3<f64>,
    pub force: Vector3<f64>,
    pub foot_velocity: Vector3<f64>,
    pub kinematic: f64,
    pub friction: f64,
    pub mu: f64,
    pub kinematic_margin: f64,
}

impl Default for PhaseWeights {
    fn default() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: Vector3::zeros(),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            feet: Vector3::zeros(),
            force: Vector3::zeros(),
            foot_velocity: Vector3::zeros(),
            kinematic: 0.0,
            friction: 0.0,
            mu: 0.7,
            kinematic_margin: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpec {
    pub name: String,
    pub duration: f64,
    pub stance: [bool; 4],
    pub weights: PhaseWeights,
}

/// A referenced state component. Angles are in radians.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    BaseX,
    BaseY,
    BaseZ,
    Roll,
    Pitch,
    Yaw,
    LinearVelocityX,
    LinearVelocityY,
    LinearVelocityZ,
    AngularVelocityX,
    AngularVelocityY,
    AngularVelocityZ,
    /// Footholds along one world axis. The target is the nominal stance
    /// under the reference pose; the value offsets it for swing legs.
    FeetX,
    FeetY,
    FeetZ,
}

impl Component {
    pub const ALL: [Component; 15] = [
        Component::BaseX,
        Component::BaseY,
        Component::BaseZ,
        Component::Roll,
        Component::Pitch,
        Component::Yaw,
        Component::LinearVelocityX,
        Component::LinearVelocityY,
        Component::LinearVelocityZ,
        Component::AngularVelocityX,
        Component::AngularVelocityY,
        Component::AngularVelocityZ,
        Component::FeetX,
        Component::FeetY,
        Component::FeetZ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::BaseX => "base_x",
            Component::BaseY => "base_y",
            Component::BaseZ => "base_z",
            Component::Roll => "roll",
            Component::Pitch => "pitch",
            Component::Yaw => "yaw",
            Component::LinearVelocityX => "vx",
            Component::LinearVelocityY => "vy",
            Component::LinearVelocityZ => "vz",
            Component::AngularVelocityX => "wx",
            Component::AngularVelocityY => "wy",
            Component::AngularVelocityZ => "wz",
            Component::FeetX => "feet_x",
            Component::FeetY => "feet_y",
            Component::FeetZ => "feet_z",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Stored in degrees in task files.
    pub fn is_angle(self) -> bool {
        matches!(self, Component::Roll | Component::Pitch | Component::Yaw)
    }
}

/// `value + amplitude · sin(2π · harmonic · t / period)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub value: f64,
    pub amplitude: f64,
    pub period: f64,
    pub harmonic: f64,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            amplitude: 0.0,
            period: 1.0,
            harmonic: 1.0,
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            return self.value;
        }
        self.value + self.amplitude * (std::f64::consts::TAU * self.harmonic * t / self.period).sin()
    }
}

/// Knots a reference is active on.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Window {
    #[default]
    Always,
    Phases(Vec<String>),
    /// Knots whose time lies in `[from, to]` seconds.
    Time(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub component: Component,
    pub profile: Profile,
    pub weight: f64,
    pub window: Window,
}

impl Reference {
    pub fn constant(component: Component, value: f64, weight: f64, window: Window) -> Self {
        Self {
            component,
            profile: Profile::constant(value),
            weight,
            window,
        }
    }
}

/// Everything needed to build the optimal control problem of a manoeuvre.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub duration: f64,
    pub dt: f64,
    /// Base position at `t = 0`; the feet start below the hips on `z = 0`.
    pub initial_position: Vector3<f64>,
    pub initial_yaw: f64,
    pub phases: Vec<PhaseSpec>,
    pub references: Vec<Reference>,
    /// Multiplier applied to the final knot's state weights.
    pub terminal_scale: f64,
    /// Per-component contact force bound, N.
    pub force_max: f64,
}

impl TaskSpec {
    /// Number of running knots.
    pub fn knots(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Phase partition of `[0, N)`.
    pub fn schedule(&self) -> Result<Vec<ContactPhase>, String> {
        self.validate()?;
        Ok(self.schedule_unchecked())
    }

    fn schedule_unchecked(&self) -> Vec<ContactPhase> {
        let mut start = 0;
        let mut elapsed = 0.0;
        self.phases
            .iter()
            .map(|p| {
                elapsed += p.duration;
                let end = (elapsed / self.dt).round() as usize;
                let phase = ContactPhase {
                    name: p.name.clone(),
                    start,
                    end,
                    stance: p.stance,
                };
                start = end;
                phase
            })
            .collect()
    }

    /// Checks the task invariants; the error names the violated one.
    pub fn validate(&self) -> Result<(), String> {
        let aligned = |t: f64| ((t / self.dt).round() * self.dt - t).abs() <= 1e-9 * t.abs().max(1.0);
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be positive".into());
        }
        if !(self.duration > 0.0) || !aligned(self.duration) {
            return Err(format!(
                "duration {} s must be a positive multiple of dt = {} s",
                self.duration, self.dt
            ));
        }
        if self.phases.is_empty() {
            return Err("at least one phase is required".into());
        }
        let mut total = 0.0;
        for p in &self.phases {
            if !(p.duration > 0.0) || !aligned(p.duration) {
                return Err(format!(
                    "phase `{}` duration {} s must be a positive multiple of dt",
                    p.name, p.duration
                ));
            }
            total += p.duration;
            let w = &p.weights;
            let vectors = [
                w.position,
                w.orientation,
                w.linear_velocity,
                w.angular_velocity,
                w.feet,
                w.force,
                w.foot_velocity,
            ];
            if vectors.iter().any(|v| v.iter().any(|&x| !(x >= 0.0 && x.is_finite())))
                || !(w.kinematic >= 0.0 && w.friction >= 0.0)
            {
                return Err(format!("phase `{}` weights must be finite and non-negative", p.name));
            }
            if !(w.mu > 0.0) {
                return Err(format!("phase `{}` friction coefficient must be positive", p.name));
            }
            if !(w.kinematic_margin >= 0.0) {
                return Err(format!("phase `{}` kinematic margin must be non-negative", p.name));
            }
        }
        if (total - self.duration).abs() > 1e-9 * self.duration.max(1.0) {
            return Err(format!(
                "phase durations sum to {total} s but the task lasts {} s",
                self.duration
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.phases {
            if !seen.insert(p.name.as_str()) {
                return Err(format!("phase name `{}` is not unique", p.name));
            }
        }
        for r in &self.references {
            if !(r.weight >= 0.0 && r.weight.is_finite()) {
                return Err(format!("reference on `{}` has a negative weight", r.component.name()));
            }
            if r.profile.amplitude != 0.0 && !(r.profile.period > 0.0) {
                return Err(format!("reference on `{}` needs a positive period", r.component.name()));
            }
            if let Window::Phases(names) = &r.window {
                if let Some(n) = names.iter().find(|n| !seen.contains(n.as_str())) {
                    return Err(format!(
                        "reference on `{}` names unknown phase `{n}`",
                        r.component.name()
                    ));
                }
            }
            if let Window::Time(a, b) = r.window {
                if !(a <= b) {
                    return Err(format!(
                        "reference on `{}` has an empty time window",
                        r.component.name()
                    ));
                }
            }
        }
        if !(self.force_max > 0.0) {
            return Err("force bound must be positive".into());
        }
        if !(self.terminal_scale >= 0.0) {
            return Err("terminal scale must be non-negative".into());
        }
        Ok(())
    }

    /// Reflection through the sagittal plane: left and right legs swap,
    /// lateral positions, roll and yaw change sign.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.name = format!("{}_mirrored", self.name);
        out.initial_position.y = -out.initial_position.y;
        out.initial_yaw = -out.initial_yaw;
        for p in &mut out.phases {
            let [lf, lh, rf, rh] = p.stance;
            p.stance = [rf, rh, lf, lh];
        }
        for r in &mut out.references {
            use Component::*;
            if matches!(
                r.component,
                BaseY | Roll | Yaw | LinearVelocityY | AngularVelocityX | AngularVelocityZ
            ) {
                r.profile.value = -r.profile.value;
                r.profile.amplitude = -r.profile.amplitude;
            }
        }
        out
    }
}

/// Parse a task file. `force_max` defaults to `4 m ‖g‖`.
pub fn load_task(path: &Path, params: &RobotParams) -> Result<TaskSpec, TaskError> {
    let text = std::fs::read_to_string(path).map_err(|e| TaskError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    file::parse(&text, path, params)
}

pub fn parse_task(text: &str, path: &Path, params: &RobotParams) -> Result<TaskSpec, TaskError> {
    file::parse(text, path, params)
}

/// Builtin task by name.
pub fn builtin(name: &str, params: &RobotParams) -> Result<TaskSpec, TaskError> {
    let text = match name {
        "standing" => STANDING,
        "lemniscate" => LEMNISCATE,
        "squat_jump" => SQUAT_JUMP,
        "rotational_jump" => ROTATIONAL_JUMP,
        _ => return Err(TaskError::Unknown(name.to_string())),
    };
    file::parse(text, Path::new(&format!("<builtin {name}>")), params)
}

/// Builtin task name or path to a task file.
pub fn resolve_task(name_or_path: &str, params: &RobotParams) -> Result<TaskSpec, TaskError> {
    if BUILTIN_TASKS.contains(&name_or_path) {
        builtin(name_or_path, params)
    } else {
        load_task(Path::new(name_or_path), params)
    }
}

/// Four legs in stance at constant height for one second.
pub fn standing_task(params: &RobotParams) -> TaskSpec {
    builtin("standing", params).expect("builtin task is valid")
}

/// All-stance figure-eight of the base, `x = a sin ωt`, `y = (a/2) sin 2ωt`.
pub fn lemniscate_task(params: &RobotParams) -> TaskSpec {
    builtin("lemniscate", params).expect("builtin task is valid")
}

/// [`lemniscate_task`] with a different amplitude in metres.
pub fn lemniscate_with_amplitude(params: &RobotParams, amplitude: f64) -> TaskSpec {
    let mut spec = lemniscate_task(params);
    for r in &mut spec.references {
        match r.component {
            Component::BaseX => r.profile.amplitude = amplitude,
            Component::BaseY => r.profile.amplitude = 0.5 * amplitude,
            _ => {}
        }
    }
    spec
}

pub fn squat_jump_task(params: &RobotParams) -> TaskSpec {
    builtin("squat_jump", params).expect("builtin task is valid")
}

pub fn rotational_jump_task(params: &RobotParams) -> TaskSpec {
    builtin("rotational_jump", params).expect("builtin task is valid")
}
