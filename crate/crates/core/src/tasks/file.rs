//! TOML task files. Angles are in degrees here and radians everywhere else.

use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use super::{Component, PhaseSpec, PhaseWeights, Profile, Reference, TaskError, TaskSpec, Window};
use crate::robot::{find_key_line, line_of, RobotParams};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    task: TaskSection,
    phases: Vec<PhaseFile>,
    #[serde(default)]
    references: Vec<ReferenceFile>,
    #[serde(default)]
    weights: WeightsFile,
    #[serde(default)]
    bounds: BoundsFile,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskSection {
    name: String,
    duration: f64,
    dt: f64,
    #[serde(default)]
    position: Option<[f64; 3]>,
    #[serde(default)]
    yaw: f64,
    #[serde(default = "one")]
    terminal_scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PhaseFile {
    name: String,
    duration: f64,
    stance: [bool; 4],
    #[serde(default)]
    weights: WeightsFile,
}

/// One value for all three axes, or one per axis.
#[derive(Deserialize, Clone, Copy)]
#[serde(untagged)]
enum Axes {
    Uniform(f64),
    PerAxis([f64; 3]),
}

impl Axes {
    fn vector(self) -> Vector3<f64> {
        match self {
            Axes::Uniform(v) => Vector3::repeat(v),
            Axes::PerAxis(v) => Vector3::from(v),
        }
    }
}

#[derive(Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct WeightsFile {
    position: Option<Axes>,
    orientation: Option<Axes>,
    linear_velocity: Option<Axes>,
    angular_velocity: Option<Axes>,
    feet: Option<Axes>,
    force: Option<Axes>,
    foot_velocity: Option<Axes>,
    kinematic: Option<f64>,
    friction: Option<f64>,
    mu: Option<f64>,
    kinematic_margin: Option<f64>,
}

impl WeightsFile {
    fn apply(&self, w: &mut PhaseWeights) {
        let set = |dst: &mut Vector3<f64>, src: Option<Axes>| {
            if let Some(a) = src {
                *dst = a.vector();
            }
        };
        set(&mut w.position, self.position);
        set(&mut w.orientation, self.orientation);
        set(&mut w.linear_velocity, self.linear_velocity);
        set(&mut w.angular_velocity, self.angular_velocity);
        set(&mut w.feet, self.feet);
        set(&mut w.force, self.force);
        set(&mut w.foot_velocity, self.foot_velocity);
        w.kinematic = self.kinematic.unwrap_or(w.kinematic);
        w.friction = self.friction.unwrap_or(w.friction);
        w.mu = self.mu.unwrap_or(w.mu);
        w.kinematic_margin = self.kinematic_margin.unwrap_or(w.kinematic_margin);
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceFile {
    component: String,
    value: f64,
    weight: f64,
    #[serde(default)]
    amplitude: f64,
    #[serde(default)]
    period: Option<f64>,
    #[serde(default)]
    harmonic: Option<f64>,
    #[serde(default)]
    phases: Option<Vec<String>>,
    #[serde(default)]
    window: Option<[f64; 2]>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    force_max: Option<f64>,
}

/// Line of the first occurrence of `needle`, or 0.
fn find_text_line(text: &str, needle: &str) -> usize {
    text.find(needle).map(|o| line_of(text, o)).unwrap_or(0)
}

pub(super) fn parse(text: &str, path: &Path, params: &RobotParams) -> Result<TaskSpec, TaskError> {
    let display = path.display().to_string();
    let file: TaskFile = toml::from_str(text).map_err(|e| TaskError::Parse {
        path: display.clone(),
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let invalid = |line: usize, invariant: String| TaskError::Invalid {
        path: display.clone(),
        line,
        invariant,
    };

    let mut base = PhaseWeights::default();
    file.weights.apply(&mut base);
    let phases = file
        .phases
        .iter()
        .map(|p| {
            let mut w = base.clone();
            p.weights.apply(&mut w);
            PhaseSpec {
                name: p.name.clone(),
                duration: p.duration,
                stance: p.stance,
                weights: w,
            }
        })
        .collect();

    let mut references = Vec::with_capacity(file.references.len());
    for r in &file.references {
        let line = find_text_line(text, &format!("\"{}\"", r.component));
        let component = Component::from_name(&r.component)
            .ok_or_else(|| invalid(line, format!("unknown reference component `{}`", r.component)))?;
        let scale = if component.is_angle() { 1f64.to_radians() } else { 1.0 };
        let window = match (&r.phases, r.window) {
            (Some(_), Some(_)) => {
                return Err(invalid(
                    line,
                    "a reference takes either `phases` or `window`, not both".into(),
                ))
            }
            (Some(names), None) => Window::Phases(names.clone()),
            (None, Some([a, b])) => Window::Time(a, b),
            (None, None) => Window::Always,
        };
        references.push(Reference {
            component,
            profile: Profile {
                value: r.value * scale,
                amplitude: r.amplitude * scale,
                period: r.period.unwrap_or(1.0),
                harmonic: r.harmonic.unwrap_or(1.0),
            },
            weight: r.weight,
            window,
        });
    }

    let spec = TaskSpec {
        name: file.task.name,
        duration: file.task.duration,
        dt: file.task.dt,
        initial_position: file
            .task
            .position
            .map(Vector3::from)
            .unwrap_or_else(|| Vector3::new(0.0, 0.0, 0.52)),
        initial_yaw: file.task.yaw.to_radians(),
        phases,
        references,
        terminal_scale: file.task.terminal_scale,
        force_max: file
            .bounds
            .force_max
            .unwrap_or_else(|| 4.0 * params.mass() * params.gravity.norm()),
    };
    spec.validate().map_err(|invariant| {
        let line = invariant
            .split('`')
            .nth(1)
            .map(|name| find_text_line(text, &format!("\"{name}\"")))
            .filter(|&l| l > 0)
            .unwrap_or_else(|| {
                let key = if invariant.contains("force") {
                    "bounds.force_max"
                } else if invariant.starts_with("dt") {
                    "task.dt"
                } else {
                    "task.duration"
                };
                find_key_line(text, key)
            });
        invalid(line, invariant)
    })?;
    Ok(spec)
}
