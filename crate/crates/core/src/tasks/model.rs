//! Per-knot action models and problem assembly.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, UnitQuaternion, Vector3};

use super::{ContactPhase, PhaseWeights, TaskError, TaskSpec, Window};
use crate::centroidal::{step, step_with_derivatives, Control, ControlVector, NU};
use crate::cost::{kinematic_barrier, state_cost_with, CostWeights, Curvature, KnotCost};
use crate::fddp::{ActionDerivatives, ActionModel, Problem, TerminalModel};
use crate::manifold::{difference, integrate, Pose, State, Tangent, TangentVector, NDX};
use crate::robot::{nominal_stance, RobotParams};

pub type CentroidalProblem = Problem<KnotModel, TerminalCost>;

/// One running knot: centroidal step plus running cost under fixed contact
/// flags.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotModel {
    pub params: Arc<RobotParams>,
    pub dt: f64,
    pub x_ref: State,
    pub u_ref: Control,
    pub weights: CostWeights,
    pub stance: [bool; 4],
    pub curvature: Curvature,
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl KnotModel {
    pub fn cost(&self) -> KnotCost<'_> {
        KnotCost {
            params: &self.params,
            weights: &self.weights,
            x_ref: &self.x_ref,
            u_ref: &self.u_ref,
            stance: self.stance,
            curvature: self.curvature,
        }
    }
}

fn control_of(u: &DVector<f64>) -> Control {
    Control(ControlVector::from_column_slice(u.as_slice()))
}

fn tangent_of(dx: &DVector<f64>) -> Tangent {
    Tangent(TangentVector::from_column_slice(dx.as_slice()))
}

fn dynamic<const R: usize, const C: usize>(m: &nalgebra::SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

fn dynamic_vector<const N: usize>(v: &nalgebra::SVector<f64, N>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

impl ActionModel for KnotModel {
    type State = State;

    fn nx(&self) -> usize {
        NDX
    }

    fn nu(&self) -> usize {
        NU
    }

    fn integrate(&self, x: &State, dx: &DVector<f64>) -> State {
        integrate(x, &tangent_of(dx))
    }

    fn difference(&self, x_ref: &State, x: &State) -> DVector<f64> {
        dynamic_vector(&difference(x_ref, x).0)
    }

    fn state_norm(&self, x: &State) -> f64 {
        x.max_abs()
    }

    fn calc(&self, x: &State, u: &DVector<f64>) -> Result<(State, f64), String> {
        let u = control_of(u);
        Ok((step(&self.params, x, &u, self.dt), self.cost().value(x, &u)))
    }

    fn calc_diff(&self, x: &State, u: &DVector<f64>) -> Result<(State, f64, ActionDerivatives), String> {
        let u = control_of(u);
        let (next, d) = step_with_derivatives(&self.params, x, &u, self.dt).map_err(|e| e.to_string())?;
        let c = self.cost().eval(x, &u);
        Ok((
            next,
            c.value,
            ActionDerivatives {
                fx: dynamic(&d.fx),
                fu: dynamic(&d.fu),
                lx: dynamic_vector(&c.lx),
                lu: dynamic_vector(&c.lu),
                lxx: dynamic(&c.lxx),
                luu: dynamic(&c.luu),
                lux: dynamic(&c.lux),
            },
        ))
    }

    fn lower_bound(&self) -> &DVector<f64> {
        &self.lower
    }

    fn upper_bound(&self) -> &DVector<f64> {
        &self.upper
    }
}

/// State tracking plus the kinematic barrier at the final knot.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalCost {
    pub params: Arc<RobotParams>,
    pub x_ref: State,
    pub weights: TangentVector,
    pub kinematic: f64,
    pub kinematic_margin: f64,
    pub curvature: Curvature,
}

impl TerminalModel<State> for TerminalCost {
    fn cost(&self, x: &State) -> f64 {
        let r = difference(&self.x_ref, x).0;
        0.5 * r.dot(&self.weights.component_mul(&r))
            + kinematic_barrier(&self.params, x, self.kinematic, self.kinematic_margin).value
    }

    fn cost_diff(&self, x: &State) -> (f64, DVector<f64>, DMatrix<f64>) {
        let s = state_cost_with(&self.x_ref, x, &self.weights, self.curvature);
        let b = kinematic_barrier(&self.params, x, self.kinematic, self.kinematic_margin);
        (
            s.value + b.value,
            dynamic_vector(&(s.lx + b.lx)),
            dynamic(&(s.lxx + b.lxx)),
        )
    }
}

/// Reference state and state weights of knot `k`.
fn knot_reference(
    params: &RobotParams,
    spec: &TaskSpec,
    phase: &ContactPhase,
    weights: &PhaseWeights,
    k: usize,
) -> (State, TangentVector) {
    use super::Component::*;
    let t = k as f64 * spec.dt;
    let mut position = spec.initial_position;
    let mut rpy = Vector3::new(0.0, 0.0, spec.initial_yaw);
    let mut v = Vector3::zeros();
    let mut w = Vector3::zeros();
    let mut q = TangentVector::zeros();
    let mut feet_w = weights.feet;
    let mut swing_offset = Vector3::zeros();
    q.fixed_rows_mut::<3>(0).copy_from(&weights.position);
    q.fixed_rows_mut::<3>(3).copy_from(&weights.orientation);
    q.fixed_rows_mut::<3>(6).copy_from(&weights.linear_velocity);
    q.fixed_rows_mut::<3>(9).copy_from(&weights.angular_velocity);

    for r in &spec.references {
        let active = match &r.window {
            Window::Always => true,
            Window::Phases(names) => names.contains(&phase.name),
            Window::Time(a, b) => t >= a - 1e-9 && t <= b + 1e-9,
        };
        if !active {
            continue;
        }
        let value = r.profile.at(t);
        let (target, slot): (&mut f64, Option<usize>) = match r.component {
            BaseX => (&mut position.x, Some(0)),
            BaseY => (&mut position.y, Some(1)),
            BaseZ => (&mut position.z, Some(2)),
            Roll => (&mut rpy.x, Some(3)),
            Pitch => (&mut rpy.y, Some(4)),
            Yaw => (&mut rpy.z, Some(5)),
            LinearVelocityX => (&mut v.x, Some(6)),
            LinearVelocityY => (&mut v.y, Some(7)),
            LinearVelocityZ => (&mut v.z, Some(8)),
            AngularVelocityX => (&mut w.x, Some(9)),
            AngularVelocityY => (&mut w.y, Some(10)),
            AngularVelocityZ => (&mut w.z, Some(11)),
            FeetX => {
                feet_w.x += r.weight;
                swing_offset.x = value;
                continue;
            }
            FeetY => {
                feet_w.y += r.weight;
                swing_offset.y = value;
                continue;
            }
            FeetZ => {
                feet_w.z += r.weight;
                swing_offset.z = value;
                continue;
            }
        };
        *target = value;
        if let Some(i) = slot {
            q[i] += r.weight;
        }
    }
    for leg in 0..4 {
        q.fixed_rows_mut::<3>(12 + 3 * leg).copy_from(&feet_w);
    }
    let mut feet = nominal_stance(params, Pose::from_yaw(position, rpy.z)).feet;
    for leg in (0..4).filter(|&l| !phase.stance[l]) {
        feet[leg] += swing_offset;
    }
    let pose = Pose::new(position, UnitQuaternion::from_euler_angles(rpy.x, rpy.y, rpy.z));
    (
        State {
            pose,
            v,
            omega: w,
            feet,
        },
        q,
    )
}

/// Gravity compensation shared by the stance legs; zero in flight.
fn gravity_compensation(params: &RobotParams, stance: &[bool; 4]) -> Control {
    let mut u = Control::zeros();
    let n = stance.iter().filter(|&&s| s).count();
    if n > 0 {
        let f = -params.mass() * params.gravity / n as f64;
        for leg in (0..4).filter(|&l| stance[l]) {
            u.set_force(leg, f);
        }
    }
    u
}

fn bounds(stance: &[bool; 4], force_max: f64) -> (DVector<f64>, DVector<f64>) {
    let mut lo = DVector::zeros(NU);
    let mut hi = DVector::zeros(NU);
    for (leg, &s) in stance.iter().enumerate() {
        let f = Control::force_index(leg);
        let v = Control::velocity_index(leg);
        if s {
            lo.rows_mut(f, 3).copy_from_slice(&[-force_max, -force_max, 0.0]);
            hi.rows_mut(f, 3).copy_from_slice(&[force_max, force_max, force_max]);
        } else {
            lo.rows_mut(v, 3).fill(f64::NEG_INFINITY);
            hi.rows_mut(v, 3).fill(f64::INFINITY);
        }
    }
    (lo, hi)
}

pub fn build_problem(params: &RobotParams, spec: &TaskSpec) -> Result<CentroidalProblem, TaskError> {
    build_problem_with(params, spec, Curvature::Exact)
}

/// [`build_problem`] with a chosen state-cost curvature.
pub fn build_problem_with(
    params: &RobotParams,
    spec: &TaskSpec,
    curvature: Curvature,
) -> Result<CentroidalProblem, TaskError> {
    let schedule = spec.schedule().map_err(TaskError::Spec)?;
    let shared = Arc::new(params.clone());
    let mut running = Vec::with_capacity(spec.knots());
    for (phase, ps) in schedule.iter().zip(&spec.phases) {
        let w = &ps.weights;
        let (lower, upper) = bounds(&phase.stance, spec.force_max);
        let mut control = ControlVector::zeros();
        for leg in 0..4 {
            control
                .fixed_rows_mut::<3>(Control::force_index(leg))
                .copy_from(&w.force);
            control
                .fixed_rows_mut::<3>(Control::velocity_index(leg))
                .copy_from(&w.foot_velocity);
        }
        for k in phase.knots() {
            let (x_ref, state) = knot_reference(params, spec, phase, w, k);
            running.push(KnotModel {
                params: shared.clone(),
                dt: spec.dt,
                x_ref,
                u_ref: gravity_compensation(params, &phase.stance),
                weights: CostWeights {
                    state,
                    control,
                    kinematic: w.kinematic,
                    friction: w.friction,
                    mu: w.mu,
                    kinematic_margin: w.kinematic_margin,
                },
                stance: phase.stance,
                curvature,
                lower: lower.clone(),
                upper: upper.clone(),
            });
        }
    }
    let last = schedule.last().expect("validated schedule is non-empty");
    let w = &spec.phases.last().expect("validated phases are non-empty").weights;
    let (x_ref, q) = knot_reference(params, spec, last, w, spec.knots());
    let terminal = TerminalCost {
        params: shared,
        x_ref,
        weights: spec.terminal_scale * q,
        kinematic: w.kinematic,
        kinematic_margin: w.kinematic_margin,
        curvature,
    };
    let x0 = nominal_stance(params, Pose::from_yaw(spec.initial_position, spec.initial_yaw));
    Ok(Problem { x0, running, terminal })
}

/// Cold start: the initial state everywhere, gravity compensation on the
/// stance legs.
pub fn initial_guess(problem: &CentroidalProblem) -> (Vec<State>, Vec<DVector<f64>>) {
    let xs = vec![problem.x0; problem.horizon() + 1];
    let us = problem.running.iter().map(|m| dynamic_vector(&m.u_ref.0)).collect();
    (xs, us)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{parse_task, squat_jump_task, standing_task};

    fn pinned(m: &KnotModel) -> usize {
        (0..NU).filter(|&i| m.lower[i] == m.upper[i]).count()
    }

    #[test]
    fn standing_knots_pin_every_foot_velocity() {
        let p = RobotParams::default_quadruped();
        let problem = build_problem(&p, &standing_task(&p)).unwrap();
        assert_eq!(problem.horizon(), 100);
        for m in &problem.running {
            assert_eq!(pinned(m), 12);
            for leg in 0..4 {
                let v = Control::velocity_index(leg);
                assert!((v..v + 3).all(|i| m.lower[i] == 0.0 && m.upper[i] == 0.0));
                assert_eq!(m.lower[Control::force_index(leg) + 2], 0.0);
            }
        }
    }

    #[test]
    fn feet_reference_lifts_only_swing_targets() {
        let p = RobotParams::default_quadruped();
        let text = r#"
            [task]
            name = "lift"
            duration = 0.2
            dt = 0.01
            [[phases]]
            name = "lift"
            duration = 0.2
            stance = [false, true, true, true]
            [[references]]
            component = "feet_z"
            value = 0.07
            weight = 500.0
        "#;
        let spec = parse_task(text, std::path::Path::new("lift.toml"), &p).unwrap();
        let m = &build_problem(&p, &spec).unwrap().running[3];
        assert_eq!(m.x_ref.feet[0].z, 0.07);
        assert!((1..4).all(|leg| m.x_ref.feet[leg].z == 0.0));
        assert!((0..4).all(|leg| m.weights.state[12 + 3 * leg + 2] == 500.0));
    }

    #[test]
    fn flight_knots_pin_every_force() {
        let p = RobotParams::default_quadruped();
        let spec = squat_jump_task(&p);
        let problem = build_problem(&p, &spec).unwrap();
        let flight = spec.schedule().unwrap().into_iter().find(|ph| ph.is_flight()).unwrap();
        for k in flight.knots() {
            let m = &problem.running[k];
            for leg in 0..4 {
                let f = Control::force_index(leg);
                assert!((f..f + 3).all(|i| m.lower[i] == 0.0 && m.upper[i] == 0.0));
                let v = Control::velocity_index(leg);
                assert!((v..v + 3).all(|i| m.lower[i] == f64::NEG_INFINITY && m.upper[i] == f64::INFINITY));
            }
        }
    }

    #[test]
    fn builders_are_pure() {
        let p = RobotParams::default_quadruped();
        let spec = squat_jump_task(&p);
        let a = build_problem(&p, &spec).unwrap();
        let b = build_problem(&p, &spec).unwrap();
        assert_eq!(a.x0, b.x0);
        assert_eq!(a.running, b.running);
        assert_eq!(a.terminal, b.terminal);
    }

    #[test]
    fn gravity_compensation_balances_weight() {
        let p = RobotParams::default_quadruped();
        let u = gravity_compensation(&p, &[true, false, true, true]);
        assert!((u.total_force() + p.mass() * p.gravity).norm() < 1e-12);
        assert_eq!(u.force(1), Vector3::zeros());
    }
}
