//! Finite-difference verification of the analytic derivatives.
//!
//! Each family is compared against central differences on seeded random
//! knots. The error of one sample is `max|A - B| / (1 + max|B|)`; a family
//! reports the worst sample.

use std::fmt;

use nalgebra::{SMatrix, SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::centroidal::{step, step_derivatives, Control, ControlVector, NU};
use crate::cost::{control_cost, friction_penalty, kinematic_barrier, state_cost_with, Curvature};
use crate::manifold::{
    difference, difference_hessian, difference_jacobian, exp_so3, integrate, Pose, State, Tangent, TangentVector, NDX,
};
use crate::robot::{
    composite_inertia, configuration_jacobian, implicit_configuration, nominal_stance, JointConfiguration, RobotParams,
};

/// Seeded generator of plausible knots around a standing pose.
#[derive(Debug, Clone)]
pub struct KnotSampler {
    rng: ChaCha8Rng,
}

impl KnotSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Tilted, moving base over jittered footholds.
    pub fn state(&mut self, params: &RobotParams) -> State {
        let r = &mut self.rng;
        let yaw = r.random_range(-3.0..3.0);
        let position = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), 0.5);
        let mut x = nominal_stance(params, Pose::from_yaw(position, yaw));
        let tilt = Vector3::new(r.random_range(-0.2..0.2), r.random_range(-0.2..0.2), 0.0);
        let lift = Vector3::new(0.0, 0.0, r.random_range(-0.1..0.04));
        x.pose = Pose::new(x.pose.position + lift, x.pose.orientation() * exp_so3(&tilt));
        for f in &mut x.feet {
            *f += Vector3::new(
                r.random_range(-0.08..0.08),
                r.random_range(-0.05..0.05),
                r.random_range(0.0..0.05),
            );
        }
        x.v = Vector3::from_fn(|_, _| r.random_range(-1.0..1.0));
        x.omega = Vector3::from_fn(|_, _| r.random_range(-1.0..1.0));
        x
    }

    pub fn control(&mut self) -> Control {
        let r = &mut self.rng;
        let mut u = Control::zeros();
        for leg in 0..4 {
            u.set_force(
                leg,
                Vector3::new(
                    r.random_range(-60.0..60.0),
                    r.random_range(-60.0..60.0),
                    r.random_range(0.0..300.0),
                ),
            );
            u.set_foot_velocity(leg, Vector3::from_fn(|_, _| r.random_range(-0.5..0.5)));
        }
        u
    }

    /// `x ⊕ δ` with every tangent entry of `δ` uniform in `±scale`.
    pub fn displaced(&mut self, x: &State, scale: f64) -> State {
        let d = TangentVector::from_fn(|_, _| self.rng.random_range(-scale..scale));
        integrate(x, &Tangent(d))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }
}

/// Result for one derivative family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Family {
    pub name: &'static str,
    pub max_error: f64,
    pub threshold: f64,
    pub samples: usize,
}

impl Family {
    pub fn passed(&self) -> bool {
        self.max_error < self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub families: Vec<Family>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.families.iter().all(Family::passed)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        self.families.iter().filter(|f| !f.passed()).map(|f| f.name).collect()
    }

    pub fn family(&self, name: &str) -> Option<&Family> {
        self.families.iter().find(|f| f.name == name)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "derivative check, seed {}", self.seed)?;
        for fam in &self.families {
            writeln!(
                f,
                "  {:<34} {:>10.3e}  (threshold {:.0e}, {} samples)  {}",
                fam.name,
                fam.max_error,
                fam.threshold,
                fam.samples,
                if fam.passed() { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub seed: u64,
    pub samples: usize,
    /// Curvature of the state cost under test.
    pub curvature: Curvature,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100,
            curvature: Curvature::Exact,
        }
    }
}

/// `max|a - b| / (1 + max|b|)`.
pub fn relative_error<const R: usize, const C: usize>(a: &SMatrix<f64, R, C>, b: &SMatrix<f64, R, C>) -> f64 {
    (a - b).amax() / (1.0 + b.amax())
}

/// Central differences along the 24 chart directions at `x`.
pub fn fd_state<const R: usize>(x: &State, h: f64, f: impl Fn(&State) -> SVector<f64, R>) -> SMatrix<f64, R, NDX> {
    let mut out = SMatrix::<f64, R, NDX>::zeros();
    for c in 0..NDX {
        let mut d = TangentVector::zeros();
        d[c] = h;
        let a = f(&integrate(x, &Tangent(d)));
        let b = f(&integrate(x, &Tangent(-d)));
        out.set_column(c, &((a - b) / (2.0 * h)));
    }
    out
}

pub fn fd_control<const R: usize>(u: &Control, h: f64, f: impl Fn(&Control) -> SVector<f64, R>) -> SMatrix<f64, R, NU> {
    let mut out = SMatrix::<f64, R, NU>::zeros();
    for c in 0..NU {
        let (mut a, mut b) = (*u, *u);
        a.0[c] += h;
        b.0[c] -= h;
        out.set_column(c, &((f(&a) - f(&b)) / (2.0 * h)));
    }
    out
}

fn symmetric<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    0.5 * (m + m.transpose())
}

fn scalar(v: f64) -> SVector<f64, 1> {
    SVector::<f64, 1>::new(v)
}

struct Tally {
    families: Vec<Family>,
}

impl Tally {
    fn record(&mut self, name: &'static str, threshold: f64, error: f64) {
        match self.families.iter_mut().find(|f| f.name == name) {
            Some(f) => {
                f.max_error = f.max_error.max(error);
                f.samples += 1;
            }
            None => self.families.push(Family {
                name,
                max_error: error,
                threshold,
                samples: 1,
            }),
        }
    }
}

const DT: f64 = 0.01;
const H: f64 = 1e-6;
const FIRST_ORDER: f64 = 1e-6;
const SECOND_ORDER: f64 = 1e-5;
const BARRIER_MARGIN: f64 = 0.12;

pub fn check_derivatives(params: &RobotParams, options: &CheckOptions) -> CheckReport {
    let mut s = KnotSampler::new(options.seed);
    let mut t = Tally { families: Vec::new() };
    for _ in 0..options.samples {
        let x = s.state(params);
        let u = s.control();
        let x_ref = s.displaced(&x, 0.6);

        // Manifold difference.
        let j = difference_jacobian(&x_ref, &x);
        let fd = fd_state(&x, H, |y| difference(&x_ref, y).0);
        t.record("manifold.difference_jacobian", FIRST_ORDER, relative_error(&j, &fd));
        let hess = difference_hessian(&x_ref, &x);
        let mut worst: f64 = 0.0;
        for i in 0..6 {
            let row = fd_state(&x, H, |y| difference_jacobian(&x_ref, y).row(i).transpose());
            let fd_slice = symmetric(&row).fixed_view::<6, 6>(0, 0).into_owned();
            worst = worst.max(relative_error(&hess.slices[i], &fd_slice));
        }
        t.record("manifold.difference_hessian", SECOND_ORDER, worst);

        // Kinematics and inertia.
        let q = implicit_configuration(params, &x);
        if let Ok(jq) = configuration_jacobian(params, &x) {
            let fd = fd_state(&x, H, |y| SVector::<f64, 12>::from(implicit_configuration(params, y).0));
            t.record(
                "kinematics.configuration_jacobian",
                SECOND_ORDER,
                relative_error(&jq, &fd),
            );
        }
        let inertia = composite_inertia(params, &q);
        let (mut e_i, mut e_c): (f64, f64) = (0.0, 0.0);
        for k in 0..12 {
            let shifted = |d: f64| {
                let mut qq = q;
                qq.0[k] += d;
                composite_inertia(params, &JointConfiguration(qq.0))
            };
            let (a, b) = (shifted(H), shifted(-H));
            let di = (a.inertia - b.inertia) / (2.0 * H);
            let dc = (a.com - b.com) / (2.0 * H);
            e_i = e_i.max(relative_error(&inertia.d_inertia[k], &di));
            e_c = e_c.max(relative_error(&inertia.d_com.column(k).into_owned(), &dc));
        }
        t.record("inertia.d_inertia", SECOND_ORDER, e_i);
        t.record("inertia.d_com", SECOND_ORDER, e_c);

        // Discrete dynamics.
        if let Ok(d) = step_derivatives(params, &x, &u, DT) {
            let next = step(params, &x, &u, DT);
            let fx = fd_state(&x, H, |y| difference(&step(params, y, &u, DT), &next).0);
            let fu = fd_control(&u, H, |v| difference(&step(params, &x, v, DT), &next).0);
            t.record("dynamics.fx", SECOND_ORDER, relative_error(&d.fx, &fx));
            t.record("dynamics.fu", SECOND_ORDER, relative_error(&d.fu, &fu));
        }

        // Costs.
        let weights = TangentVector::from_fn(|_, _| s.uniform(1.0, 100.0));
        let sc = state_cost_with(&x_ref, &x, &weights, options.curvature);
        let g = fd_state(&x, H, |y| {
            scalar(state_cost_with(&x_ref, y, &weights, options.curvature).value)
        });
        t.record("state_cost.l_x", SECOND_ORDER, relative_error(&sc.lx, &g.transpose()));
        let hxx = symmetric(&fd_state(&x, H, |y| {
            state_cost_with(&x_ref, y, &weights, options.curvature).lx
        }));
        t.record("state_cost.l_xx", SECOND_ORDER, relative_error(&sc.lxx, &hxx));

        let u_ref = s.control();
        let r = ControlVector::from_fn(|_, _| s.uniform(1e-4, 1e-2));
        let cc = control_cost(&u_ref, &u, &r);
        let g = fd_control(&u, 1e-3, |v| scalar(control_cost(&u_ref, v, &r).value));
        t.record("control_cost.l_u", SECOND_ORDER, relative_error(&cc.lu, &g.transpose()));
        let huu = fd_control(&u, 1e-3, |v| control_cost(&u_ref, v, &r).lu);
        t.record("control_cost.l_uu", SECOND_ORDER, relative_error(&cc.luu, &huu));

        // A wide margin keeps the barrier active on most sampled legs.
        let kb = kinematic_barrier(params, &x, 1e3, BARRIER_MARGIN);
        let g = fd_state(&x, 1e-7, |y| {
            scalar(kinematic_barrier(params, y, 1e3, BARRIER_MARGIN).value)
        });
        t.record(
            "kinematic_barrier.l_x",
            SECOND_ORDER,
            relative_error(&kb.lx, &g.transpose()),
        );

        let stance = [true; 4];
        let fp = friction_penalty(&u, &stance, 0.7, 10.0);
        let g = fd_control(&u, H, |v| scalar(friction_penalty(v, &stance, 0.7, 10.0).value));
        t.record("friction.l_u", SECOND_ORDER, relative_error(&fp.lu, &g.transpose()));
        let huu = fd_control(&u, H, |v| friction_penalty(v, &stance, 0.7, 10.0).lu);
        t.record("friction.l_uu", SECOND_ORDER, relative_error(&fp.luu, &huu));
    }
    CheckReport {
        seed: options.seed,
        families: t.families,
    }
}
