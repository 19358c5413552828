//! Box-constrained, feasibility-driven DDP.
//!
//! The solver is generic over an [`ActionModel`] that owns its state
//! manifold (through `integrate`/`difference`), its discrete dynamics, its
//! cost and its control bounds. Dynamics enter only to first order; cost
//! Hessians are taken from the model as-is.
//!
//! Gaps are `f_0 = x₀ ⊖ xs_0` and `f_{k+1} = f(xs_k, us_k) ⊖ xs_{k+1}`. A
//! step of length `α` closes a fraction `α` of every gap, so a single full
//! step yields a dynamically feasible rollout.

mod boxqp;

pub use boxqp::{solve_box_qp, BoxQpError, BoxQpSettings, BoxQpSolution};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("free-subspace Q_uu is not positive definite at knot {knot}")]
    NotPositiveDefinite { knot: usize },
    #[error("rollout diverged at knot {knot}")]
    Diverged { knot: usize },
    #[error("model evaluation failed at knot {knot}: {message}")]
    Model { knot: usize, message: String },
    #[error("initial guess has {got} {what}, expected {expected}")]
    Shape {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}

/// First-order dynamics and second-order cost at one knot.
#[derive(Debug, Clone)]
pub struct ActionDerivatives {
    pub fx: DMatrix<f64>,
    pub fu: DMatrix<f64>,
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub luu: DMatrix<f64>,
    /// `∂²l/∂u∂x`, `nu × nx`.
    pub lux: DMatrix<f64>,
}

/// One running knot of the optimal control problem.
pub trait ActionModel: Sync {
    type State: Clone + Send + Sync;

    /// Tangent dimension.
    fn nx(&self) -> usize;
    fn nu(&self) -> usize;
    fn integrate(&self, x: &Self::State, dx: &DVector<f64>) -> Self::State;
    /// `x_ref ⊖ x`, a tangent vector at `x`.
    fn difference(&self, x_ref: &Self::State, x: &Self::State) -> DVector<f64>;
    /// Largest magnitude in the state, for divergence detection.
    fn state_norm(&self, x: &Self::State) -> f64;
    /// Next state and running cost.
    fn calc(&self, x: &Self::State, u: &DVector<f64>) -> Result<(Self::State, f64), String>;
    /// Next state, running cost and derivatives.
    fn calc_diff(&self, x: &Self::State, u: &DVector<f64>) -> Result<(Self::State, f64, ActionDerivatives), String>;
    fn lower_bound(&self) -> &DVector<f64>;
    fn upper_bound(&self) -> &DVector<f64>;
}

/// Cost at the final knot.
pub trait TerminalModel<S>: Sync {
    fn cost(&self, x: &S) -> f64;
    /// `(value, l_x, l_xx)`.
    fn cost_diff(&self, x: &S) -> (f64, DVector<f64>, DMatrix<f64>);
}

pub struct Problem<M: ActionModel, T> {
    pub x0: M::State,
    pub running: Vec<M>,
    pub terminal: T,
}

impl<M: ActionModel, T: TerminalModel<M::State>> Problem<M, T> {
    pub fn horizon(&self) -> usize {
        self.running.len()
    }

    /// Total cost and next states of a rollout-free evaluation at `(xs, us)`.
    pub fn evaluate(&self, xs: &[M::State], us: &[DVector<f64>]) -> Result<(f64, Vec<M::State>), SolverError> {
        let mut cost = 0.0;
        let mut next = Vec::with_capacity(us.len());
        for (k, m) in self.running.iter().enumerate() {
            let (xn, c) = m
                .calc(&xs[k], &us[k])
                .map_err(|message| SolverError::Model { knot: k, message })?;
            cost += c;
            next.push(xn);
        }
        Ok((cost + self.terminal.cost(&xs[self.horizon()]), next))
    }

    /// Gaps `f_0 .. f_N` given the next states of every knot.
    pub fn gaps(&self, xs: &[M::State], next: &[M::State]) -> Vec<DVector<f64>> {
        let m0 = &self.running[0];
        let mut out = Vec::with_capacity(xs.len());
        out.push(m0.difference(&self.x0, &xs[0]));
        for (k, xn) in next.iter().enumerate() {
            out.push(self.running[k].difference(xn, &xs[k + 1]));
        }
        out
    }
}

/// Derivatives of the whole horizon at `(xs, us)`.
#[derive(Debug, Clone)]
pub struct Linearisation {
    pub knots: Vec<ActionDerivatives>,
    pub terminal_lx: DVector<f64>,
    pub terminal_lxx: DMatrix<f64>,
    pub gaps: Vec<DVector<f64>>,
    pub cost: f64,
}

impl Linearisation {
    pub fn gap_norm(&self) -> f64 {
        self.gaps.iter().map(|g| g.amax()).fold(0.0, f64::max)
    }
}

pub fn linearise<M: ActionModel, T: TerminalModel<M::State>>(
    problem: &Problem<M, T>,
    xs: &[M::State],
    us: &[DVector<f64>],
    parallel: bool,
) -> Result<Linearisation, SolverError> {
    let eval = |(k, m): (usize, &M)| {
        m.calc_diff(&xs[k], &us[k])
            .map_err(|message| SolverError::Model { knot: k, message })
    };
    let results: Vec<Result<(M::State, f64, ActionDerivatives), SolverError>> = if parallel {
        problem.running.par_iter().enumerate().map(eval).collect()
    } else {
        problem.running.iter().enumerate().map(eval).collect()
    };
    let mut knots = Vec::with_capacity(results.len());
    let mut next = Vec::with_capacity(results.len());
    let mut cost = 0.0;
    for r in results {
        let (xn, c, d) = r?;
        cost += c;
        next.push(xn);
        knots.push(d);
    }
    let n = problem.horizon();
    let (tc, terminal_lx, terminal_lxx) = problem.terminal.cost_diff(&xs[n]);
    Ok(Linearisation {
        knots,
        terminal_lx,
        terminal_lxx,
        gaps: problem.gaps(xs, &next),
        cost: cost + tc,
    })
}

/// Feedback policy `δu = k + K δx` for every knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Gains {
    pub feedback: Vec<DMatrix<f64>>,
    pub feedforward: Vec<DVector<f64>>,
    /// `Q_u` per knot, before regularisation; used for optimality checks.
    pub qu: Vec<DVector<f64>>,
    /// Free coordinates of every knot's box QP.
    pub free: Vec<Vec<usize>>,
}

/// Riccati recursion with a box QP per knot. `warm` seeds each QP.
pub fn backward_pass<M: ActionModel, T>(
    problem: &Problem<M, T>,
    lin: &Linearisation,
    us: &[DVector<f64>],
    mu: f64,
    qp: &BoxQpSettings,
    warm: Option<&[DVector<f64>]>,
) -> Result<Gains, SolverError> {
    let n = problem.running.len();
    let mut vxx = lin.terminal_lxx.clone();
    let mut vx = &lin.terminal_lx + &vxx * &lin.gaps[n];
    let mut feedback = vec![DMatrix::zeros(0, 0); n];
    let mut feedforward = vec![DVector::zeros(0); n];
    let mut qus = vec![DVector::zeros(0); n];
    let mut frees = vec![Vec::new(); n];
    for k in (0..n).rev() {
        let m = &problem.running[k];
        let d = &lin.knots[k];
        let vxx_fx = &vxx * &d.fx;
        let vxx_fu = &vxx * &d.fu;
        let qx = &d.lx + d.fx.transpose() * &vx;
        let qu = &d.lu + d.fu.transpose() * &vx;
        let qxx = &d.lxx + d.fx.transpose() * &vxx_fx;
        let qux = &d.lux + d.fu.transpose() * &vxx_fx;
        let mut quu = &d.luu + d.fu.transpose() * &vxx_fu;
        quu = 0.5 * (&quu + quu.transpose());
        let mut quu_reg = quu.clone();
        for i in 0..quu_reg.nrows() {
            quu_reg[(i, i)] += mu;
        }
        let lo = m.lower_bound() - &us[k];
        let hi = m.upper_bound() - &us[k];
        let x0 = warm.map(|w| w[k].clone()).unwrap_or_else(|| DVector::zeros(m.nu()));
        let sol =
            solve_box_qp(&quu_reg, &qu, &lo, &hi, &x0, qp).map_err(|_| SolverError::NotPositiveDefinite { knot: k })?;
        let mut gain = DMatrix::zeros(m.nu(), m.nx());
        if let Some(factor) = &sol.factor {
            let rhs = DMatrix::from_fn(sol.free.len(), m.nx(), |i, j| qux[(sol.free[i], j)]);
            let kf = -factor.solve(&rhs);
            for (i, &row) in sol.free.iter().enumerate() {
                gain.row_mut(row).copy_from(&kf.row(i));
            }
        }
        let kff = sol.x;
        let quu_k = &quu * &gain;
        vx = &qx + gain.transpose() * (&quu * &kff + &qu) + qux.transpose() * &kff;
        vxx = &qxx + gain.transpose() * &quu_k + gain.transpose() * &qux + qux.transpose() * &gain;
        vxx = 0.5 * (&vxx + vxx.transpose());
        vx += &vxx * &lin.gaps[k];
        feedback[k] = gain;
        feedforward[k] = kff;
        qus[k] = qu;
        frees[k] = sol.free;
    }
    Ok(Gains {
        feedback,
        feedforward,
        qu: qus,
        free: frees,
    })
}

/// Predicted cost change `ΔJ(α) = α·g + ½α²·h` of the linearised problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedChange {
    pub linear: f64,
    pub quadratic: f64,
}

impl ExpectedChange {
    pub fn at(&self, alpha: f64) -> f64 {
        alpha * self.linear + 0.5 * alpha * alpha * self.quadratic
    }
}

/// Linear rollout of the policy through the linearised dynamics.
pub fn expected_change(lin: &Linearisation, gains: &Gains) -> ExpectedChange {
    let mut dx = lin.gaps[0].clone();
    let (mut g, mut h) = (0.0, 0.0);
    for (k, d) in lin.knots.iter().enumerate() {
        let du = &gains.feedforward[k] + &gains.feedback[k] * &dx;
        g += d.lx.dot(&dx) + d.lu.dot(&du);
        h += dx.dot(&(&d.lxx * &dx)) + du.dot(&(&d.luu * &du)) + 2.0 * du.dot(&(&d.lux * &dx));
        dx = &d.fx * &dx + &d.fu * &du + &lin.gaps[k + 1];
    }
    g += lin.terminal_lx.dot(&dx);
    h += dx.dot(&(&lin.terminal_lxx * &dx));
    ExpectedChange {
        linear: g,
        quadratic: h,
    }
}

/// Result of a nonlinear rollout.
#[derive(Debug, Clone)]
pub struct Rollout<S> {
    pub xs: Vec<S>,
    pub us: Vec<DVector<f64>>,
    pub cost: f64,
}

fn clamp(u: DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    u.zip_zip_map(lo, hi, |v, l, h| v.max(l).min(h))
}

/// Nonlinear rollout of the policy with step length `alpha`; a fraction
/// `1 - alpha` of every gap is kept.
pub fn forward_pass<M: ActionModel, T: TerminalModel<M::State>>(
    problem: &Problem<M, T>,
    xs: &[M::State],
    us: &[DVector<f64>],
    gains: &Gains,
    gaps: &[DVector<f64>],
    alpha: f64,
    divergence: f64,
) -> Result<Rollout<M::State>, SolverError> {
    let n = problem.horizon();
    let m0 = &problem.running[0];
    let mut x = if alpha == 1.0 {
        problem.x0.clone()
    } else {
        m0.integrate(&problem.x0, &((alpha - 1.0) * &gaps[0]))
    };
    let mut new_xs = Vec::with_capacity(n + 1);
    let mut new_us = Vec::with_capacity(n);
    let mut cost = 0.0;
    for k in 0..n {
        let m = &problem.running[k];
        let dx = m.difference(&x, &xs[k]);
        let u = clamp(
            &us[k] + alpha * &gains.feedforward[k] + &gains.feedback[k] * dx,
            m.lower_bound(),
            m.upper_bound(),
        );
        let (next, c) = m
            .calc(&x, &u)
            .map_err(|message| SolverError::Model { knot: k, message })?;
        if !c.is_finite() {
            return Err(SolverError::Diverged { knot: k });
        }
        cost += c;
        new_xs.push(x);
        new_us.push(u);
        x = if alpha == 1.0 {
            next
        } else {
            m.integrate(&next, &((alpha - 1.0) * &gaps[k + 1]))
        };
        if !(m.state_norm(&x) <= divergence) {
            return Err(SolverError::Diverged { knot: k + 1 });
        }
    }
    cost += problem.terminal.cost(&x);
    new_xs.push(x);
    if !cost.is_finite() {
        return Err(SolverError::Diverged { knot: n });
    }
    Ok(Rollout {
        xs: new_xs,
        us: new_us,
        cost,
    })
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub max_iterations: usize,
    /// Threshold on `|ΔJ(1)|`.
    pub stop_threshold: f64,
    pub gap_threshold: f64,
    pub reg_init: f64,
    pub reg_min: f64,
    pub reg_max: f64,
    pub reg_factor: f64,
    /// Line search tries `α = 2⁻ⁱ` for `i = 0..line_search_steps`.
    pub line_search_steps: u32,
    pub accept_ratio: f64,
    /// Infeasible iterates may accept a cost increase up to this multiple
    /// of a predicted increase.
    pub accept_increase_ratio: f64,
    pub divergence: f64,
    pub parallel: bool,
    pub qp: BoxQpSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            stop_threshold: 1e-6,
            gap_threshold: 1e-9,
            reg_init: 1e-9,
            reg_min: 1e-9,
            reg_max: 1e9,
            reg_factor: 10.0,
            line_search_steps: 11,
            accept_ratio: 0.1,
            accept_increase_ratio: 2.0,
            divergence: 1e6,
            parallel: false,
            qp: BoxQpSettings::default(),
        }
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub cost: f64,
    pub expected_improvement: f64,
    pub alpha: f64,
    pub reg: f64,
    pub gap_norm: f64,
    pub stop_metric: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
}

impl SolverTrace {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialise") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    RegularisationLimit,
}

#[derive(Debug, Clone)]
pub struct Solution<S> {
    pub xs: Vec<S>,
    pub us: Vec<DVector<f64>>,
    pub feedback: Vec<DMatrix<f64>>,
    pub feedforward: Vec<DVector<f64>>,
    pub status: Status,
    pub iterations: usize,
    pub cost: f64,
    pub gap_norm: f64,
    pub stop_metric: f64,
    /// Largest `|Q_u|` over free coordinates at the last backward pass.
    pub free_gradient: f64,
}

impl<S> Solution<S> {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

fn free_gradient(gains: &Gains) -> f64 {
    gains
        .qu
        .iter()
        .zip(&gains.free)
        .flat_map(|(q, f)| f.iter().map(move |&i| q[i].abs()))
        .fold(0.0, f64::max)
}

pub fn solve<M: ActionModel, T: TerminalModel<M::State>>(
    problem: &Problem<M, T>,
    mut xs: Vec<M::State>,
    mut us: Vec<DVector<f64>>,
    settings: &Settings,
) -> Result<(Solution<M::State>, SolverTrace), SolverError> {
    let n = problem.horizon();
    if xs.len() != n + 1 {
        return Err(SolverError::Shape {
            what: "states",
            got: xs.len(),
            expected: n + 1,
        });
    }
    if us.len() != n {
        return Err(SolverError::Shape {
            what: "controls",
            got: us.len(),
            expected: n,
        });
    }
    let mut trace = SolverTrace::default();
    let mut mu = settings.reg_init;
    let mut lin = linearise(problem, &xs, &us, settings.parallel)?;
    let mut gains: Option<Gains> = None;
    let mut status = Status::MaxIterations;
    let mut iterations = settings.max_iterations;
    let mut stop = f64::INFINITY;

    for iter in 0..settings.max_iterations {
        let g = loop {
            let warm = gains.as_ref().map(|g| g.feedforward.as_slice());
            match backward_pass(problem, &lin, &us, mu, &settings.qp, warm) {
                Ok(g) => break Some(g),
                Err(SolverError::NotPositiveDefinite { .. }) => {
                    mu *= settings.reg_factor;
                    if mu > settings.reg_max {
                        break None;
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let Some(g) = g else {
            status = Status::RegularisationLimit;
            iterations = iter;
            break;
        };
        let model = expected_change(&lin, &g);
        stop = model.at(1.0).abs();
        let gap_norm = lin.gap_norm();
        let feasible = gap_norm < settings.gap_threshold;
        gains = Some(g);
        if feasible && stop < settings.stop_threshold {
            status = Status::Converged;
            iterations = iter;
            break;
        }

        let g = gains.as_ref().unwrap();
        let mut accepted = None;
        for i in 0..settings.line_search_steps {
            let alpha = 0.5f64.powi(i as i32);
            let Ok(roll) = forward_pass(problem, &xs, &us, g, &lin.gaps, alpha, settings.divergence) else {
                continue;
            };
            let actual = lin.cost - roll.cost;
            let expected = -model.at(alpha);
            let ok = if expected >= 0.0 {
                actual > settings.accept_ratio * expected
            } else {
                !feasible && actual > settings.accept_increase_ratio * expected
            };
            if ok {
                accepted = Some((alpha, roll, expected));
                break;
            }
        }
        match accepted {
            Some((alpha, roll, expected)) => {
                xs = roll.xs;
                us = roll.us;
                if alpha == 1.0 {
                    mu = (mu / settings.reg_factor).max(settings.reg_min);
                }
                lin = linearise(problem, &xs, &us, settings.parallel)?;
                trace.records.push(IterationRecord {
                    iter,
                    cost: lin.cost,
                    expected_improvement: expected,
                    alpha,
                    reg: mu,
                    gap_norm: lin.gap_norm(),
                    stop_metric: stop,
                });
            }
            None => {
                mu *= settings.reg_factor;
                trace.records.push(IterationRecord {
                    iter,
                    cost: lin.cost,
                    expected_improvement: 0.0,
                    alpha: 0.0,
                    reg: mu,
                    gap_norm,
                    stop_metric: stop,
                });
                if mu > settings.reg_max {
                    status = Status::RegularisationLimit;
                    iterations = iter + 1;
                    break;
                }
            }
        }
    }

    let gains = match gains {
        Some(g) => g,
        None => backward_pass(problem, &lin, &us, mu.min(settings.reg_max), &settings.qp, None)?,
    };
    let solution = Solution {
        gap_norm: lin.gap_norm(),
        cost: lin.cost,
        free_gradient: free_gradient(&gains),
        xs,
        us,
        feedback: gains.feedback,
        feedforward: gains.feedforward,
        status,
        iterations,
        stop_metric: stop,
    };
    Ok((solution, trace))
}
