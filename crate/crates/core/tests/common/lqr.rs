//! Linear-quadratic fixtures with closed-form or enumerated optima.

use centroidal_to::fddp::{ActionDerivatives, ActionModel, Problem, TerminalModel};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Linear dynamics, quadratic cost, Euclidean state.
pub struct Linear {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub lo: DVector<f64>,
    pub hi: DVector<f64>,
}

impl ActionModel for Linear {
    type State = DVector<f64>;
    fn nx(&self) -> usize {
        self.a.nrows()
    }
    fn nu(&self) -> usize {
        self.b.ncols()
    }
    fn integrate(&self, x: &DVector<f64>, dx: &DVector<f64>) -> DVector<f64> {
        x + dx
    }
    fn difference(&self, x_ref: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        x_ref - x
    }
    fn state_norm(&self, x: &DVector<f64>) -> f64 {
        x.amax()
    }
    fn calc(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<(DVector<f64>, f64), String> {
        Ok((
            &self.a * x + &self.b * u,
            0.5 * x.dot(&(&self.q * x)) + 0.5 * u.dot(&(&self.r * u)),
        ))
    }
    fn calc_diff(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<(DVector<f64>, f64, ActionDerivatives), String> {
        let (next, cost) = self.calc(x, u)?;
        Ok((
            next,
            cost,
            ActionDerivatives {
                fx: self.a.clone(),
                fu: self.b.clone(),
                lx: &self.q * x,
                lu: &self.r * u,
                lxx: self.q.clone(),
                luu: self.r.clone(),
                lux: DMatrix::zeros(self.nu(), self.nx()),
            },
        ))
    }
    fn lower_bound(&self) -> &DVector<f64> {
        &self.lo
    }
    fn upper_bound(&self) -> &DVector<f64> {
        &self.hi
    }
}

pub struct Quadratic(pub DMatrix<f64>);

impl TerminalModel<DVector<f64>> for Quadratic {
    fn cost(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.0 * x))
    }
    fn cost_diff(&self, x: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        (self.cost(x), &self.0 * x, self.0.clone())
    }
}

pub fn spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * floor
}

pub fn random_lqr(rng: &mut ChaCha8Rng, nx: usize, nu: usize, horizon: usize) -> Problem<Linear, Quadratic> {
    let a = DMatrix::identity(nx, nx) + DMatrix::from_fn(nx, nx, |_, _| rng.random_range(-0.2..0.2));
    let b = DMatrix::from_fn(nx, nu, |_, _| rng.random_range(-1.0..1.0));
    let q = spd(rng, nx, 0.1);
    let r = spd(rng, nu, 0.5);
    let running = (0..horizon)
        .map(|_| Linear {
            a: a.clone(),
            b: b.clone(),
            q: q.clone(),
            r: r.clone(),
            lo: DVector::from_element(nu, f64::NEG_INFINITY),
            hi: DVector::from_element(nu, f64::INFINITY),
        })
        .collect();
    Problem {
        x0: DVector::from_fn(nx, |_, _| rng.random_range(-1.0..1.0)),
        running,
        terminal: Quadratic(spd(rng, nx, 0.1)),
    }
}

/// Discrete Riccati recursion: gains and cost-to-go matrices.
pub fn riccati(p: &Problem<Linear, Quadratic>) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
    let mut pm = p.terminal.0.clone();
    let mut gains = vec![DMatrix::zeros(0, 0); p.running.len()];
    for k in (0..p.running.len()).rev() {
        let m = &p.running[k];
        let s = &m.r + m.b.transpose() * &pm * &m.b;
        let kk = -s.try_inverse().unwrap() * m.b.transpose() * &pm * &m.a;
        pm = &m.q + m.a.transpose() * &pm * &m.a + m.a.transpose() * &pm * &m.b * &kk;
        pm = 0.5 * (&pm + pm.transpose());
        gains[k] = kk;
    }
    (gains, pm)
}

pub fn random_init(rng: &mut ChaCha8Rng, p: &Problem<Linear, Quadratic>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let nx = p.running[0].nx();
    let nu = p.running[0].nu();
    let xs = (0..=p.running.len())
        .map(|_| DVector::from_fn(nx, |_, _| rng.random_range(-2.0..2.0)))
        .collect();
    let us = (0..p.running.len())
        .map(|_| DVector::from_fn(nu, |_, _| rng.random_range(-2.0..2.0)))
        .collect();
    (xs, us)
}

/// Global minimiser of a convex box QP by enumerating every active set.
pub fn enumerate_box_qp(h: &DMatrix<f64>, g: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    let n = g.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut x = DVector::zeros(n);
        let mut free = Vec::new();
        let mut c = code;
        for i in 0..n {
            match c % 3 {
                0 => x[i] = lo[i],
                1 => x[i] = hi[i],
                _ => free.push(i),
            }
            c /= 3;
        }
        if x.iter().any(|v| !v.is_finite()) {
            continue;
        }
        if !free.is_empty() {
            let hf = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let mut rhs = DVector::from_fn(free.len(), |a, _| -g[free[a]]);
            for (a, &i) in free.iter().enumerate() {
                for j in 0..n {
                    if !free.contains(&j) {
                        rhs[a] -= h[(i, j)] * x[j];
                    }
                }
            }
            let sol = hf.lu().solve(&rhs).unwrap();
            for (a, &i) in free.iter().enumerate() {
                x[i] = sol[a];
            }
        }
        if (0..n).any(|i| x[i] < lo[i] - 1e-12 || x[i] > hi[i] + 1e-12) {
            continue;
        }
        let v = 0.5 * x.dot(&(h * &x)) + g.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    best.unwrap().1
}

pub fn double_integrator(bound: f64) -> Problem<Linear, Quadratic> {
    let dt = 0.5;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.5 * dt * dt, dt]);
    let running = (0..3)
        .map(|_| Linear {
            a: a.clone(),
            b: b.clone(),
            q: DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.1])),
            r: DMatrix::from_element(1, 1, 0.01),
            lo: DVector::from_element(1, -bound),
            hi: DVector::from_element(1, bound),
        })
        .collect();
    Problem {
        x0: DVector::from_vec(vec![1.0, 0.5]),
        running,
        terminal: Quadratic(DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 10.0]))),
    }
}

/// Condensed QP over `(u_0, u_1, u_2)` for the horizon-3 problem.
pub fn condensed(p: &Problem<Linear, Quadratic>) -> (DMatrix<f64>, DVector<f64>) {
    let n = p.running.len();
    let m = &p.running[0];
    // x_k = A^k x0 + Σ_j A^{k-1-j} B u_j
    let mut h = DMatrix::zeros(n, n);
    let mut g = DVector::zeros(n);
    for k in 1..=n {
        let mut free = m.a.pow(k as u32) * &p.x0;
        let mut s = DMatrix::zeros(2, n);
        for j in 0..k {
            s.set_column(j, &(m.a.pow((k - 1 - j) as u32) * &m.b).column(0));
        }
        let w = if k == n { &p.terminal.0 } else { &m.q };
        h += s.transpose() * w * &s;
        g += s.transpose() * w * &free;
        free.fill(0.0);
    }
    for j in 0..n {
        h[(j, j)] += m.r[(0, 0)];
    }
    (h, g)
}
