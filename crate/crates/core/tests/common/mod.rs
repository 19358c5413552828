#![allow(dead_code)]

pub mod lqr;

use centroidal_to::centroidal::Control;
use centroidal_to::manifold::{exp_so3, Pose, State};
use centroidal_to::robot::{leg_fk, nominal_stance, JointConfiguration, LegId, RobotParams};
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_state(rng: &mut ChaCha8Rng, p: &RobotParams) -> State {
    let yaw = rng.random_range(-3.0..3.0);
    let mut x = nominal_stance(
        p,
        Pose::from_yaw(
            Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.5),
            yaw,
        ),
    );
    let tilt = Vector3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), 0.0);
    x.pose = Pose::new(
        x.pose.position + Vector3::new(0.0, 0.0, rng.random_range(-0.1..0.04)),
        x.pose.orientation() * exp_so3(&tilt),
    );
    for f in &mut x.feet {
        *f += Vector3::new(
            rng.random_range(-0.08..0.08),
            rng.random_range(-0.05..0.05),
            rng.random_range(0.0..0.05),
        );
    }
    x.v = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    x.omega = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    x
}

pub fn random_control(rng: &mut ChaCha8Rng) -> Control {
    let mut u = Control::zeros();
    for leg in 0..4 {
        u.set_force(
            leg,
            Vector3::new(
                rng.random_range(-60.0..60.0),
                rng.random_range(-60.0..60.0),
                rng.random_range(0.0..300.0),
            ),
        );
        u.set_foot_velocity(
            leg,
            Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
            ),
        );
    }
    u
}

pub fn random_configuration(rng: &mut ChaCha8Rng, p: &RobotParams) -> JointConfiguration {
    let mut q = JointConfiguration::default();
    for leg in LegId::ALL {
        let s = p.leg(leg).knee.sign();
        q.set_leg(
            leg.index(),
            [
                rng.random_range(-0.6..0.6),
                rng.random_range(-1.5..1.5),
                s * rng.random_range(0.2..2.5),
            ],
        );
    }
    q
}

/// Brute-force mass integral: every link becomes a cloud of equal point
/// masses whose second moment reproduces its rotational inertia, placed with
/// independently composed joint rotations.
pub fn point_cloud_inertia(
    p: &RobotParams,
    q: &JointConfiguration,
    rng: &mut ChaCha8Rng,
) -> (Matrix3<f64>, Vector3<f64>) {
    let n = 1000;
    let mut points: Vec<(f64, Vector3<f64>)> = Vec::new();
    let mut add_link = |mass: f64,
                        inertia: Matrix3<f64>,
                        origin: Vector3<f64>,
                        rot: Matrix3<f64>,
                        com: Vector3<f64>,
                        rng: &mut ChaCha8Rng| {
        let cov = (Matrix3::identity() * inertia.trace() / 2.0 - inertia) / mass;
        let chol = cov.cholesky().unwrap().l();
        let mut raw: Vec<Vector3<f64>> = (0..n)
            .map(|_| {
                let mut g = || -> f64 {
                    let u1: f64 = 1.0 - rand::Rng::random::<f64>(&mut *rng);
                    let u2: f64 = rand::Rng::random::<f64>(&mut *rng);
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                };
                Vector3::new(g(), g(), g())
            })
            .collect();
        let mean = raw.iter().sum::<Vector3<f64>>() / n as f64;
        raw.iter_mut().for_each(|s| *s -= mean);
        let emp = raw.iter().map(|s| s * s.transpose()).sum::<Matrix3<f64>>() / n as f64;
        let white = emp.cholesky().unwrap().l().try_inverse().unwrap();
        for s in raw {
            points.push((mass / n as f64, origin + rot * (com + chol * white * s)));
        }
    };
    let b = &p.base;
    add_link(b.mass, b.inertia, Vector3::zeros(), Matrix3::identity(), b.com, rng);
    for (i, leg) in p.legs.iter().enumerate() {
        let a = q.leg(i);
        let r0 = Rotation3::from_euler_angles(a[0], 0.0, 0.0).into_inner();
        let r1 = r0 * Rotation3::from_euler_angles(0.0, a[1], 0.0).into_inner();
        let r2 = r1 * Rotation3::from_euler_angles(0.0, a[2], 0.0).into_inner();
        let o1 = leg.hip + r0 * Vector3::new(0.0, leg.lateral_offset, 0.0);
        let o2 = o1 + r1 * Vector3::new(0.0, 0.0, -leg.thigh);
        for (k, (rot, origin)) in [(r0, leg.hip), (r1, o1), (r2, o2)].into_iter().enumerate() {
            let link = &leg.links[k];
            add_link(link.mass, link.inertia, origin, rot, link.com, rng);
        }
    }
    let m: f64 = points.iter().map(|(m, _)| m).sum();
    let com = points.iter().map(|(m, x)| *m * x).sum::<Vector3<f64>>() / m;
    let inertia = points
        .iter()
        .map(|(m, x)| {
            let d = x - com;
            *m * (Matrix3::identity() * d.norm_squared() - d * d.transpose())
        })
        .sum();
    (inertia, com)
}

/// `max|a - b| / (1 + max|b|)`.
pub fn relative_error<const R: usize, const C: usize>(
    analytic: &nalgebra::SMatrix<f64, R, C>,
    reference: &nalgebra::SMatrix<f64, R, C>,
) -> f64 {
    (analytic - reference).amax() / (1.0 + reference.amax())
}

/// Central differences of a tangent-valued or scalar-gradient map along the
/// 24 chart directions at `x`.
pub fn fd_state_jacobian<const R: usize>(
    x: &State,
    h: f64,
    f: impl Fn(&State) -> nalgebra::SVector<f64, R>,
) -> nalgebra::SMatrix<f64, R, 24> {
    use centroidal_to::manifold::{integrate, Tangent, TangentVector};
    let mut out = nalgebra::SMatrix::<f64, R, 24>::zeros();
    for c in 0..24 {
        let mut d = TangentVector::zeros();
        d[c] = h;
        let a = f(&integrate(x, &Tangent(d)));
        let b = f(&integrate(x, &Tangent(-d)));
        out.set_column(c, &((a - b) / (2.0 * h)));
    }
    out
}

pub fn fd_state_gradient(x: &State, h: f64, f: impl Fn(&State) -> f64) -> nalgebra::SVector<f64, 24> {
    fd_state_jacobian::<1>(x, h, |y| nalgebra::SVector::<f64, 1>::new(f(y))).transpose()
}

pub fn fd_control_jacobian<const R: usize>(
    u: &Control,
    h: f64,
    f: impl Fn(&Control) -> nalgebra::SVector<f64, R>,
) -> nalgebra::SMatrix<f64, R, 24> {
    let mut out = nalgebra::SMatrix::<f64, R, 24>::zeros();
    for c in 0..24 {
        let (mut a, mut b) = (*u, *u);
        a.0[c] += h;
        b.0[c] -= h;
        out.set_column(c, &((f(&a) - f(&b)) / (2.0 * h)));
    }
    out
}

pub fn symmetric_part<const N: usize>(m: &nalgebra::SMatrix<f64, N, N>) -> nalgebra::SMatrix<f64, N, N> {
    0.5 * (m + m.transpose())
}

/// A reference state displaced from `x` by a sizeable pose and velocity offset.
pub fn displaced_reference(rng: &mut ChaCha8Rng, x: &State, scale: f64) -> State {
    use centroidal_to::manifold::{integrate, Tangent, TangentVector};
    let d = TangentVector::from_fn(|_, _| rng.random_range(-scale..scale));
    integrate(x, &Tangent(d))
}

/// Reachable hip-frame foot target, read off FK at a random joint sample.
pub fn random_reachable(rng: &mut ChaCha8Rng, p: &RobotParams, leg: LegId) -> Vector3<f64> {
    let l = p.leg(leg);
    let w = p.workspace;
    loop {
        let q = [
            rng.random_range(-0.5..0.5),
            rng.random_range(-1.2..1.2),
            l.knee.sign() * rng.random_range(0.05..2.4),
        ];
        let r = leg_fk(p, leg, q);
        let n = r.norm();
        if n > w.r_min && n < w.r_max && r.z < -0.1 {
            return r;
        }
    }
}
