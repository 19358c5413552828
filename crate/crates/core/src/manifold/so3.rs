//! Rotation-group helpers on unit quaternions.
//!
//! All angle-dependent coefficients are evaluated from their power series
//! below [`SERIES_THRESHOLD`] and from closed forms above it. Every
//! coefficient also carries `f'(θ)/θ`, which is what the chain rule needs
//! (`∂f/∂θ_j = f'(θ)/θ · θ_j`) and which stays finite at the identity.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};

/// Below this angle the series expansions are used.
pub(crate) const SERIES_THRESHOLD: f64 = 1.0;

/// Skew-symmetric matrix such that `hat(a) * b = a × b`.
#[inline]
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Value of an angle coefficient and its derivative divided by the angle.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coef {
    pub value: f64,
    /// `f'(θ) / θ`
    pub dvalue: f64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Evaluates `Σ c_k t^k` and `Σ 2k c_k t^(k-1)` with `t = θ²`.
fn series(t: f64, coeffs: &[f64]) -> Coef {
    let mut value = 0.0;
    let mut dvalue = 0.0;
    let mut tk = 1.0;
    for (k, c) in coeffs.iter().enumerate() {
        value += c * tk;
        if k + 1 < coeffs.len() {
            dvalue += 2.0 * (k as f64 + 1.0) * coeffs[k + 1] * tk;
        }
        tk *= t;
    }
    Coef { value, dvalue }
}

const SERIES_TERMS: usize = 14;

fn alternating(offset: u32, weight: impl Fn(u32) -> f64) -> [f64; SERIES_TERMS] {
    let mut c = [0.0; SERIES_TERMS];
    for (k, ck) in c.iter_mut().enumerate() {
        let k = k as u32;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *ck = sign * weight(k) / factorial(2 * k + offset);
    }
    c
}

/// `(1 - cos θ) / θ²`
pub(crate) fn coef_b1(theta: f64) -> Coef {
    if theta < SERIES_THRESHOLD {
        return series(theta * theta, &alternating(2, |_| 1.0));
    }
    let (s, c) = theta.sin_cos();
    let t2 = theta * theta;
    let value = (1.0 - c) / t2;
    let d = s / t2 - 2.0 * (1.0 - c) / (t2 * theta);
    Coef {
        value,
        dvalue: d / theta,
    }
}

/// `(θ - sin θ) / θ³`
pub(crate) fn coef_a1(theta: f64) -> Coef {
    if theta < SERIES_THRESHOLD {
        return series(theta * theta, &alternating(3, |_| 1.0));
    }
    let (s, c) = theta.sin_cos();
    let t3 = theta.powi(3);
    let value = (theta - s) / t3;
    let d = (1.0 - c) / t3 - 3.0 * (theta - s) / (t3 * theta);
    Coef {
        value,
        dvalue: d / theta,
    }
}

/// `(θ² + 2 cos θ - 2) / (2 θ⁴)`
pub(crate) fn coef_a2(theta: f64) -> Coef {
    if theta < SERIES_THRESHOLD {
        return series(theta * theta, &alternating(4, |_| 1.0));
    }
    let (s, c) = theta.sin_cos();
    let t4 = theta.powi(4);
    let num = theta * theta + 2.0 * c - 2.0;
    let value = num / (2.0 * t4);
    let d = (theta - s) / t4 - 2.0 * num / (t4 * theta);
    Coef {
        value,
        dvalue: d / theta,
    }
}

/// `(2θ - 3 sin θ + θ cos θ) / (2 θ⁵)`
pub(crate) fn coef_a3(theta: f64) -> Coef {
    if theta < SERIES_THRESHOLD {
        return series(theta * theta, &alternating(5, |k| (k + 1) as f64));
    }
    let (s, c) = theta.sin_cos();
    let t5 = theta.powi(5);
    let num = 2.0 * theta - 3.0 * s + theta * c;
    let value = num / (2.0 * t5);
    let d = (2.0 - 2.0 * c - theta * s) / (2.0 * t5) - 5.0 * num / (2.0 * t5 * theta);
    Coef {
        value,
        dvalue: d / theta,
    }
}

/// Bernoulli numbers B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// `1/θ² - (1 + cos θ) / (2 θ sin θ)`, the quadratic coefficient of `J_l⁻¹`.
pub(crate) fn coef_jinv(theta: f64) -> Coef {
    if theta < SERIES_THRESHOLD {
        let mut c = [0.0; 10];
        for (k, ck) in c.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *ck = sign * BERNOULLI_EVEN[k] / factorial(2 * k as u32 + 2);
        }
        return series(theta * theta, &c);
    }
    let (s, c) = theta.sin_cos();
    let t2 = theta * theta;
    let h = (1.0 + c) / s;
    let value = 1.0 / t2 - h / (2.0 * theta);
    let d = -2.0 / (t2 * theta) + h / (2.0 * t2) + 1.0 / (2.0 * theta * (1.0 - c));
    Coef {
        value,
        dvalue: d / theta,
    }
}

/// Flips the quaternion onto the `w ≥ 0` hemisphere and renormalises.
pub fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let mut c = *q.quaternion();
    let flip = c.w < 0.0 || (c.w == 0.0 && (c.i < 0.0 || (c.i == 0.0 && (c.j < 0.0 || (c.j == 0.0 && c.k < 0.0)))));
    if flip {
        c = -c;
    }
    // Already-unit inputs pass through untouched so the map is idempotent.
    if (c.norm_squared() - 1.0).abs() <= 4.0 * f64::EPSILON {
        UnitQuaternion::new_unchecked(c)
    } else {
        UnitQuaternion::new_normalize(c)
    }
}

/// Exponential map from a rotation vector to a unit quaternion (`w ≥ 0`).
pub fn exp_so3(theta: &Vector3<f64>) -> UnitQuaternion<f64> {
    let angle = theta.norm();
    let half = 0.5 * angle;
    // sin(θ/2)/θ
    let k = if angle < 1e-8 {
        0.5 - angle * angle / 48.0
    } else {
        half.sin() / angle
    };
    let q = Quaternion::new(half.cos(), k * theta.x, k * theta.y, k * theta.z);
    canonical(UnitQuaternion::new_unchecked(q))
}

/// Logarithmic map onto the principal branch `‖θ‖ ≤ π`.
pub fn log_so3(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let q = canonical(*q);
    let c = q.quaternion();
    let v = Vector3::new(c.i, c.j, c.k);
    let n = v.norm();
    let w = c.w;
    let scale = if n < 1e-8 {
        // 2 atan(n/w)/n for w ≈ 1
        let r2 = (n / w).powi(2);
        2.0 / w * (1.0 - r2 / 3.0 + r2 * r2 / 5.0)
    } else {
        2.0 * n.atan2(w) / n
    };
    v * scale
}

/// Left Jacobian of SO(3).
pub fn left_jacobian(theta: &Vector3<f64>) -> Matrix3<f64> {
    let t = theta.norm();
    let th = hat(theta);
    Matrix3::identity() + coef_b1(t).value * th + coef_a1(t).value * th * th
}

/// Right Jacobian of SO(3), `J_r(θ) = J_l(-θ)`.
pub fn right_jacobian(theta: &Vector3<f64>) -> Matrix3<f64> {
    left_jacobian(&(-theta))
}

/// Inverse left Jacobian of SO(3).
pub fn left_jacobian_inv(theta: &Vector3<f64>) -> Matrix3<f64> {
    let t = theta.norm();
    let th = hat(theta);
    Matrix3::identity() - 0.5 * th + coef_jinv(t).value * th * th
}

/// Partial derivatives `∂J_l⁻¹/∂θ_j`, j = 0..3.
pub fn left_jacobian_inv_derivatives(theta: &Vector3<f64>) -> [Matrix3<f64>; 3] {
    let c = coef_jinv(theta.norm());
    let th = hat(theta);
    let th2 = th * th;
    std::array::from_fn(|j| {
        let e = hat(&Vector3::ith(j, 1.0));
        -0.5 * e + (c.dvalue * theta[j]) * th2 + c.value * (e * th + th * e)
    })
}
