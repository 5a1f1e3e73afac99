//! Small SO(3) toolkit: exponential and logarithm maps, the right Jacobian and
//! its inverse, and Gram-Schmidt re-orthonormalization of frames.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues formula, series-expanded near the identity.
pub fn exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        (
            1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
            0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(w);
    Matrix3::identity() + k * a + k * k * b
}

/// Rotation vector of `r`, with angle in [0, pi].
pub fn log(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let skew = vee(&(r - r.transpose())) * 0.5; // sin(theta) * axis
    if theta < 1e-5 {
        return skew * (1.0 + theta * theta / 6.0);
    }
    if theta < 3.0 {
        return skew * (theta / theta.sin());
    }
    // Near pi the skew part vanishes; recover the axis from the symmetric part
    // (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) a a^T.
    let sym = (r + r.transpose()) * 0.5 - Matrix3::identity() * cos_theta;
    let diag = [sym[(0, 0)], sym[(1, 1)], sym[(2, 2)]];
    let k = (0..3)
        .max_by(|&i, &j| diag[i].total_cmp(&diag[j]))
        .unwrap_or(0);
    let mut axis: Vector3<f64> = sym.column(k).into_owned();
    let len = axis.norm();
    if len == 0.0 {
        return Vector3::zeros();
    }
    axis /= len;
    if axis.dot(&skew) < 0.0 {
        axis = -axis;
    }
    // Refine the angle from the skew part when it carries information.
    let sin_theta = skew.norm();
    let theta = if theta < PI - 1e-8 {
        sin_theta.atan2(cos_theta)
    } else {
        theta
    };
    axis * theta
}

/// Right Jacobian: exp(w + dw) = exp(w) exp(J_r(w) dw) to first order.
pub fn right_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        (0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0)
    } else {
        (
            (1.0 - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    let k = hat(w);
    Matrix3::identity() - k * a + k * k * b
}

/// Inverse of [`right_jacobian`]: log(exp(w) exp(d)) = w + J_r^{-1}(w) d.
pub fn right_jacobian_inv(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let c = if theta < 1e-4 {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        1.0 / theta2 - 1.0 / (2.0 * theta * (0.5 * theta).tan())
    };
    let k = hat(w);
    Matrix3::identity() + k * 0.5 + k * k * c
}

/// Gram-Schmidt on the first two columns; the third is their cross product.
pub fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let t: Vector3<f64> = m.column(0).normalize();
    let c1: Vector3<f64> = m.column(1).into_owned();
    let n = (c1 - t * t.dot(&c1)).normalize();
    let b = t.cross(&n);
    Matrix3::from_columns(&[t, n, b])
}

/// Largest entry of |R^T R - I|, or infinity for a reflection.
pub fn orthonormality_deviation(m: &Matrix3<f64>) -> f64 {
    if m.determinant() <= 0.0 {
        return f64::INFINITY;
    }
    (m.transpose() * m - Matrix3::identity()).abs().max()
}

/// Rotation by pi about the first body axis: (t, n, b) -> (t, -n, -b).
pub fn half_turn_about_tangent() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vector3<f64>> {
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    #[test]
    fn log_of_half_turn_has_angle_pi() {
        let w = log(&half_turn_about_tangent());
        assert!((w.norm() - PI).abs() < 1e-12);
        assert!((w.x.abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn log_near_pi_is_accurate() {
        for eps in [1e-3, 1e-6, 1e-9] {
            let w = Vector3::new(0.3, -0.5, 0.8).normalize() * (PI - eps);
            let back = log(&exp(&w));
            assert!((back - w).norm() < 1e-7, "eps {eps}: {:?} vs {:?}", back, w);
        }
    }

    proptest! {
        #[test]
        fn exp_log_roundtrip(w in vec3()) {
            prop_assume!(w.norm() < PI - 1e-3);
            let back = log(&exp(&w));
            prop_assert!((back - w).norm() < 1e-10);
        }

        #[test]
        fn right_jacobian_matches_finite_difference(w in vec3(), d in vec3()) {
            prop_assume!(w.norm() < PI - 0.1);
            let step = 1e-6;
            let lhs = exp(&(w + d * step));
            let rhs = exp(&w) * exp(&(right_jacobian(&w) * d * step));
            prop_assert!((lhs - rhs).abs().max() < 1e-10);
            let inv = right_jacobian_inv(&w) * right_jacobian(&w);
            prop_assert!((inv - Matrix3::identity()).abs().max() < 1e-10);
        }
    }
}
