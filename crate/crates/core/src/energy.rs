//! Bending energy of an infinitesimally narrow developable band.
//!
//! The density is `U = A (K^2 + W^2)^2 / K^2`. It is singular at `K = 0` with
//! `W != 0`, so the solver works with the regularized form
//! `U_eps = A (K^2 + W^2)^2 / (K^2 + eps^2)` and anneals `eps` toward zero.
//! All partial derivatives below are exact for the regularized density and
//! reduce to the constitutive moments
//! `dU/dW = 4 A W (K^2 + W^2) / K^2` and `dU/dK = 2 A (K^4 - W^4) / K^3`
//! when `eps = 0`.

use crate::error::{BandError, Result};
use crate::geometry::CurvatureTwistProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Bending stiffness `A`.
    pub stiffness: f64,
    /// Regularization of the `1/K^2` singularity, units 1/length.
    pub epsilon: f64,
}

impl MaterialParams {
    pub fn new(stiffness: f64, epsilon: f64) -> Result<Self> {
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(BandError::InvalidInput(format!(
                "stiffness A must be positive, got {stiffness}"
            )));
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(BandError::InvalidInput(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        Ok(Self { stiffness, epsilon })
    }

    pub fn unregularized(stiffness: f64) -> Self {
        Self {
            stiffness,
            epsilon: 0.0,
        }
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::unregularized(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    pub d_curvature: Vec<f64>,
    pub d_twist: Vec<f64>,
    pub total: f64,
}

/// Second derivatives of the density at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityHessian {
    pub kk: f64,
    pub kw: f64,
    pub ww: f64,
}

/// Energy per unit length. Returns `+inf` for `K = 0, W != 0` without
/// regularization; `K = W = 0` gives 0, the limit along `K = W`.
pub fn density(k: f64, w: f64, params: &MaterialParams) -> f64 {
    let s = k * k + w * w;
    let d = k * k + params.epsilon * params.epsilon;
    if d == 0.0 {
        return if s == 0.0 { 0.0 } else { f64::INFINITY };
    }
    params.stiffness * s * s / d
}

/// `(dU/dK, dU/dW)`, or `None` where the density is infinite.
pub fn density_partials(k: f64, w: f64, params: &MaterialParams) -> Option<(f64, f64)> {
    let s = k * k + w * w;
    let d = k * k + params.epsilon * params.epsilon;
    if d == 0.0 {
        return if s == 0.0 { Some((0.0, 0.0)) } else { None };
    }
    let a = params.stiffness;
    // 4KS/D - 2KS^2/D^2 = 2KS(K^2 - W^2 + 2 eps^2)/D^2, with the difference of
    // squares factored so that it stays accurate near |K| = |W|.
    let e2 = params.epsilon * params.epsilon;
    let du_dk = 2.0 * a * k * s * ((k - w) * (k + w) + 2.0 * e2) / (d * d);
    let du_dw = a * 4.0 * w * s / d;
    Some((du_dk, du_dw))
}

pub fn density_hessian(k: f64, w: f64, params: &MaterialParams) -> Option<DensityHessian> {
    let s = k * k + w * w;
    let d = k * k + params.epsilon * params.epsilon;
    if d == 0.0 {
        return None;
    }
    let a = params.stiffness;
    let k2 = k * k;
    let kk = a * ((4.0 * s + 8.0 * k2) / d - (16.0 * k2 * s + 2.0 * s * s) / (d * d)
        + 8.0 * k2 * s * s / (d * d * d));
    let kw = a * (8.0 * k * w / d - 8.0 * k * w * s / (d * d));
    let ww = a * 4.0 * (s + 2.0 * w * w) / d;
    Some(DensityHessian { kk, kw, ww })
}

/// Midpoint-rule quadrature of the density over the cells.
pub fn total_energy(profile: &CurvatureTwistProfile, params: &MaterialParams) -> f64 {
    let h = profile.spacing();
    h * profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .map(|(&k, &w)| density(k, w, params))
        .sum::<f64>()
}

/// Energy and its gradient with respect to every `(K_i, W_i)`.
pub fn gradient(profile: &CurvatureTwistProfile, params: &MaterialParams) -> Result<EnergyGradient> {
    let h = profile.spacing();
    let n = profile.n_nodes();
    let mut d_curvature = Vec::with_capacity(n);
    let mut d_twist = Vec::with_capacity(n);
    let mut total = 0.0;
    for (i, (&k, &w)) in profile.curvature().iter().zip(profile.twist()).enumerate() {
        let (dk, dw) = density_partials(k, w, params).ok_or(BandError::Inadmissible { index: i })?;
        d_curvature.push(h * dk);
        d_twist.push(h * dw);
        total += density(k, w, params);
    }
    Ok(EnergyGradient {
        d_curvature,
        d_twist,
        total: h * total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn p(a: f64, eps: f64) -> MaterialParams {
        MaterialParams::new(a, eps).unwrap()
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(1.0, 0.0, &p(1.0, 0.0)), 1.0);
        assert_eq!(density(1.0, 1.0, &p(1.0, 0.0)), 4.0);
        assert_eq!(density(0.0, 0.0, &p(3.0, 0.0)), 0.0);
        assert_eq!(density(0.0, 1.0, &p(1.0, 0.0)), f64::INFINITY);
        // 1 / 1e-4, evaluated by hand.
        assert!((density(0.0, 1.0, &p(1.0, 1e-2)) - 1e4).abs() < 1e-8);
    }

    #[test]
    fn total_energy_of_circle_and_helix() {
        let n = 64;
        let circle = CurvatureTwistProfile::new(2.0 * PI, vec![1.0; n], vec![0.0; n]).unwrap();
        assert!((total_energy(&circle, &p(1.0, 0.0)) - 2.0 * PI).abs() < 1e-12);
        let helix = CurvatureTwistProfile::new(2.0 * PI, vec![1.0; n], vec![1.0; n]).unwrap();
        assert!((total_energy(&helix, &p(1.0, 0.0)) - 8.0 * PI).abs() < 1e-12);
        assert!((total_energy(&helix, &p(2.0, 0.0)) - 16.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn partials_at_reference_points() {
        let (dk, dw) = density_partials(1.0, 0.0, &p(1.5, 0.0)).unwrap();
        assert_eq!(dw, 0.0);
        assert!((dk - 3.0).abs() < 1e-15);
        let (dk, dw) = density_partials(1.0, 1.0, &p(1.0, 0.0)).unwrap();
        assert!((dw - 8.0).abs() < 1e-15);
        assert!(dk.abs() < 1e-15);
    }

    #[test]
    fn gradient_names_inadmissible_node() {
        let mut k = vec![1.0; 10];
        k[7] = 0.0;
        let prof = CurvatureTwistProfile::new(1.0, k, vec![0.5; 10]).unwrap();
        assert!(matches!(
            gradient(&prof, &p(1.0, 0.0)),
            Err(BandError::Inadmissible { index: 7 })
        ));
        assert!(gradient(&prof, &p(1.0, 1e-3)).is_ok());
    }

    #[test]
    fn hessian_matches_differenced_partials() {
        let params = p(1.3, 0.05);
        for &(k, w) in &[(0.7, -0.4), (-1.2, 0.9), (0.1, 0.3), (2.0, 2.0)] {
            let hs = density_hessian(k, w, &params).unwrap();
            let step = 1e-6;
            let (kp, wp) = density_partials(k + step, w, &params).unwrap();
            let (km, wm) = density_partials(k - step, w, &params).unwrap();
            let (_, wwp) = density_partials(k, w + step, &params).unwrap();
            let (_, wwm) = density_partials(k, w - step, &params).unwrap();
            let scale = hs.kk.abs().max(hs.ww.abs()).max(1.0);
            assert!(((kp - km) / (2.0 * step) - hs.kk).abs() < 1e-6 * scale);
            assert!(((wp - wm) / (2.0 * step) - hs.kw).abs() < 1e-6 * scale);
            assert!(((wwp - wwm) / (2.0 * step) - hs.ww).abs() < 1e-6 * scale);
        }
    }

    proptest! {
        #[test]
        fn density_bounded_below_by_bending(k in -10.0..10.0f64, w in -10.0..10.0f64) {
            prop_assume!(k.abs() > 1e-6);
            prop_assert!(density(k, w, &p(2.0, 0.0)) >= 2.0 * k * k * (1.0 - 1e-14));
        }

        #[test]
        fn density_is_homogeneous_of_degree_two(k in -5.0..5.0f64, w in -5.0..5.0f64, c in 0.1..10.0f64) {
            prop_assume!(k.abs() > 1e-3);
            let params = p(1.0, 0.0);
            let lhs = density(c * k, c * w, &params);
            let rhs = c * c * density(k, w, &params);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }
}
