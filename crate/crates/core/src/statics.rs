//! Internal forces and moments of the band, and the residuals of the six
//! balance equations of a force- and moment-free closed band.
//!
//! Force `T t + N n + B b` and moment `Mt t + Mn n + Mb b` satisfy
//!
//! ```text
//! dT/ds  - K N           = 0      dMt/ds - K Mn                = 0
//! K T  + dN/ds - W B     = 0      K Mt + dMn/ds - W Mb - B     = 0
//! W N  + dB/ds           = 0      W Mn + dMb/ds + N            = 0
//! ```
//!
//! With the constitutive moments `Mt = dU/dW`, `Mb = dU/dK` and the field
//! expressions below, rows 1, 4 and 5 hold by construction and row 6 holds up
//! to the differencing error. Rows 2 and 3 carry the equilibrium content.
//!
//! Derivatives are centred periodic differences. Quantities odd in K (K, N,
//! B, Mn, Mb) pick up the Möbius wrap sign when the stencil crosses `s = L`.
//!
//! With `epsilon > 0` every `1/K^2` becomes `1/(K^2 + eps^2)`. `1/K` becomes
//! `K/(K^2 + eps^2)` and `1/K^3` becomes `K/(K^2 + eps^2)^2`, which keeps
//! `Mt` and `Mb` equal to the partials of the regularized density.

use crate::energy::{density, density_partials, MaterialParams};
use crate::error::{BandError, Result};
use crate::geometry::CurvatureTwistProfile;

/// Smallest |K| accepted without regularization.
pub const K_FLOOR: f64 = 1e-8;

/// Default width of the arc window excluded around a singular point, as a
/// fraction of the band length.
pub const DEFAULT_MASK_WINDOW: f64 = 0.02;

/// Minimum half-width of the excluded window, in cells. The nested centred
/// differences reach three cells out, so a narrower window would let the
/// stencil straddle the corner.
pub const MIN_MASK_HALF_CELLS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticFields {
    pub t: Vec<f64>,
    pub n: Vec<f64>,
    pub b: Vec<f64>,
    pub mt: Vec<f64>,
    pub mn: Vec<f64>,
    pub mb: Vec<f64>,
    /// Integration constant in `T = A C - U`.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualNorm {
    pub max: f64,
    pub rms: f64,
    /// Number of nodes that entered the norm.
    pub count: usize,
}

impl ResidualNorm {
    fn over(values: &[f64], mask: &ResidualMask) -> Self {
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        let mut count = 0;
        for (i, v) in values.iter().enumerate() {
            if mask.is_excluded(i) {
                continue;
            }
            max = max.max(v.abs());
            sum += v * v;
            count += 1;
        }
        let rms = if count > 0 { (sum / count as f64).sqrt() } else { 0.0 };
        Self { max, rms, count }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResiduals {
    /// Residuals of the six balance equations, in the order listed above.
    pub r14: [Vec<f64>; 6],
    pub norms14: [ResidualNorm; 6],
    /// Force balance along n, the second row.
    pub r23: Vec<f64>,
    /// Force balance along b, the third row.
    pub r24: Vec<f64>,
    pub norm23: ResidualNorm,
    pub norm24: ResidualNorm,
}

/// Nodes left out of residual norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMask {
    excluded: Vec<bool>,
}

impl ResidualMask {
    pub fn none(n: usize) -> Self {
        Self {
            excluded: vec![false; n],
        }
    }

    /// Exclude every node within `max(window * L / 2, 4 h)` of any of `centers`,
    /// measured cyclically.
    pub fn around(profile: &CurvatureTwistProfile, centers: &[f64], window: f64) -> Self {
        let l = profile.length();
        let h = profile.spacing();
        let radius = (0.5 * window * l).max(MIN_MASK_HALF_CELLS * h);
        let excluded = profile
            .arclengths()
            .iter()
            .map(|&s| {
                centers.iter().any(|&c| {
                    let d = (s - c).rem_euclid(l);
                    d.min(l - d) <= radius
                })
            })
            .collect();
        Self { excluded }
    }

    /// Mask around every sign change of K, the corners of the profile.
    pub fn at_corners(profile: &CurvatureTwistProfile, window: f64) -> Self {
        Self::around(profile, &profile.curvature_sign_changes(), window)
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded[i]
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }
}

/// Centred periodic derivative. `wrap` is the factor applied to samples
/// reached across `s = L`: 1 for quantities even in K, the closure's odd wrap
/// sign for quantities odd in K.
pub fn centered_derivative(values: &[f64], h: f64, wrap: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let next = if i + 1 < n { values[i + 1] } else { wrap * values[0] };
            let prev = if i > 0 { values[i - 1] } else { wrap * values[n - 1] };
            (next - prev) / (2.0 * h)
        })
        .collect()
}

fn check_floor(profile: &CurvatureTwistProfile, params: &MaterialParams) -> Result<()> {
    if params.epsilon > 0.0 {
        return Ok(());
    }
    let nodes: Vec<usize> = profile
        .curvature()
        .iter()
        .enumerate()
        .filter(|(_, k)| k.abs() <= K_FLOOR)
        .map(|(i, _)| i)
        .collect();
    if nodes.is_empty() {
        Ok(())
    } else {
        Err(BandError::CurvatureBelowFloor { nodes })
    }
}

/// Regularized `1/K`.
fn inv_k(k: f64, params: &MaterialParams) -> f64 {
    k / (k * k + params.epsilon * params.epsilon)
}

fn wrap_odd(profile: &CurvatureTwistProfile) -> f64 {
    profile.closure().odd_wrap_sign()
}

/// `(Mt, Mb)`: the twisting and bending moments.
pub fn constitutive_moments(
    profile: &CurvatureTwistProfile,
    params: &MaterialParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_floor(profile, params)?;
    Ok(profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .map(|(&k, &w)| {
            let (mb, mt) = density_partials(k, w, params).expect("K above floor or regularized");
            (mt, mb)
        })
        .unzip())
}

fn densities(profile: &CurvatureTwistProfile, params: &MaterialParams) -> Vec<f64> {
    profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .map(|(&k, &w)| density(k, w, params))
        .collect()
}

/// Shear force along n: `N = -(1/K) dU/ds`.
pub fn field_n(profile: &CurvatureTwistProfile, params: &MaterialParams) -> Result<Vec<f64>> {
    check_floor(profile, params)?;
    let du = centered_derivative(&densities(profile, params), profile.spacing(), 1.0);
    Ok(profile
        .curvature()
        .iter()
        .zip(&du)
        .map(|(&k, d)| -inv_k(k, params) * d)
        .collect())
}

/// Moment along n: `Mn = (1/K) dMt/ds`.
pub fn field_mn(profile: &CurvatureTwistProfile, params: &MaterialParams) -> Result<Vec<f64>> {
    let (mt, _) = constitutive_moments(profile, params)?;
    let dmt = centered_derivative(&mt, profile.spacing(), 1.0);
    Ok(profile
        .curvature()
        .iter()
        .zip(&dmt)
        .map(|(&k, d)| inv_k(k, params) * d)
        .collect())
}

/// Shear force along b: `B = 2 A W (K^2 + W^2)^2 / K^3 + dMn/ds`.
pub fn field_b(profile: &CurvatureTwistProfile, params: &MaterialParams) -> Result<Vec<f64>> {
    let mn = field_mn(profile, params)?;
    let dmn = centered_derivative(&mn, profile.spacing(), wrap_odd(profile));
    let a = params.stiffness;
    let e2 = params.epsilon * params.epsilon;
    Ok(profile
        .curvature()
        .iter()
        .zip(profile.twist())
        .zip(&dmn)
        .map(|((&k, &w), d)| {
            let s = k * k + w * w;
            let den = k * k + e2;
            2.0 * a * w * s * s * k / (den * den) + d
        })
        .collect())
}

/// Tension: `T = A C - U`.
pub fn field_t(profile: &CurvatureTwistProfile, params: &MaterialParams, c: f64) -> Vec<f64> {
    densities(profile, params)
        .into_iter()
        .map(|u| params.stiffness * c - u)
        .collect()
}

/// Least-squares `C` for the second row, `K T + dN/ds - W B = 0`, over the
/// nodes not excluded by `mask`. `T` is affine in `C`, so this is closed form.
pub fn fit_c(
    profile: &CurvatureTwistProfile,
    params: &MaterialParams,
    mask: &ResidualMask,
) -> Result<f64> {
    let n = field_n(profile, params)?;
    let b = field_b(profile, params)?;
    fit_c_from(profile, params, &n, &b, mask)
}

fn fit_c_from(
    profile: &CurvatureTwistProfile,
    params: &MaterialParams,
    n: &[f64],
    b: &[f64],
    mask: &ResidualMask,
) -> Result<f64> {
    let dn = centered_derivative(n, profile.spacing(), wrap_odd(profile));
    let u = densities(profile, params);
    let a = params.stiffness;
    let mut kk = 0.0;
    let mut kq = 0.0;
    let mut count = 0usize;
    for i in 0..profile.n_nodes() {
        if mask.is_excluded(i) {
            continue;
        }
        let k = profile.curvature()[i];
        let w = profile.twist()[i];
        let q = -k * u[i] + dn[i] - w * b[i];
        kk += k * k;
        kq += k * q;
        count += 1;
    }
    if count == 0 || kk <= 1e-24 * count as f64 {
        return Err(BandError::Degenerate(
            "cannot fit C: K vanishes on every unmasked node".into(),
        ));
    }
    Ok(-kq / (a * kk))
}

/// All six fields, with `C` fitted over the unmasked nodes.
pub fn static_fields(
    profile: &CurvatureTwistProfile,
    params: &MaterialParams,
    mask: &ResidualMask,
) -> Result<StaticFields> {
    let (mt, mb) = constitutive_moments(profile, params)?;
    let n = field_n(profile, params)?;
    let mn = field_mn(profile, params)?;
    let b = field_b(profile, params)?;
    let c = fit_c_from(profile, params, &n, &b, mask)?;
    let t = field_t(profile, params, c);
    Ok(StaticFields { t, n, b, mt, mn, mb, c })
}

/// Residuals of the six balance equations, norms taken over unmasked nodes.
pub fn residuals(
    profile: &CurvatureTwistProfile,
    fields: &StaticFields,
    mask: &ResidualMask,
) -> EquilibriumResiduals {
    let h = profile.spacing();
    let odd = wrap_odd(profile);
    let k = profile.curvature();
    let w = profile.twist();
    let dt = centered_derivative(&fields.t, h, 1.0);
    let dn = centered_derivative(&fields.n, h, odd);
    let db = centered_derivative(&fields.b, h, odd);
    let dmt = centered_derivative(&fields.mt, h, 1.0);
    let dmn = centered_derivative(&fields.mn, h, odd);
    let dmb = centered_derivative(&fields.mb, h, odd);
    let f = fields;
    let rows: [Vec<f64>; 6] = [
        (0..k.len()).map(|i| dt[i] - k[i] * f.n[i]).collect(),
        (0..k.len()).map(|i| k[i] * f.t[i] + dn[i] - w[i] * f.b[i]).collect(),
        (0..k.len()).map(|i| w[i] * f.n[i] + db[i]).collect(),
        (0..k.len()).map(|i| dmt[i] - k[i] * f.mn[i]).collect(),
        (0..k.len())
            .map(|i| k[i] * f.mt[i] + dmn[i] - w[i] * f.mb[i] - f.b[i])
            .collect(),
        (0..k.len()).map(|i| w[i] * f.mn[i] + dmb[i] + f.n[i]).collect(),
    ];
    let norms14 = std::array::from_fn(|j| ResidualNorm::over(&rows[j], mask));
    EquilibriumResiduals {
        r23: rows[1].clone(),
        r24: rows[2].clone(),
        norm23: norms14[1],
        norm24: norms14[2],
        norms14,
        r14: rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Closure;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unreg(a: f64) -> MaterialParams {
        MaterialParams::unregularized(a)
    }

    fn circle(n: usize) -> CurvatureTwistProfile {
        CurvatureTwistProfile::new(2.0 * PI, vec![1.0; n], vec![0.0; n]).unwrap()
    }

    /// Fourth-order central difference of a function of `s`, used as an
    /// off-grid reference for the analytic-profile checks.
    fn d5(f: &dyn Fn(f64) -> f64, s: f64) -> f64 {
        let e = 1e-3;
        (-f(s + 2.0 * e) + 8.0 * f(s + e) - 8.0 * f(s - e) + f(s - 2.0 * e)) / (12.0 * e)
    }

    struct Smooth;
    impl Smooth {
        fn k(s: f64) -> f64 {
            1.2 + 0.3 * s.sin() + 0.1 * (2.0 * s).cos()
        }
        fn w(s: f64) -> f64 {
            0.4 + 0.25 * s.cos() - 0.1 * (3.0 * s).sin()
        }
        fn profile(n: usize) -> CurvatureTwistProfile {
            CurvatureTwistProfile::from_fn(2.0 * PI, n, |s| (Self::k(s), Self::w(s))).unwrap()
        }
        fn u(s: f64) -> f64 {
            let (k, w) = (Self::k(s), Self::w(s));
            (k * k + w * w).powi(2) / (k * k)
        }
        fn n(s: f64) -> f64 {
            -d5(&Self::u, s) / Self::k(s)
        }
        fn inner(s: f64) -> f64 {
            let (k, w) = (Self::k(s), Self::w(s));
            w * (k * k + w * w) / (k * k)
        }
        fn mn(s: f64) -> f64 {
            4.0 / Self::k(s) * d5(&Self::inner, s)
        }
        fn b(s: f64) -> f64 {
            let (k, w) = (Self::k(s), Self::w(s));
            let outer = |x: f64| d5(&Self::inner, x) / Self::k(x);
            2.0 * w * (k * k + w * w).powi(2) / k.powi(3) + 4.0 * d5(&outer, s)
        }
    }

    fn max_dev(profile: &CurvatureTwistProfile, got: &[f64], want: fn(f64) -> f64) -> f64 {
        profile
            .arclengths()
            .iter()
            .zip(got)
            .map(|(&s, g)| (g - want(s)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn moments_at_reference_points() {
        let p = CurvatureTwistProfile::new(1.0, vec![1.0; 8], vec![0.0; 8]).unwrap();
        let (mt, mb) = constitutive_moments(&p, &unreg(1.7)).unwrap();
        assert!(mt.iter().all(|&v| v == 0.0));
        assert!(mb.iter().all(|&v| (v - 3.4).abs() < 1e-14));
        let p = CurvatureTwistProfile::new(1.0, vec![1.0; 8], vec![2.0; 8]).unwrap();
        let (mt, mb) = constitutive_moments(&p, &unreg(1.0)).unwrap();
        // 4*2*(1+4)/1 and 2*(1-16)/1.
        assert!((mt[0] - 40.0).abs() < 1e-12);
        assert!((mb[0] + 30.0).abs() < 1e-12);
    }

    #[test]
    fn bending_moment_vanishes_exactly_where_k4_equals_w4() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let k: f64 = rng.random_range(0.01..5.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let on_diagonal = rng.random::<bool>();
            let w = if on_diagonal {
                k.abs() * if rng.random::<bool>() { 1.0 } else { -1.0 }
            } else {
                let w: f64 = rng.random_range(-5.0..5.0);
                if (w.abs() - k.abs()).abs() < 1e-3 {
                    continue;
                }
                w
            };
            let p = CurvatureTwistProfile::new(1.0, vec![k; 8], vec![w; 8]).unwrap();
            let (_, mb) = constitutive_moments(&p, &unreg(1.0)).unwrap();
            let scale = (k.powi(4) + w.powi(4)) / k.abs().powi(3);
            assert_eq!(mb[0].abs() <= 1e-12 * scale, on_diagonal, "K={k} W={w} Mb={}", mb[0]);
        }
    }

    #[test]
    fn unregularized_fields_name_the_flat_nodes() {
        let mut k = vec![1.0; 12];
        k[3] = 0.0;
        k[9] = 1e-10;
        let p = CurvatureTwistProfile::new(1.0, k, vec![0.5; 12]).unwrap();
        match field_n(&p, &unreg(1.0)) {
            Err(BandError::CurvatureBelowFloor { nodes }) => assert_eq!(nodes, vec![3, 9]),
            other => panic!("expected floor error, got {other:?}"),
        }
        assert!(field_n(&p, &MaterialParams::new(1.0, 1e-3).unwrap()).is_ok());
    }

    #[test]
    fn constant_profiles() {
        let (c, w) = (0.8, 0.5);
        let p = CurvatureTwistProfile::new(3.0, vec![c; 16], vec![w; 16]).unwrap();
        let params = unreg(1.5);
        assert!(field_n(&p, &params).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(field_mn(&p, &params).unwrap().iter().all(|v| v.abs() < 1e-12));
        let want = 2.0 * 1.5 * w * (c * c + w * w).powi(2) / c.powi(3);
        assert!(field_b(&p, &params).unwrap().iter().all(|v| (v - want).abs() < 1e-12));
        let flat = CurvatureTwistProfile::new(3.0, vec![c; 16], vec![0.0; 16]).unwrap();
        assert!(field_b(&flat, &params).unwrap().iter().all(|v| v.abs() < 1e-12));
        assert!(field_mn(&flat, &params).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tension_examples() {
        let t = field_t(&circle(16), &unreg(1.0), 3.0);
        assert!(t.iter().all(|&v| (v - 2.0).abs() < 1e-14));
        let p = CurvatureTwistProfile::new(1.0, vec![0.5; 8], vec![0.5; 8]).unwrap();
        let u = density(0.5, 0.5, &unreg(2.0));
        assert!(field_t(&p, &unreg(2.0), u / 2.0).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn circle_is_in_equilibrium_with_unit_c() {
        let p = circle(64);
        let params = unreg(1.0);
        let mask = ResidualMask::none(64);
        assert!((fit_c(&p, &params, &mask).unwrap() - 1.0).abs() < 1e-12);
        let f = static_fields(&p, &params, &mask).unwrap();
        let r = residuals(&p, &f, &mask);
        for norm in r.norms14 {
            assert!(norm.max < 1e-12, "{norm:?}");
        }
    }

    #[test]
    fn shear_force_of_planar_profile_matches_closed_form() {
        // W = 0, K = 1 + 0.1 sin s: U = K^2, so N = -2 K' = -0.2 cos s.
        let dev = |n: usize| {
            let p = CurvatureTwistProfile::from_fn(2.0 * PI, n, |s| (1.0 + 0.1 * s.sin(), 0.0)).unwrap();
            let got = field_n(&p, &unreg(1.0)).unwrap();
            max_dev(&p, &got, |s| -0.2 * s.cos())
        };
        let (coarse, fine) = (dev(64), dev(128));
        assert!(coarse < 1e-3);
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fields_converge_at_second_order_to_off_grid_reference() {
        let params = unreg(1.0);
        let devs = |n: usize| {
            let p = Smooth::profile(n);
            [
                max_dev(&p, &field_n(&p, &params).unwrap(), Smooth::n),
                max_dev(&p, &field_mn(&p, &params).unwrap(), Smooth::mn),
                max_dev(&p, &field_b(&p, &params).unwrap(), Smooth::b),
            ]
        };
        let coarse = devs(128);
        let fine = devs(256);
        for j in 0..3 {
            let ratio = coarse[j] / fine[j];
            assert!((3.5..4.5).contains(&ratio), "field {j}: {} -> {} ratio {ratio}", coarse[j], fine[j]);
        }
    }

    #[test]
    fn construction_rows_hold_for_any_smooth_profile() {
        let params = unreg(1.0);
        let run = |n: usize| {
            let p = Smooth::profile(n);
            let mask = ResidualMask::none(n);
            let f = static_fields(&p, &params, &mask).unwrap();
            residuals(&p, &f, &mask)
        };
        let coarse = run(128);
        let fine = run(256);
        for j in [0, 3, 4] {
            assert!(coarse.norms14[j].max < 1e-9, "row {j}: {:?}", coarse.norms14[j]);
        }
        let ratio = coarse.norms14[5].max / fine.norms14[5].max;
        assert!((3.5..4.5).contains(&ratio), "row 6 ratio {ratio}");
        // Not an equilibrium: the force rows stay large.
        assert!(coarse.norm23.max > 1e-2);
        assert!(coarse.norm24.max > 1e-2);
        assert!(fine.norm23.max > 1e-2);
    }

    #[test]
    fn mirror_flip_parity() {
        let params = MaterialParams::new(1.0, 0.01).unwrap();
        let p = Smooth::profile(64);
        let q = p.mirrored();
        let mask = ResidualMask::none(64);
        let f = static_fields(&p, &params, &mask).unwrap();
        let g = static_fields(&q, &params, &mask).unwrap();
        let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10);
        let flip = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x + y).abs() < 1e-10);
        assert!(same(&f.t, &g.t) && same(&f.n, &g.n) && same(&f.mb, &g.mb));
        assert!(flip(&f.b, &g.b) && flip(&f.mt, &g.mt) && flip(&f.mn, &g.mn));
    }

    #[test]
    fn c_fit_is_degenerate_without_curvature() {
        let p = CurvatureTwistProfile::new(1.0, vec![0.0; 16], vec![0.0; 16]).unwrap();
        let params = MaterialParams::new(1.0, 0.1).unwrap();
        assert!(matches!(
            fit_c(&p, &params, &ResidualMask::none(16)),
            Err(BandError::Degenerate(_))
        ));
    }

    #[test]
    fn moebius_derivative_uses_wrap_sign() {
        // cos(s/2) is antiperiodic on [0, 2pi); its derivative is -sin(s/2)/2.
        let p = CurvatureTwistProfile::from_fn(2.0 * PI, 64, |s| ((s / 2.0).cos(), 0.0))
            .unwrap()
            .with_closure(Closure::Moebius);
        let d = centered_derivative(p.curvature(), p.spacing(), -1.0);
        let dev = max_dev(&p, &d, |s| -0.5 * (s / 2.0).sin());
        assert!(dev < 1e-3, "{dev}");
    }

    #[test]
    fn mask_covers_window_around_centres() {
        let p = circle(200);
        let m = ResidualMask::around(&p, &[0.0], DEFAULT_MASK_WINDOW);
        // radius 0.01 * 2pi spans about one cell on each side, so the
        // four-cell floor governs: nodes 0..=3 and 196..=199.
        assert_eq!(m.excluded_count(), 8);
        assert!(m.is_excluded(0) && m.is_excluded(199) && !m.is_excluded(4));
        assert_eq!(ResidualMask::at_corners(&p, 0.02).excluded_count(), 0);
    }
}
