//! Self-test battery behind the `validate` command.
//!
//! The energy density and its partials are injectable so that a deliberately
//! corrupted energy can be fed through the same checks and shown to fail.

use std::f64::consts::PI;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::energy::{self, MaterialParams};
use crate::geometry::{closure, reconstruct_gauged, Closure, CurvatureTwistProfile};
use crate::io;
use crate::rotation::orthonormality_deviation;
use crate::solver::{self, constraints, InitMode, SolverConfig};
use crate::statics::{self, ResidualMask};

pub type DensityFn = fn(f64, f64, &MaterialParams) -> f64;
pub type PartialsFn = fn(f64, f64, &MaterialParams) -> Option<(f64, f64)>;

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Smaller sample counts and grids; skips the Möbius solve.
    pub quick: bool,
    pub density: DensityFn,
    pub partials: PartialsFn,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            quick: false,
            density: energy::density,
            partials: energy::density_partials,
            seed: 20240601,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn random_admissible(rng: &mut ChaCha8Rng, n: usize) -> CurvatureTwistProfile {
    let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    CurvatureTwistProfile::from_fn(2.0 * PI, n, |s| {
        let k = sign * (1.0 + 0.4 * c[0] * s.sin() + 0.3 * c[1] * (2.0 * s).cos() + 0.2 * c[2].abs());
        let w = c[3] + c[4] * s.cos() + 0.5 * c[5] * (3.0 * s).sin();
        (k, w)
    })
    .expect("finite samples")
}

fn energy_with(profile: &CurvatureTwistProfile, params: &MaterialParams, density: DensityFn) -> f64 {
    profile.spacing()
        * profile
            .curvature()
            .iter()
            .zip(profile.twist())
            .map(|(&k, &w)| density(k, w, params))
            .sum::<f64>()
}

/// Worst relative error between `h * partials` and central differences of the
/// energy over `count` random profiles.
pub fn gradient_check(options: &ValidateOptions, count: usize, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let params = MaterialParams::unregularized(1.0);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let p = random_admissible(&mut rng, n);
        let h = p.spacing();
        let mut k = p.curvature().to_vec();
        let mut w = p.twist().to_vec();
        let mut analytic = Vec::with_capacity(2 * n);
        let mut numeric = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (dk, dw) = (options.partials)(k[i], w[i], &params).unwrap_or((f64::NAN, f64::NAN));
            analytic.push(h * dk);
            analytic.push(h * dw);
            for which in 0..2 {
                let v = if which == 0 { &mut k } else { &mut w };
                let orig = v[i];
                let step = 1e-6 * orig.abs().max(1.0);
                v[i] = orig + step;
                let plus = energy_with(&p.with_samples(k.clone(), w.clone()).expect("finite"), &params, options.density);
                let v = if which == 0 { &mut k } else { &mut w };
                v[i] = orig - step;
                let minus = energy_with(&p.with_samples(k.clone(), w.clone()).expect("finite"), &params, options.density);
                let v = if which == 0 { &mut k } else { &mut w };
                v[i] = orig;
                numeric.push((plus - minus) / (2.0 * step));
            }
        }
        let scale = analytic.iter().map(|a| a.abs()).fold(0.0, f64::max).max(1e-300);
        let err = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    worst
}

/// Double-double arithmetic, enough to evaluate the closed-form moments
/// without cancellation near `|K| = |W|`.
mod dd {
    #[derive(Clone, Copy)]
    pub struct Dd(pub f64, pub f64);

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let v = s - a;
        Dd(s, (a - (s - v)) + (b - v))
    }

    pub fn from(a: f64) -> Dd {
        Dd(a, 0.0)
    }

    pub fn add(a: Dd, b: Dd) -> Dd {
        let s = two_sum(a.0, b.0);
        let t = s.1 + a.1 + b.1;
        two_sum(s.0, t)
    }

    pub fn neg(a: Dd) -> Dd {
        Dd(-a.0, -a.1)
    }

    pub fn mul(a: Dd, b: Dd) -> Dd {
        let p = a.0 * b.0;
        let e = a.0.mul_add(b.0, -p);
        two_sum(p, e + a.0 * b.1 + a.1 * b.0)
    }

    pub fn div(a: Dd, b: Dd) -> Dd {
        let q = a.0 / b.0;
        let r = add(a, neg(mul(from(q), b)));
        add(from(q), from(r.0 / b.0))
    }

    pub fn value(a: Dd) -> f64 {
        a.0 + a.1
    }
}

/// `4 W (K^2 + W^2) / K^2` and `2 (K^4 - W^4) / K^3`, evaluated in
/// double-double precision and rounded.
pub fn reference_moments(k: f64, w: f64) -> (f64, f64) {
    use dd::*;
    let (kk, ww) = (from(k), from(w));
    let k2 = mul(kk, kk);
    let w2 = mul(ww, ww);
    let s = add(k2, w2);
    let mt = div(mul(mul(from(4.0), ww), s), k2);
    let k4 = mul(k2, k2);
    let w4 = mul(w2, w2);
    let mb = div(mul(from(2.0), add(k4, neg(w4))), mul(k2, kk));
    (value(mt), value(mb))
}

/// Worst relative deviation of the partials from the closed-form moments.
pub fn constitutive_check(options: &ValidateOptions, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x5eed);
    let params = MaterialParams::unregularized(1.0);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let k: f64 = rng.random_range(-10.0..10.0);
        let w: f64 = rng.random_range(-10.0..10.0);
        if k.abs() <= 1e-3 {
            continue;
        }
        done += 1;
        let Some((du_dk, du_dw)) = (options.partials)(k, w, &params) else {
            return f64::INFINITY;
        };
        let (mt, mb) = reference_moments(k, w);
        let rel = |got: f64, want: f64| {
            if want == 0.0 {
                got.abs()
            } else {
                (got - want).abs() / want.abs()
            }
        };
        worst = worst.max(rel(du_dw, mt)).max(rel(du_dk, mb));
    }
    worst
}

pub fn run_checks(options: &ValidateOptions) -> Vec<CheckResult> {
    let quick = options.quick;
    let mut out = Vec::new();

    let count = if quick { 10 } else { 100 };
    let err = gradient_check(options, count, 64);
    out.push(check(
        "energy gradient matches central differences",
        err <= 1e-6,
        format!("{count} random profiles, n = 64, worst relative error {err:.3e} (limit 1e-6)"),
    ));

    let err = constitutive_check(options, if quick { 1000 } else { 100_000 });
    out.push(check(
        "moments equal the closed-form constitutive law",
        err <= 1e-12,
        format!("worst relative deviation {err:.3e} (limit 1e-12)"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0xc105e);
    let mut worst: f64 = 0.0;
    let trials = if quick { 3 } else { 10 };
    for t in 0..trials {
        let c = if t % 2 == 0 { Closure::Moebius } else { Closure::Orientable };
        let p = random_admissible(&mut rng, 48);
        let a = constraints::closure_jacobian(&p, c).matrix;
        let f = constraints::closure_jacobian_fd(&p, c, 1e-7).matrix;
        worst = worst.max((&a - &f).abs().max() / a.abs().max());
    }
    out.push(check(
        "closure Jacobian matches finite differences",
        worst <= 1e-6,
        format!("{trials} random profiles, worst relative gap {worst:.3e} (limit 1e-6)"),
    ));

    let n = if quick { 256 } else { 4096 };
    let circle = CurvatureTwistProfile::new(2.0 * PI, vec![1.0; n], vec![0.0; n]).expect("valid");
    let curve = reconstruct_gauged(&circle);
    let gap = closure(&curve, Closure::Orientable).norm();
    let orth = curve.frames.iter().map(orthonormality_deviation).fold(0.0, f64::max);
    out.push(check(
        "circle reconstructs closed with orthonormal frames",
        gap < 1e-10 && orth < 1e-12,
        format!("n = {n}, closure gap {gap:.3e}, frame deviation {orth:.3e}"),
    ));

    let p = random_admissible(&mut rng, 33).with_closure(Closure::Moebius);
    let manifest = io::RunManifest::new(Vec::new(), options.seed);
    let here = Path::new("<memory>");
    let profile_ok = io::parse_profile(here, &io::profile_table(&p, &manifest)).ok() == Some(p.clone());
    let c = reconstruct_gauged(&p);
    let curve_ok = io::parse_curve(here, &io::curve_table(&c, &manifest)).ok() == Some(c);
    out.push(check(
        "profile and curve tables round-trip exactly",
        profile_ok && curve_ok,
        format!("profile {profile_ok}, curve {curve_ok}"),
    ));

    let params = MaterialParams::unregularized(1.0);
    let smooth = |n: usize| {
        CurvatureTwistProfile::from_fn(2.0 * PI, n, |s| {
            (1.2 + 0.3 * s.sin() + 0.1 * (2.0 * s).cos(), 0.4 + 0.25 * s.cos())
        })
        .expect("finite")
    };
    let rows = |n: usize| {
        let p = smooth(n);
        let mask = ResidualMask::none(n);
        statics::static_fields(&p, &params, &mask).map(|f| statics::residuals(&p, &f, &mask))
    };
    let detail;
    let passed = match (rows(128), rows(256)) {
        (Ok(a), Ok(b)) => {
            let exact = [0, 3, 4].iter().all(|&j| a.norms14[j].max < 1e-9);
            let ratio = a.norms14[5].max / b.norms14[5].max;
            detail = format!("identity rows max {:.1e}, sixth-row refinement ratio {ratio:.2}", a.norms14[0].max.max(a.norms14[3].max));
            exact && ratio > 3.5
        }
        (Err(e), _) | (_, Err(e)) => {
            detail = e.to_string();
            false
        }
    };
    out.push(check("balance rows built into the fields hold on any profile", passed, detail));

    let n = if quick { 32 } else { 64 };
    let config = SolverConfig {
        n_nodes: n,
        closure: Closure::Orientable,
        clamp_twist: true,
        init_mode: InitMode::PerturbedCircle,
        seed: options.seed,
        perturbation: 0.2,
        ..SolverConfig::default()
    };
    let (passed, detail) = match solver::solve(&config) {
        Ok(sol) => {
            let want = 2.0 * PI;
            let rel = (sol.report.final_energy - want).abs() / want;
            (sol.report.converged && rel < 1e-6, format!("n = {n}, energy error {rel:.3e}"))
        }
        Err(e) => (false, e.to_string()),
    };
    out.push(check("untwisted closed band relaxes to the circle", passed, detail));

    if !quick {
        let config = SolverConfig {
            n_nodes: 64,
            seed: options.seed,
            ..SolverConfig::default()
        };
        let (passed, detail) = match solver::solve(&config) {
            Ok(sol) => {
                let r = &sol.report;
                let phi = analysis::find_singular_point(&sol.profile)
                    .ok()
                    .and_then(|x| analysis::phi_limit_at_x(&sol.profile, x.s, analysis::default_fit_width(&sol.profile)).ok());
                let phi_ok = phi.is_some_and(|p| (p.mean - 45.0).abs() <= 3.0);
                (
                    r.converged && r.final_energy < r.initial_energy && phi_ok,
                    format!(
                        "n = 64, converged {}, energy {:.6} from {:.6}, phi limit {}",
                        r.converged,
                        r.final_energy,
                        r.initial_energy,
                        phi.map_or("n/a".into(), |p| format!("{:.2} deg", p.mean))
                    ),
                )
            }
            Err(e) => (false, e.to_string()),
        };
        out.push(check("Möbius band converges with a 45 degree corner", passed, detail));
    }
    out
}
