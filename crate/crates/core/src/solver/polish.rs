//! Newton iteration on the first-order optimality system
//! `grad E + J^T lambda = 0`, `g = 0`, started from the augmented-Lagrangian
//! iterate. The constraint curvature `sum lambda_r Hess g_r` comes from
//! central differences of `J^T lambda`.

use nalgebra::{DMatrix, DVector};

use super::problem::{norm, Problem};

pub(crate) struct PolishOutcome {
    pub z: Vec<f64>,
    pub lambda: [f64; 6],
    pub steps: usize,
}

const MAX_STEPS: usize = 25;
const FD_STEP: f64 = 1e-6;
/// Keeps the saddle-point matrix invertible when the constraints are
/// rank-deficient (planar problems lose three of the six).
const DUAL_SHIFT: f64 = 1e-12;

fn kkt_residual(problem: &Problem, z: &[f64], lambda: &[f64; 6]) -> Option<Vec<f64>> {
    let (_, grad) = problem.energy(z)?;
    let jac = problem.jacobian(z);
    let g = problem.constraints(z);
    let lam = DVector::from_column_slice(lambda);
    let jtl = jac.transpose() * lam;
    let mut r: Vec<f64> = grad.iter().zip(jtl.iter()).map(|(a, b)| a + b).collect();
    r.extend_from_slice(&g);
    Some(r)
}

fn constraint_curvature(problem: &Problem, z: &[f64], lambda: &[f64; 6]) -> DMatrix<f64> {
    let m = z.len();
    let lam = DVector::from_column_slice(lambda);
    let column = |j: usize| -> Vec<f64> {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[j] += FD_STEP;
        zm[j] -= FD_STEP;
        let ap = problem.jacobian(&zp).transpose() * &lam;
        let am = problem.jacobian(&zm).transpose() * &lam;
        ap.iter().zip(am.iter()).map(|(p, q)| (p - q) / (2.0 * FD_STEP)).collect()
    };
    #[cfg(feature = "parallel")]
    let cols: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..m).into_par_iter().map(column).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cols: Vec<Vec<f64>> = (0..m).map(column).collect();
    let mut h = DMatrix::zeros(m, m);
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            h[(i, j)] = *v;
        }
    }
    (&h + h.transpose()) * 0.5
}

fn newton_step(problem: &Problem, z: &[f64], lambda: &[f64; 6], residual: &[f64]) -> Option<Vec<f64>> {
    let m = z.len();
    let mut hess = problem.energy_hessian(z)?;
    hess += constraint_curvature(problem, z, lambda);
    let jac = problem.jacobian(z);
    let mut kkt = DMatrix::zeros(m + 6, m + 6);
    kkt.view_mut((0, 0), (m, m)).copy_from(&hess);
    kkt.view_mut((0, m), (m, 6)).copy_from(&jac.transpose());
    kkt.view_mut((m, 0), (6, m)).copy_from(&jac);
    for r in 0..6 {
        kkt[(m + r, m + r)] = -DUAL_SHIFT;
    }
    let rhs = -DVector::from_column_slice(residual);
    let step = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .or_else(|| kkt.svd(true, true).solve(&rhs, 1e-14).ok())?;
    Some(step.iter().copied().collect())
}

/// Damped Newton on the KKT residual. Returns `None` if no step reduced it.
pub(crate) fn polish(problem: &Problem, z0: &[f64], lambda0: &[f64; 6], tol: f64) -> Option<PolishOutcome> {
    let mut z = z0.to_vec();
    let mut lambda = *lambda0;
    let mut res = kkt_residual(problem, &z, &lambda)?;
    let mut steps = 0;
    while steps < MAX_STEPS && norm(&res) > tol {
        let Some(step) = newton_step(problem, &z, &lambda, &res) else {
            break;
        };
        let m = z.len();
        let current = norm(&res);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let zt: Vec<f64> = z.iter().zip(&step[..m]).map(|(a, d)| a + alpha * d).collect();
            let lt: [f64; 6] = std::array::from_fn(|r| lambda[r] + alpha * step[m + r]);
            if let Some(rt) = kkt_residual(problem, &zt, &lt) {
                if norm(&rt) < (1.0 - 1e-4 * alpha) * current {
                    accepted = Some((zt, lt, rt));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((zt, lt, rt)) = accepted else {
            break;
        };
        z = zt;
        lambda = lt;
        res = rt;
        steps += 1;
    }
    (steps > 0).then_some(PolishOutcome { z, lambda, steps })
}
