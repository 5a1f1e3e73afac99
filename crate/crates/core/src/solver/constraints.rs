//! The six closure constraints and their Jacobian with respect to `(K, W)`.
//!
//! Node 0 is pinned at the origin with the identity frame, so the constraint
//! vector is `(x(L), log(R_target^T R(L)))`.
//!
//! The analytic Jacobian follows from perturbing the Darboux vector of one
//! cell: everything downstream rotates rigidly about the cell's end node, so
//! one forward sweep that stores node frames and positions gives every column
//! in O(n).

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::geometry::{reconstruct_gauged, Closure, CurvatureTwistProfile};
use crate::rotation;

/// Closure residual as a flat 6-vector: position gap then frame gap.
pub fn closure_vector(profile: &CurvatureTwistProfile, closure: Closure) -> [f64; 6] {
    let sweep = Sweep::run(profile);
    let phi = sweep.frame_gap(closure);
    let x = sweep.positions[profile.n_nodes()];
    [x.x, x.y, x.z, phi.x, phi.y, phi.z]
}

/// Dense 6 x 2n Jacobian. Columns `0..n` are `d/dK_i`, columns `n..2n` are `d/dW_i`.
#[derive(Debug, Clone)]
pub struct ClosureJacobian {
    pub matrix: DMatrix<f64>,
}

impl ClosureJacobian {
    pub fn n_nodes(&self) -> usize {
        self.matrix.ncols() / 2
    }

    /// `J^T lambda`, split into the K and W halves.
    pub fn transpose_apply(&self, lambda: &[f64; 6]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_nodes();
        let mut dk = vec![0.0; n];
        let mut dw = vec![0.0; n];
        for j in 0..2 * n {
            let col = self.matrix.column(j);
            let v: f64 = (0..6).map(|r| col[r] * lambda[r]).sum();
            if j < n {
                dk[j] = v;
            } else {
                dw[j - n] = v;
            }
        }
        (dk, dw)
    }
}

struct Sweep {
    h: f64,
    omegas: Vec<Vector3<f64>>,
    halves: Vec<Matrix3<f64>>,
    frames: Vec<Matrix3<f64>>,
    positions: Vec<Vector3<f64>>,
}

impl Sweep {
    fn run(profile: &CurvatureTwistProfile) -> Self {
        let h = profile.spacing();
        let curve = reconstruct_gauged(profile);
        let omegas: Vec<Vector3<f64>> = profile
            .curvature()
            .iter()
            .zip(profile.twist())
            .map(|(&k, &w)| Vector3::new(w, 0.0, k))
            .collect();
        let halves = omegas.iter().map(|o| rotation::exp(&(o * (0.5 * h)))).collect();
        let mut frames = curve.frames;
        frames.push(curve.end_frame);
        let mut positions = curve.positions;
        positions.push(curve.end_position);
        Self {
            h,
            omegas,
            halves,
            frames,
            positions,
        }
    }

    fn frame_gap(&self, closure: Closure) -> Vector3<f64> {
        let target = closure.target(&Matrix3::identity());
        rotation::log(&(target.transpose() * self.frames[self.omegas.len()]))
    }
}

/// Analytic Jacobian of [`closure_vector`].
pub fn closure_jacobian(profile: &CurvatureTwistProfile, closure: Closure) -> ClosureJacobian {
    let n = profile.n_nodes();
    let sweep = Sweep::run(profile);
    let h = sweep.h;
    let phi = sweep.frame_gap(closure);
    let jinv = rotation::right_jacobian_inv(&phi);
    let end_frame = sweep.frames[n];
    let end_x = sweep.positions[n];
    let mut matrix = DMatrix::zeros(6, 2 * n);
    let axes = [(0usize, Vector3::z()), (n, Vector3::x())];
    for i in 0..n {
        let omega = sweep.omegas[i];
        let jr_full = rotation::right_jacobian(&(omega * h)) * h;
        let jr_half = rotation::right_jacobian(&(omega * (0.5 * h))) * (0.5 * h);
        let tail = end_x - sweep.positions[i + 1];
        let mid = sweep.frames[i] * sweep.halves[i];
        for &(offset, axis) in &axes {
            let v = jr_full * axis;
            let spatial = sweep.frames[i + 1] * v;
            let d_rot = jinv * (end_frame.transpose() * spatial);
            let u = jr_half * axis;
            let d_pos = mid * u.cross(&Vector3::x()) * h + spatial.cross(&tail);
            let col = offset + i;
            for r in 0..3 {
                matrix[(r, col)] = d_pos[r];
                matrix[(r + 3, col)] = d_rot[r];
            }
        }
    }
    ClosureJacobian { matrix }
}

/// Forward-difference Jacobian, the independent check on [`closure_jacobian`].
pub fn closure_jacobian_fd(profile: &CurvatureTwistProfile, closure: Closure, step: f64) -> ClosureJacobian {
    let n = profile.n_nodes();
    let base = closure_vector(profile, closure);
    let column = |j: usize| -> [f64; 6] {
        let mut k = profile.curvature().to_vec();
        let mut w = profile.twist().to_vec();
        if j < n {
            k[j] += step;
        } else {
            w[j - n] += step;
        }
        let p = profile
            .with_samples(k, w)
            .expect("perturbed samples stay finite");
        let g = closure_vector(&p, closure);
        std::array::from_fn(|r| (g[r] - base[r]) / step)
    };
    #[cfg(feature = "parallel")]
    let cols: Vec<[f64; 6]> = {
        use rayon::prelude::*;
        (0..2 * n).into_par_iter().map(column).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let cols: Vec<[f64; 6]> = (0..2 * n).map(column).collect();
    let mut matrix = DMatrix::zeros(6, 2 * n);
    for (j, c) in cols.iter().enumerate() {
        for r in 0..6 {
            matrix[(r, j)] = c[r];
        }
    }
    ClosureJacobian { matrix }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> CurvatureTwistProfile {
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        CurvatureTwistProfile::from_fn(2.0 * PI, n, |s| {
            (
                1.0 + c[0] * s.sin() + c[1] * (2.0 * s).cos() + 0.3 * c[2],
                c[3] + c[4] * s.cos() + c[5] * (3.0 * s).sin(),
            )
        })
        .unwrap()
    }

    fn relative_gap(a: &ClosureJacobian, b: &ClosureJacobian) -> f64 {
        (&a.matrix - &b.matrix).abs().max() / a.matrix.abs().max()
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..10 {
            let closure = if trial % 2 == 0 { Closure::Moebius } else { Closure::Orientable };
            let p = random_profile(&mut rng, 48).with_closure(closure);
            let a = closure_jacobian(&p, closure);
            let f = closure_jacobian_fd(&p, closure, 1e-7);
            let gap = relative_gap(&a, &f);
            assert!(gap < 1e-6, "trial {trial}: relative gap {gap}");
        }
    }

    #[test]
    fn circle_jacobian_matches_fd() {
        let p = CurvatureTwistProfile::new(2.0 * PI, vec![1.0; 32], vec![0.0; 32]).unwrap();
        let a = closure_jacobian(&p, Closure::Orientable);
        let f = closure_jacobian_fd(&p, Closure::Orientable, 1e-7);
        assert!(relative_gap(&a, &f) < 1e-6);
        // A uniform change of W is a rigid spin of the planar circle about
        // each tangent; summed, the in-plane position gap does not move.
        let n = 32;
        let d: Vec<f64> = (0..3).map(|r| (n..2 * n).map(|j| a.matrix[(r, j)]).sum()).collect();
        assert!(d[0].abs() < 1e-9 && d[1].abs() < 1e-9, "{d:?}");
    }

    #[test]
    fn zero_perturbation_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_profile(&mut rng, 16);
        let base = closure_vector(&p, Closure::Orientable);
        let again = closure_vector(&p.with_samples(p.curvature().to_vec(), p.twist().to_vec()).unwrap(), Closure::Orientable);
        assert_eq!(base, again);
    }
}
