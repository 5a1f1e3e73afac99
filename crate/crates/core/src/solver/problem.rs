//! The constrained problem in flat-vector form, shared by the outer loop and
//! the Newton polish.

use nalgebra::{DMatrix, DVector};

use super::constraints::{closure_jacobian, closure_vector};
use crate::energy::{self, MaterialParams};
use crate::geometry::{Closure, CurvatureTwistProfile};

/// Maps the free variables `z` to a profile. With a clamped twist only K is
/// free and W stays at the template's values.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub template: CurvatureTwistProfile,
    pub closure: Closure,
    pub params: MaterialParams,
    pub clamp_twist: bool,
}

impl Problem {
    pub fn n(&self) -> usize {
        self.template.n_nodes()
    }

    pub fn dim(&self) -> usize {
        if self.clamp_twist {
            self.n()
        } else {
            2 * self.n()
        }
    }

    pub fn pack(&self, profile: &CurvatureTwistProfile) -> Vec<f64> {
        let mut z = profile.curvature().to_vec();
        if !self.clamp_twist {
            z.extend_from_slice(profile.twist());
        }
        z
    }

    pub fn unpack(&self, z: &[f64]) -> Option<CurvatureTwistProfile> {
        let n = self.n();
        let k = z[..n].to_vec();
        let w = if self.clamp_twist {
            self.template.twist().to_vec()
        } else {
            z[n..].to_vec()
        };
        self.template.with_samples(k, w).ok()
    }

    /// Energy and gradient, or `None` where the energy is infinite.
    pub fn energy(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let p = self.unpack(z)?;
        let g = energy::gradient(&p, &self.params).ok()?;
        if !g.total.is_finite() {
            return None;
        }
        let mut grad = g.d_curvature;
        if !self.clamp_twist {
            grad.extend(g.d_twist);
        }
        Some((g.total, grad))
    }

    pub fn constraints(&self, z: &[f64]) -> [f64; 6] {
        let p = self.unpack(z).expect("finite variables");
        closure_vector(&p, self.closure)
    }

    /// 6 x dim Jacobian restricted to the free variables.
    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let p = self.unpack(z).expect("finite variables");
        let full = closure_jacobian(&p, self.closure).matrix;
        if self.clamp_twist {
            full.columns(0, self.n()).into_owned()
        } else {
            full
        }
    }

    /// Block-diagonal energy Hessian, as a dense matrix over the free variables.
    pub fn energy_hessian(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let p = self.unpack(z)?;
        let n = self.n();
        let h = p.spacing();
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..n {
            let d = energy::density_hessian(p.curvature()[i], p.twist()[i], &self.params)?;
            m[(i, i)] = h * d.kk;
            if !self.clamp_twist {
                m[(i, n + i)] = h * d.kw;
                m[(n + i, i)] = h * d.kw;
                m[(n + i, n + i)] = h * d.ww;
            }
        }
        Some(m)
    }

    /// Component of `grad` orthogonal to the row space of `jac`: the part of
    /// the gradient that a constraint-preserving variation can still reduce.
    pub fn project_out(jac: &DMatrix<f64>, grad: &[f64]) -> Vec<f64> {
        let g = DVector::from_column_slice(grad);
        let svd = jac.transpose().svd(true, false);
        let u = svd.u.expect("requested U");
        let smax = svd.singular_values.max();
        let mut out = g.clone();
        for (j, &sigma) in svd.singular_values.iter().enumerate() {
            if sigma > 1e-10 * smax {
                let col = u.column(j);
                let c = col.dot(&g);
                out -= col * c;
            }
        }
        out.iter().copied().collect()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
