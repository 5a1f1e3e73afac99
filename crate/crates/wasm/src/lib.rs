//! Browser bindings: build a band from a few Fourier modes, relax it to
//! equilibrium, and triangulate it for display.

use std::f64::consts::PI;

use band_core::analysis;
use band_core::geometry::{self, Closure, CurvatureTwistProfile, FramedCurve};
use band_core::solver::{self, InitMode, SolverConfig};
use band_core::{energy, BandError};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; the solve runs on the UI thread.
pub const MAX_NODES: usize = 512;

fn js_err(e: BandError) -> JsError {
    JsError::new(&e.to_string())
}

fn check_nodes(n: usize) -> Result<(), JsError> {
    if n > MAX_NODES {
        return Err(JsError::new(&format!("at most {MAX_NODES} nodes, got {n}")));
    }
    Ok(())
}

/// A centreline with its curvature and twist.
#[wasm_bindgen]
pub struct Band {
    profile: CurvatureTwistProfile,
    curve: FramedCurve,
    energy: f64,
    converged: bool,
}

impl Band {
    fn new(profile: CurvatureTwistProfile, converged: bool) -> Band {
        let curve = geometry::reconstruct_gauged(&profile);
        let energy = energy::total_energy(&profile, &energy::MaterialParams::unregularized(1.0));
        Band {
            profile,
            curve,
            energy,
            converged,
        }
    }
}

#[wasm_bindgen]
impl Band {
    /// Band of length 2π with `K(s) = Σ k_j cos(f_j s)` and
    /// `W(s) = Σ w_j cos(j s)`. For a Möbius band `f_j = j + 1/2`, which makes
    /// `K` change sign over one lap; otherwise `f_j = j`.
    #[wasm_bindgen(js_name = fromFourier)]
    pub fn from_fourier(n: usize, k: &[f64], w: &[f64], moebius: bool) -> Result<Band, JsError> {
        check_nodes(n)?;
        let shift = if moebius { 0.5 } else { 0.0 };
        let series = |c: &[f64], s: f64, shift: f64| {
            c.iter()
                .enumerate()
                .map(|(j, a)| a * ((j as f64 + shift) * s).cos())
                .sum::<f64>()
        };
        let closure = if moebius { Closure::Moebius } else { Closure::Orientable };
        let profile = CurvatureTwistProfile::from_fn(2.0 * PI, n, |s| (series(k, s, shift), series(w, s, 0.0)))
            .map_err(js_err)?
            .with_closure(closure);
        Ok(Band::new(profile, false))
    }

    /// Relax a Möbius band of length 2π on `n` cells from the built-in
    /// initial guess.
    pub fn solve(n: usize) -> Result<Band, JsError> {
        check_nodes(n)?;
        let mut config = SolverConfig::with_length(2.0 * PI);
        config.n_nodes = n;
        config.init_mode = InitMode::AnalyticMoebius;
        let solution = solver::solve(&config).map_err(js_err)?;
        Ok(Band::new(solution.profile, solution.report.converged))
    }

    #[wasm_bindgen(getter)]
    pub fn energy(&self) -> f64 {
        self.energy
    }

    #[wasm_bindgen(getter)]
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Position and frame mismatch between the two ends.
    #[wasm_bindgen(js_name = closureGap)]
    pub fn closure_gap(&self) -> Vec<f64> {
        let c = geometry::closure(&self.curve, self.profile.closure());
        vec![c.position_gap.norm(), c.frame_gap.norm()]
    }

    pub fn curvature(&self) -> Vec<f64> {
        self.profile.curvature().to_vec()
    }

    pub fn twist(&self) -> Vec<f64> {
        self.profile.twist().to_vec()
    }

    /// Centreline nodes as flat `x, y, z` triples, closing node included.
    pub fn centerline(&self) -> Vec<f64> {
        self.curve
            .positions
            .iter()
            .chain(std::iter::once(&self.curve.end_position))
            .flat_map(|p| [p.x, p.y, p.z])
            .collect()
    }

    /// Arclength of the singular point, or NaN if the band has none.
    #[wasm_bindgen(js_name = singularPoint)]
    pub fn singular_point(&self) -> f64 {
        analysis::find_singular_point(&self.profile).map_or(f64::NAN, |p| p.s)
    }

    /// Strip triangles of full width `width` as flat vertex triples,
    /// three vertices per triangle.
    pub fn strip(&self, width: f64) -> Result<Vec<f64>, JsError> {
        if !(width.is_finite() && width > 0.0) {
            return Err(JsError::new(&format!("strip width must be positive, got {width}")));
        }
        let mesh = geometry::strip_mesh(&self.profile, &self.curve, 0.5 * width).map_err(js_err)?;
        Ok(mesh
            .triangles
            .iter()
            .flatten()
            .flat_map(|&i| {
                let v = mesh.vertices[i];
                [v.x, v.y, v.z]
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_curvature_closes_into_a_circle() {
        let band = Band::from_fourier(64, &[1.0], &[], false).unwrap();
        let [dx, dr] = band.closure_gap()[..] else { unreachable!() };
        assert!(dx < 1e-12 && dr < 1e-12, "{dx} {dr}");
        assert!((band.energy() - 2.0 * PI).abs() < 1e-9);
        assert_eq!(band.centerline().len(), 3 * 65);
        assert!(band.singular_point().is_nan());
    }

    #[test]
    fn strip_has_two_triangles_per_cell() {
        let band = Band::from_fourier(32, &[1.0, 0.3], &[0.5], true).unwrap();
        assert_eq!(band.strip(0.1).unwrap().len(), 2 * 32 * 9);
        assert!(band.singular_point().is_finite());
    }

    #[test]
    fn small_solve_closes() {
        let band = Band::solve(32).unwrap();
        assert!(band.converged());
        assert!(band.closure_gap().iter().all(|g| *g < 1e-6));
    }
}
