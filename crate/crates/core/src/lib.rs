//! Equilibrium shapes of inextensible, infinitesimally narrow developable
//! elastic bands closed into a Möbius band.
//!
//! The band is parameterized by curvature and torsion on a fixed arclength
//! grid, its bending energy is minimized subject to Möbius closure,
//! and the converged shape is checked against the static equilibrium
//! equations and the predicted geometry near the singular point.

pub mod analysis;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod io;
pub mod rotation;
pub mod solver;
pub mod statics;
pub mod validate;

pub use error::{BandError, Result};
pub use geometry::{Closure, CurvatureTwistProfile, FramedCurve};
