//! Energy minimization under closure constraints.
//!
//! The unknowns are the sampled `(K, W)` themselves, so inextensibility is
//! built in and only the six closure conditions remain. They are enforced by
//! an augmented Lagrangian
//! `E + lambda . g + (mu / 2) |g|^2` whose inner problems are solved by L-BFGS,
//! while `epsilon` is annealed toward zero and `mu` grows. Once the schedules
//! are spent, a Newton iteration on the optimality system finishes the job.

pub mod constraints;
pub mod lbfgs;
mod polish;
mod problem;

use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{total_energy, MaterialParams};
use crate::error::{BandError, Result};
use crate::geometry::{
    closure, reconstruct_gauged, Closure, ClosureResidual, CurvatureTwistProfile, FramedCurve,
};
use constraints::{closure_jacobian, closure_jacobian_fd, ClosureJacobian};
use lbfgs::{LbfgsOptions, Termination};
use problem::{norm, Problem};

#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// Closed-form Möbius-like profile with one corner in K.
    AnalyticMoebius,
    /// Circle with a small twist wave; a Möbius closure has to be repaired.
    PerturbedCircle,
    /// Profile table on disk.
    FromFile(PathBuf),
}

impl InitMode {
    pub fn as_str(&self) -> &str {
        match self {
            InitMode::AnalyticMoebius => "analytic_moebius",
            InitMode::PerturbedCircle => "perturbed_circle",
            InitMode::FromFile(_) => "from_file",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyStage {
    pub mu: f64,
    pub max_inner: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub n_nodes: usize,
    pub length: f64,
    pub stiffness: f64,
    pub closure: Closure,
    /// Hold W at zero and optimize K alone.
    pub clamp_twist: bool,
    pub epsilon_schedule: Vec<f64>,
    pub penalty_schedule: Vec<PenaltyStage>,
    pub grad_tol: f64,
    pub constraint_tol: f64,
    pub init_mode: InitMode,
    pub seed: u64,
    /// Relative amplitude of the perturbed-circle seed.
    pub perturbation: f64,
    /// Outer iterations allowed beyond the schedules.
    pub max_outer: usize,
    pub polish: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::with_length(2.0 * PI)
    }
}

impl SolverConfig {
    /// Default schedules scaled to a band of length `length`.
    pub fn with_length(length: f64) -> Self {
        Self {
            n_nodes: 256,
            length,
            stiffness: 1.0,
            closure: Closure::Moebius,
            clamp_twist: false,
            epsilon_schedule: [1e-1, 1e-2, 1e-3, 1e-4].iter().map(|e| e / length).collect(),
            penalty_schedule: [1.0, 10.0, 100.0, 1000.0]
                .iter()
                .map(|&mu| PenaltyStage { mu, max_inner: 3000 })
                .collect(),
            grad_tol: 1e-6,
            constraint_tol: 1e-6,
            init_mode: InitMode::AnalyticMoebius,
            seed: 0,
            perturbation: 0.1,
            max_outer: 20,
            polish: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| Err(BandError::config(field, format!("{field} {message}")));
        if self.n_nodes < CurvatureTwistProfile::MIN_NODES {
            return bad("n_nodes", format!("must be ≥ {}", CurvatureTwistProfile::MIN_NODES));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad("length", "must be positive".into());
        }
        if !(self.stiffness.is_finite() && self.stiffness > 0.0) {
            return bad("A", "must be positive".into());
        }
        if self.epsilon_schedule.is_empty() {
            return bad("epsilon_schedule", "must not be empty".into());
        }
        if self.epsilon_schedule.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return bad("epsilon_schedule", "entries must be non-negative".into());
        }
        if self.penalty_schedule.is_empty() {
            return bad("penalty_schedule", "must not be empty".into());
        }
        if self.penalty_schedule.iter().any(|p| !(p.mu.is_finite() && p.mu > 0.0) || p.max_inner == 0) {
            return bad("penalty_schedule", "mu must be positive and max_inner nonzero".into());
        }
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol", "must be positive".into());
        }
        if !(self.constraint_tol > 0.0) {
            return bad("constraint_tol", "must be positive".into());
        }
        if !self.perturbation.is_finite() {
            return bad("perturbation", "must be finite".into());
        }
        Ok(())
    }

    /// Schedules cut down to their final stage, for continuing from a
    /// solution that already nearly satisfies the constraints (for example
    /// one interpolated from a coarser grid).
    pub fn warm_start(&self) -> Self {
        Self {
            epsilon_schedule: vec![self.final_epsilon()],
            penalty_schedule: vec![*self.penalty_schedule.last().expect("non-empty")],
            ..self.clone()
        }
    }

    fn final_epsilon(&self) -> f64 {
        *self.epsilon_schedule.last().expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    /// Energy without regularization; infinite if some K vanishes.
    pub final_energy: f64,
    /// Energy at the last regularization used.
    pub regularized_energy: f64,
    pub initial_energy: f64,
    pub closure: ClosureResidual,
    /// Norm of the energy gradient with the constraint directions projected out.
    pub projected_gradient: f64,
    /// `|grad E + J^T lambda|`.
    pub stationarity: f64,
    pub multipliers: [f64; 6],
    /// Total inner quasi-Newton iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub polish_steps: usize,
    /// Per outer iteration.
    pub energy_history: Vec<f64>,
    pub constraint_history: Vec<f64>,
    pub penalty_history: Vec<f64>,
    /// Whether each inner minimization ended with a non-increasing objective.
    pub inner_monotone: Vec<bool>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub profile: CurvatureTwistProfile,
    pub curve: FramedCurve,
    pub report: SolverReport,
}

/// State handed to a checkpoint callback after every outer iteration.
#[derive(Debug)]
pub struct Checkpoint<'a> {
    pub outer: usize,
    pub profile: &'a CurvatureTwistProfile,
    pub energy: f64,
    pub constraint_norm: f64,
    pub mu: f64,
    pub epsilon: f64,
}

/// Closed-form starting profile: K changes sign once through a corner at
/// `s = L/2` and the frame nearly closes with the Möbius half turn.
pub fn analytic_moebius(length: f64, n: usize) -> Result<CurvatureTwistProfile> {
    let c = 2.0 * PI / length;
    CurvatureTwistProfile::from_fn(length, n, |s| {
        let u = s - 0.5 * length;
        let a = 2.0 * PI * u / length;
        let sign = if u < 0.0 { 1.0 } else { -1.0 };
        let k = sign * c * (1.22 + 0.23 * a.cos() - 0.58 * (2.0 * a).cos());
        let w = c * (0.32 + 0.83 * a.cos() - 0.13 * (2.0 * a).cos());
        (k, w)
    })
    .map(|p| p.with_closure(Closure::Moebius))
}

/// Circle of circumference `length` with a twist wave of amplitude `delta`.
/// The phase of the wave is drawn from `seed`.
pub fn perturbed_circle(length: f64, n: usize, delta: f64, seed: u64) -> Result<CurvatureTwistProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let c = 2.0 * PI / length;
    CurvatureTwistProfile::from_fn(length, n, |s| {
        let a = 2.0 * PI * s / length + phase;
        (c, delta * a.cos())
    })
}

pub fn initialize(config: &SolverConfig) -> Result<CurvatureTwistProfile> {
    config.validate()?;
    let profile = match &config.init_mode {
        InitMode::AnalyticMoebius => analytic_moebius(config.length, config.n_nodes)?,
        InitMode::PerturbedCircle => {
            perturbed_circle(config.length, config.n_nodes, config.perturbation, config.seed)?
        }
        InitMode::FromFile(path) => {
            let p = crate::io::read_profile(path)?;
            if p.n_nodes() == config.n_nodes {
                p
            } else {
                p.resample(config.n_nodes)?
            }
        }
    };
    let profile = profile.with_closure(config.closure);
    if config.clamp_twist {
        let n = profile.n_nodes();
        profile.with_samples(profile.curvature().to_vec(), vec![0.0; n])
    } else {
        Ok(profile)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMethod {
    Adjoint,
    FiniteDifference,
}

/// Jacobian of the six closure residuals with respect to all `(K_i, W_i)`.
pub fn gradient_of_constraints(
    profile: &CurvatureTwistProfile,
    closure: Closure,
    method: JacobianMethod,
) -> ClosureJacobian {
    match method {
        JacobianMethod::Adjoint => closure_jacobian(profile, closure),
        JacobianMethod::FiniteDifference => closure_jacobian_fd(profile, closure, 1e-7),
    }
}

pub fn solve(config: &SolverConfig) -> Result<Solution> {
    let initial = initialize(config)?;
    solve_from(config, &initial, None)
}

/// Minimize from `initial`, which is resampled to `config.n_nodes` if needed.
pub fn solve_from(
    config: &SolverConfig,
    initial: &CurvatureTwistProfile,
    mut checkpoint: Option<&mut dyn FnMut(&Checkpoint)>,
) -> Result<Solution> {
    config.validate()?;
    let mut start = if initial.n_nodes() == config.n_nodes {
        initial.clone()
    } else {
        initial.resample(config.n_nodes)?
    };
    if (start.length() - config.length).abs() > 1e-12 * config.length {
        return Err(BandError::config(
            "length",
            format!("initial profile has length {}, config {}", start.length(), config.length),
        ));
    }
    start = start.with_closure(config.closure);
    if config.clamp_twist {
        start = start.with_samples(start.curvature().to_vec(), vec![0.0; config.n_nodes])?;
    }

    let mut problem = Problem {
        template: start.clone(),
        closure: config.closure,
        params: MaterialParams::new(config.stiffness, config.epsilon_schedule[0])?,
        clamp_twist: config.clamp_twist,
    };
    let mut z = problem.pack(&start);
    if problem.energy(&z).is_none() {
        return Err(BandError::InvalidInput(
            "initial profile has infinite energy at the first regularization".into(),
        ));
    }
    let initial_energy = total_energy(&start, &MaterialParams::unregularized(config.stiffness));

    let mut lambda = [0.0; 6];
    let mut mu = config.penalty_schedule[0].mu;
    let mut report = SolverReport {
        converged: false,
        final_energy: f64::NAN,
        regularized_energy: f64::NAN,
        initial_energy,
        closure: ClosureResidual::zero(),
        projected_gradient: f64::NAN,
        stationarity: f64::NAN,
        multipliers: lambda,
        iterations: 0,
        outer_iterations: 0,
        polish_steps: 0,
        energy_history: Vec::new(),
        constraint_history: Vec::new(),
        penalty_history: Vec::new(),
        inner_monotone: Vec::new(),
        message: String::new(),
    };
    let scheduled = config.epsilon_schedule.len().max(config.penalty_schedule.len());
    let total_outer = scheduled + config.max_outer;
    let mut previous_gap = f64::INFINITY;

    for outer in 0..total_outer {
        let eps = config.epsilon_schedule[outer.min(config.epsilon_schedule.len() - 1)];
        let stage = config.penalty_schedule[outer.min(config.penalty_schedule.len() - 1)];
        if outer < config.penalty_schedule.len() {
            mu = stage.mu;
        }
        problem.params = MaterialParams::new(config.stiffness, eps)?;

        let lam = lambda;
        let phi = |x: &[f64]| -> Option<(f64, Vec<f64>)> {
            let (e, mut grad) = problem.energy(x)?;
            let g = problem.constraints(x);
            let jac = problem.jacobian(x);
            let weights: [f64; 6] = std::array::from_fn(|r| lam[r] + mu * g[r]);
            let jt = jac.transpose() * DVector::from_column_slice(&weights);
            grad.iter_mut().zip(jt.iter()).for_each(|(a, b)| *a += b);
            let value = e
                + (0..6).map(|r| lam[r] * g[r]).sum::<f64>()
                + 0.5 * mu * g.iter().map(|v| v * v).sum::<f64>();
            Some((value, grad))
        };
        let options = LbfgsOptions {
            max_iter: stage.max_inner,
            grad_tol: 0.1 * config.grad_tol,
            ..Default::default()
        };
        let outcome = lbfgs::minimize(z.clone(), phi, &options).ok_or_else(|| {
            BandError::InvalidInput("iterate became inadmissible between stages".into())
        })?;
        report.iterations += outcome.iterations;
        report
            .inner_monotone
            .push(outcome.history.windows(2).all(|w| w[1] <= w[0]));
        z = outcome.x;

        let g = problem.constraints(&z);
        for r in 0..6 {
            lambda[r] += mu * g[r];
        }
        let gap = norm(&g);
        let energy = problem.energy(&z).map(|(e, _)| e).unwrap_or(f64::INFINITY);
        report.energy_history.push(energy);
        report.constraint_history.push(gap);
        report.penalty_history.push(mu);
        report.outer_iterations = outer + 1;
        if let Some(cb) = checkpoint.as_deref_mut() {
            let profile = problem.unpack(&z).expect("finite iterate");
            cb(&Checkpoint {
                outer,
                profile: &profile,
                energy,
                constraint_norm: gap,
                mu,
                epsilon: eps,
            });
        }
        if outcome.termination == Termination::Stalled && gap > config.constraint_tol {
            report.message = format!("inner minimizer stalled at outer iteration {outer}");
        }

        if outer + 1 >= scheduled {
            if config.polish {
                let tol = 0.01 * config.grad_tol.min(config.constraint_tol);
                if let Some(p) = polish::polish(&problem, &z, &lambda, tol) {
                    report.polish_steps += p.steps;
                    z = p.z;
                    lambda = p.lambda;
                }
            }
            if measure(&problem, &z, &lambda, config).0 {
                break;
            }
            let gap_now = norm(&problem.constraints(&z));
            if gap_now > 0.25 * previous_gap {
                mu *= 10.0;
            }
            previous_gap = gap_now;
        } else {
            previous_gap = gap;
        }
    }

    let (converged, residual, projected, stationarity) = measure(&problem, &z, &lambda, config);
    let profile = problem.unpack(&z).expect("finite iterate");
    let curve = reconstruct_gauged(&profile);
    report.converged = converged;
    report.closure = residual;
    report.projected_gradient = projected;
    report.stationarity = stationarity;
    report.multipliers = lambda;
    report.regularized_energy = total_energy(
        &profile,
        &MaterialParams::new(config.stiffness, config.final_epsilon())?,
    );
    report.final_energy = total_energy(&profile, &MaterialParams::unregularized(config.stiffness));
    if !converged {
        report.message = format!(
            "not converged after {} outer iterations: position gap {:.3e}, frame gap {:.3e}, projected gradient {:.3e}{}{}",
            report.outer_iterations,
            residual.position_gap.norm(),
            residual.frame_gap.norm(),
            projected,
            if report.message.is_empty() { "" } else { "; " },
            report.message
        );
    } else {
        report.message = "converged".into();
    }
    Ok(Solution {
        profile,
        curve,
        report,
    })
}

/// `(converged, closure, projected gradient, stationarity)` at `z`.
fn measure(
    problem: &Problem,
    z: &[f64],
    lambda: &[f64; 6],
    config: &SolverConfig,
) -> (bool, ClosureResidual, f64, f64) {
    let profile = problem.unpack(z).expect("finite iterate");
    let residual = closure(&reconstruct_gauged(&profile), config.closure);
    let Some((_, grad)) = problem.energy(z) else {
        return (false, residual, f64::INFINITY, f64::INFINITY);
    };
    let jac = problem.jacobian(z);
    let projected = norm(&Problem::project_out(&jac, &grad));
    let jt = jac.transpose() * DVector::from_column_slice(lambda);
    let stat: Vec<f64> = grad.iter().zip(jt.iter()).map(|(a, b)| a + b).collect();
    let converged = residual.position_gap.norm() <= config.constraint_tol
        && residual.frame_gap.norm() <= config.constraint_tol
        && projected <= config.grad_tol;
    (converged, residual, projected, norm(&stat))
}

/// Projected energy gradient of an arbitrary profile, with all `(K, W)` free.
pub fn projected_gradient(
    profile: &CurvatureTwistProfile,
    params: &MaterialParams,
    closure: Closure,
) -> Result<f64> {
    let g = crate::energy::gradient(profile, params)?;
    let mut grad = g.d_curvature;
    grad.extend(g.d_twist);
    let jac = closure_jacobian(profile, closure).matrix;
    Ok(norm(&Problem::project_out(&jac, &grad)))
}
