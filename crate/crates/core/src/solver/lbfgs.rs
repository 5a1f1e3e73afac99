//! Limited-memory BFGS with Armijo backtracking.
//!
//! The objective returns `None` for inadmissible points (infinite energy);
//! the line search treats those like a failed sufficient-decrease test, so
//! iterates never leave the admissible set.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop once the Euclidean gradient norm drops to this value.
    pub grad_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 2000,
            grad_tol: 1e-8,
            armijo: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    IterationLimit,
    /// No descent possible even along the steepest-descent direction.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective value after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|qi| *qi *= gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        q.iter_mut().for_each(|qi| *qi = -*qi);
        q
    }
}

/// Minimize `f`, which returns the value and gradient or `None` if the point
/// is inadmissible. `x0` must be admissible.
pub fn minimize<F>(x0: Vec<f64>, mut f: F, options: &LbfgsOptions) -> Option<LbfgsOutcome>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let (mut value, mut grad) = f(&x0)?;
    let mut x = x0;
    let mut memory = Memory {
        pairs: VecDeque::with_capacity(options.memory),
        capacity: options.memory,
    };
    let mut history = vec![value];
    let mut iterations = 0;
    let termination = loop {
        let gnorm = norm(&grad);
        if gnorm <= options.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= options.max_iter {
            break Termination::IterationLimit;
        }
        let mut dir = memory.direction(&grad);
        let mut slope = dot(&dir, &grad);
        if !(slope < 0.0) {
            memory.pairs.clear();
            dir = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if memory.pairs.is_empty() {
            (1.0 / gnorm).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..options.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((v, g)) = f(&trial) {
                if v.is_finite() && v <= value + options.armijo * step * slope {
                    accepted = Some((trial, v, g));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, v, g)) => {
                let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
                memory.push(s, y);
                x = trial;
                value = v;
                grad = g;
                history.push(value);
                iterations += 1;
            }
            None if memory.pairs.is_empty() => break Termination::Stalled,
            None => memory.pairs.clear(),
        }
    };
    Some(LbfgsOutcome {
        grad_norm: norm(&grad),
        x,
        value,
        iterations,
        termination,
        history,
    })
}
