//! Alpha rescaling of frame-rotation columns.
//!
//! Displacement columns are solved in units of the separation distance and
//! the rotation columns `l`, `m` are bounded by a small constant. When the
//! floating-point solution fails an exact re-evaluation, the rotation
//! columns are shrunk by a growing factor `alpha` and the LP is solved again.

use thiserror::Error;

use crate::problem::LpProblem;
use crate::{LpSolution, LpSolver, Status};

#[derive(Clone, Debug)]
pub struct ScalingConfig {
    /// Bound on the magnitude of each frame-scaled column.
    pub lm_bound: f64,
    /// Starting multiplier.
    pub alpha: f64,
    /// Accepted exact violation, in units of the separation distance.
    pub violation_tol: f64,
    pub alpha_factor: f64,
    pub max_alpha_rounds: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            lm_bound: 0.001,
            alpha: 1.0,
            violation_tol: 1e-6,
            alpha_factor: 10.0,
            max_alpha_rounds: 8,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScalingError {
    #[error("exact violation {violation:e} still above tolerance after {rounds} alpha rounds")]
    ScalingExhausted { rounds: usize, violation: f64 },
    #[error("solver returned {0:?}")]
    Solver(Status),
    #[error("invalid scaling configuration: {0}")]
    Config(&'static str),
}

/// Solution accepted by [`solve_scaled`]. `solution.values` are expressed in
/// the caller's original columns, i.e. frame columns are already divided by
/// `alpha`.
#[derive(Clone, Debug)]
pub struct ScaledSolution {
    pub solution: LpSolution,
    pub alpha: f64,
    pub rounds: usize,
    pub max_violation: f64,
}

/// The problem handed to the solver in one alpha round: frame-scaled columns
/// get bounds `±lm_bound` and coefficients divided by `alpha`.
pub fn rescaled_problem(p: &LpProblem, lm_bound: f64, alpha: f64) -> LpProblem {
    let mut q = p.clone();
    let scaled: Vec<bool> = q.vars.iter().map(|v| v.frame_scaled).collect();
    for v in q.vars.iter_mut().filter(|v| v.frame_scaled) {
        v.lower = -lm_bound;
        v.upper = lm_bound;
        v.objective /= alpha;
    }
    for c in &mut q.constraints {
        for (j, a) in &mut c.terms {
            if scaled[*j] {
                *a /= alpha;
            }
        }
    }
    q
}

/// Solves `p`, re-checking each optimal solution with `exact_check`, which
/// returns the largest constraint violation in units of the separation
/// distance. Alpha grows by `alpha_factor` until the violation is within
/// `violation_tol` or `max_alpha_rounds` solves have been spent.
pub fn solve_scaled<S, F>(
    solver: &S,
    p: &LpProblem,
    cfg: &ScalingConfig,
    mut exact_check: F,
) -> Result<ScaledSolution, ScalingError>
where
    S: LpSolver + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    if cfg.alpha < 1.0 {
        return Err(ScalingError::Config("alpha must be at least 1"));
    }
    if cfg.violation_tol <= 0.0 {
        return Err(ScalingError::Config("violation tolerance must be positive"));
    }
    if cfg.max_alpha_rounds == 0 {
        return Err(ScalingError::Config("at least one round is required"));
    }
    let mut alpha = cfg.alpha;
    let mut violation = f64::INFINITY;
    for round in 1..=cfg.max_alpha_rounds {
        let q = rescaled_problem(p, cfg.lm_bound, alpha);
        let mut sol = solver.solve(&q);
        if sol.status != Status::Optimal {
            return Err(ScalingError::Solver(sol.status));
        }
        for (v, var) in sol.values.iter_mut().zip(&p.vars) {
            if var.frame_scaled {
                *v /= alpha;
            }
        }
        violation = exact_check(&sol.values);
        if violation <= cfg.violation_tol {
            return Ok(ScaledSolution {
                solution: sol,
                alpha,
                rounds: round,
                max_violation: violation,
            });
        }
        alpha *= cfg.alpha_factor;
    }
    Err(ScalingError::ScalingExhausted {
        rounds: cfg.max_alpha_rounds,
        violation,
    })
}
