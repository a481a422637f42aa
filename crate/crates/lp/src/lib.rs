//! Bounded-variable linear programs: problem representation, a bundled dense
//! revised-simplex solver, and the alpha-rescaling driver used by the
//! displacement stages.

mod problem;
mod scaling;
mod simplex;

pub use problem::{Constraint, LpProblem, Sense, VarId, Variable};
pub use scaling::{rescaled_problem, solve_scaled, ScaledSolution, ScalingConfig, ScalingError};
pub use simplex::{SimplexOptions, SimplexSolver};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: Status,
    /// Column values; meaningful only when `status` is `Optimal`.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row duals at the optimum (zero otherwise).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

/// Narrow solver contract so an external engine can replace the bundled one.
pub trait LpSolver {
    fn solve(&self, problem: &LpProblem) -> LpSolution;
}

impl<T: LpSolver + ?Sized> LpSolver for &T {
    fn solve(&self, problem: &LpProblem) -> LpSolution {
        (**self).solve(problem)
    }
}
