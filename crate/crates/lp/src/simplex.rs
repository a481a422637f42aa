//! Revised primal simplex on the bounded-variable standard form.
//!
//! Rows `lo <= a.x <= hi` are turned into equalities `a.x - r = 0` with one
//! logical column `r` per row, bounded by `[lo, hi]`. The starting basis is
//! the all-logical one, so no artificial columns are needed: phase one
//! minimizes the sum of bound infeasibilities of the basic columns and phase
//! two maximizes the objective. The basis inverse is kept as a dense matrix,
//! updated by product-form pivots and rebuilt from scratch by Gauss-Jordan
//! elimination every `refactor_every` iterations.

use crate::problem::{LpProblem, Sense};
use crate::{LpSolution, LpSolver, Status};

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    /// Absolute primal feasibility tolerance (scaled by `1 + |bound|`).
    pub feasibility_tol: f64,
    /// Reduced-cost tolerance.
    pub optimality_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
    pub refactor_every: usize,
    /// Iterations without objective progress before Bland's rule engages.
    pub stall_limit: usize,
    /// `None` picks a limit from the problem size.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-10,
            refactor_every: 50,
            stall_limit: 40,
            max_iterations: None,
        }
    }
}

/// The bundled dense revised-simplex solver.
#[derive(Clone, Debug, Default)]
pub struct SimplexSolver {
    pub options: SimplexOptions,
}

impl SimplexSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_options(options: SimplexOptions) -> Self {
        Self { options }
    }
}

impl LpSolver for SimplexSolver {
    fn solve(&self, problem: &LpProblem) -> LpSolution {
        if let Err(msg) = problem.validate() {
            panic!("malformed LP: {msg}");
        }
        Tableau::new(problem, &self.options).run()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Nonbasic free column parked at zero.
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    Feasibility,
    Optimality,
}

struct Tableau<'a> {
    opts: &'a SimplexOptions,
    m: usize,
    n: usize,
    /// Sparse structural columns.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Dense row-major inverse of the basis matrix.
    binv: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
}

impl<'a> Tableau<'a> {
    fn new(p: &LpProblem, opts: &'a SimplexOptions) -> Self {
        let n = p.num_vars();
        let m = p.num_constraints();
        let mut cols = vec![Vec::new(); n];
        for (i, c) in p.constraints.iter().enumerate() {
            // Merge repeated column references within one row.
            let mut terms = c.terms.clone();
            terms.sort_by_key(|t| t.0);
            let mut last: Option<(usize, f64)> = None;
            for (j, a) in terms {
                match last {
                    Some((lj, la)) if lj == j => last = Some((j, la + a)),
                    Some((lj, la)) => {
                        if la != 0.0 {
                            cols[lj].push((i, la));
                        }
                        last = Some((j, a));
                    }
                    None => last = Some((j, a)),
                }
            }
            if let Some((lj, la)) = last {
                if la != 0.0 {
                    cols[lj].push((i, la));
                }
            }
        }

        let total = n + m;
        let mut lower = Vec::with_capacity(total);
        let mut upper = Vec::with_capacity(total);
        let mut cost = Vec::with_capacity(total);
        for v in &p.vars {
            lower.push(v.lower);
            upper.push(v.upper);
            cost.push(v.objective);
        }
        for c in &p.constraints {
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
            cost.push(0.0);
        }

        let mut x = vec![0.0; total];
        let mut state = vec![State::Free; total];
        for j in 0..n {
            let (s, v) = if lower[j].is_finite() {
                (State::AtLower, lower[j])
            } else if upper[j].is_finite() {
                (State::AtUpper, upper[j])
            } else {
                (State::Free, 0.0)
            };
            state[j] = s;
            x[j] = v;
        }
        let basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for (i, &b) in basis.iter().enumerate() {
            state[b] = State::Basic(i);
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = -1.0;
        }
        let mut t = Self {
            opts,
            m,
            n,
            cols,
            lower,
            upper,
            cost,
            x,
            state,
            basis,
            binv,
            since_refactor: 0,
            iterations: 0,
        };
        t.recompute_basic_values();
        t
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    /// `y . column(j)` without materializing the column.
    fn dot_column(&self, y: &[f64], j: usize) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| y[i] * a).sum()
        } else {
            -y[j - self.n]
        }
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + m {
            if matches!(self.state[j], State::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * xj;
                }
            } else {
                rhs[j - self.n] += xj;
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            let v: f64 = row.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            self.x[self.basis[r]] = v;
        }
    }

    /// Rebuilds the dense inverse from the current basis columns. Keeps the
    /// product-form inverse when the fresh factorization looks singular.
    fn refactor(&mut self) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let w = 2 * m;
        let mut aug = vec![0.0; m * w];
        let mut col = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            self.column(b, &mut col);
            for i in 0..m {
                aug[i * w + r] = col[i];
            }
        }
        for i in 0..m {
            aug[i * w + m + i] = 1.0;
        }
        for c in 0..m {
            let mut piv = c;
            let mut best = aug[c * w + c].abs();
            for r in c + 1..m {
                let v = aug[r * w + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-13 {
                self.since_refactor = 0;
                return;
            }
            if piv != c {
                for k in 0..w {
                    aug.swap(c * w + k, piv * w + k);
                }
            }
            let p = aug[c * w + c];
            for k in 0..w {
                aug[c * w + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = aug[r * w + c];
                if f != 0.0 {
                    for k in 0..w {
                        aug[r * w + k] -= f * aug[c * w + k];
                    }
                }
            }
        }
        for i in 0..m {
            self.binv[i * m..(i + 1) * m].copy_from_slice(&aug[i * w + m..i * w + w]);
        }
        self.since_refactor = 0;
        self.recompute_basic_values();
    }

    fn tol(&self, bound: f64) -> f64 {
        self.opts.feasibility_tol * (1.0 + bound.abs())
    }

    fn below(&self, j: usize) -> bool {
        self.x[j] < self.lower[j] - self.tol(self.lower[j])
    }

    fn above(&self, j: usize) -> bool {
        self.x[j] > self.upper[j] + self.tol(self.upper[j])
    }

    fn infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| {
                if self.below(b) {
                    self.lower[b] - self.x[b]
                } else if self.above(b) {
                    self.x[b] - self.upper[b]
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn phase_cost(&self, j: usize, phase: Phase) -> f64 {
        match phase {
            Phase::Optimality => self.cost[j],
            Phase::Feasibility => {
                if !matches!(self.state[j], State::Basic(_)) {
                    0.0
                } else if self.below(j) {
                    1.0
                } else if self.above(j) {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn duals(&self, phase: Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            let c = self.phase_cost(b, phase);
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yk, bk) in y.iter_mut().zip(row) {
                    *yk += c * bk;
                }
            }
        }
        y
    }

    fn phase_objective(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Feasibility => -self.infeasibility(),
            Phase::Optimality => (0..self.n).map(|j| self.cost[j] * self.x[j]).sum(),
        }
    }

    /// Chooses an entering column and its direction of motion.
    fn price(&self, y: &[f64], phase: Phase, bland: bool) -> Option<(usize, f64)> {
        let dtol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            let st = self.state[j];
            if matches!(st, State::Basic(_)) || self.lower[j] == self.upper[j] {
                continue;
            }
            let c = match phase {
                Phase::Optimality => self.cost[j],
                Phase::Feasibility => 0.0,
            };
            let d = c - self.dot_column(y, j);
            let dir = match st {
                State::AtLower if d > dtol => 1.0,
                State::AtUpper if d < -dtol => -1.0,
                State::Free if d.abs() > dtol => d.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, bd)| d.abs() > bd) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn run(mut self) -> LpSolution {
        let max_iter = self
            .opts
            .max_iterations
            .unwrap_or(10_000 + 50 * (self.n + self.m));
        let mut alpha = vec![0.0; self.m];
        let mut col = vec![0.0; self.m];
        let mut bland = false;
        let mut stall = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        let mut last_phase = Phase::Feasibility;

        loop {
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor();
            }
            let phase = if self.infeasibility() > 0.0 {
                Phase::Feasibility
            } else {
                Phase::Optimality
            };
            if phase != last_phase {
                last_obj = f64::NEG_INFINITY;
                stall = 0;
                bland = false;
                last_phase = phase;
            }
            let y = self.duals(phase);
            let Some((enter, dir)) = self.price(&y, phase, bland) else {
                // Confirm the verdict on a fresh factorization before reporting.
                if self.since_refactor > 0 {
                    self.refactor();
                    let again = if self.infeasibility() > 0.0 {
                        Phase::Feasibility
                    } else {
                        Phase::Optimality
                    };
                    if again != phase || self.price(&self.duals(again), again, false).is_some() {
                        continue;
                    }
                }
                return self.finish(match phase {
                    Phase::Feasibility => Status::Infeasible,
                    Phase::Optimality => Status::Optimal,
                });
            };
            if self.iterations >= max_iter {
                return self.finish(Status::IterationLimit);
            }
            self.iterations += 1;

            // alpha = B^-1 a_enter
            self.column(enter, &mut col);
            let m = self.m;
            for r in 0..m {
                let row = &self.binv[r * m..(r + 1) * m];
                alpha[r] = row.iter().zip(&col).map(|(a, b)| a * b).sum();
            }

            let Some(step) = self.ratio_test(enter, dir, &alpha, phase, bland) else {
                if phase == Phase::Optimality {
                    return self.finish(Status::Unbounded);
                }
                // Cannot happen with exact data; rebuild and retry.
                self.refactor();
                bland = true;
                continue;
            };

            let delta = dir * step.theta;
            self.x[enter] += delta;
            for r in 0..m {
                if alpha[r] != 0.0 {
                    let b = self.basis[r];
                    self.x[b] -= delta * alpha[r];
                }
            }
            match step.leaving {
                None => {
                    self.state[enter] = if dir > 0.0 {
                        self.x[enter] = self.upper[enter];
                        State::AtUpper
                    } else {
                        self.x[enter] = self.lower[enter];
                        State::AtLower
                    };
                }
                Some((r, at_upper)) => {
                    let leave = self.basis[r];
                    if at_upper {
                        self.x[leave] = self.upper[leave];
                        self.state[leave] = State::AtUpper;
                    } else {
                        self.x[leave] = self.lower[leave];
                        self.state[leave] = State::AtLower;
                    }
                    self.basis[r] = enter;
                    self.state[enter] = State::Basic(r);
                    self.pivot(r, &alpha);
                }
            }

            let obj = self.phase_objective(phase);
            if obj > last_obj + 1e-12 * (1.0 + last_obj.abs()) {
                last_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall >= self.opts.stall_limit {
                    bland = true;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (prow, tail) = rest.split_at_mut(m);
        for (i, &a) in alpha.iter().enumerate() {
            if i == r || a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut head[i * m..(i + 1) * m]
            } else {
                let off = (i - r - 1) * m;
                &mut tail[off..off + m]
            };
            for (v, pv) in row.iter_mut().zip(prow.iter()) {
                *v -= a * pv;
            }
        }
        self.since_refactor += 1;
    }

    fn ratio_test(
        &self,
        enter: usize,
        dir: f64,
        alpha: &[f64],
        phase: Phase,
        bland: bool,
    ) -> Option<Step> {
        let ptol = self.opts.pivot_tol;
        let mut best_theta = f64::INFINITY;
        let mut cands: Vec<(usize, f64, bool)> = Vec::new();
        for (r, &a) in alpha.iter().enumerate() {
            let rate = -dir * a;
            if rate.abs() <= ptol {
                continue;
            }
            let b = self.basis[r];
            let (x, lo, hi) = (self.x[b], self.lower[b], self.upper[b]);
            let below = phase == Phase::Feasibility && self.below(b);
            let above = phase == Phase::Feasibility && self.above(b);
            let limit = if rate > 0.0 {
                if above {
                    None
                } else if below {
                    Some(((lo - x) / rate, false))
                } else if hi.is_finite() {
                    Some((((hi - x) / rate).max(0.0), true))
                } else {
                    None
                }
            } else if below {
                None
            } else if above {
                Some(((x - hi) / -rate, true))
            } else if lo.is_finite() {
                Some((((x - lo) / -rate).max(0.0), false))
            } else {
                None
            };
            if let Some((theta, at_upper)) = limit {
                cands.push((r, theta, at_upper));
                best_theta = best_theta.min(theta);
            }
        }
        let flip = self.upper[enter] - self.lower[enter];
        if flip.is_finite() && flip <= best_theta {
            return Some(Step {
                theta: flip,
                leaving: None,
            });
        }
        if cands.is_empty() {
            return None;
        }
        // Among near-ties prefer the largest pivot (or the smallest index under Bland).
        let slack = 1e-12 * (1.0 + best_theta.abs());
        let mut chosen: Option<(usize, f64, bool)> = None;
        for &(r, theta, at_upper) in &cands {
            if theta > best_theta + slack {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((cr, _, _)) => {
                    if bland {
                        self.basis[r] < self.basis[cr]
                    } else {
                        alpha[r].abs() > alpha[cr].abs()
                    }
                }
            };
            if better {
                chosen = Some((r, theta, at_upper));
            }
        }
        let (r, theta, at_upper) = chosen.expect("candidate set is nonempty");
        Some(Step {
            theta,
            leaving: Some((r, at_upper)),
        })
    }

    fn finish(self, status: Status) -> LpSolution {
        let values: Vec<f64> = self.x[..self.n].to_vec();
        let objective = (0..self.n).map(|j| self.cost[j] * values[j]).sum();
        let duals = if status == Status::Optimal {
            self.duals(Phase::Optimality)
        } else {
            vec![0.0; self.m]
        };
        LpSolution {
            status,
            values,
            objective,
            duals,
            iterations: self.iterations,
        }
    }
}

struct Step {
    theta: f64,
    /// Basis position leaving and whether it leaves at its upper bound;
    /// `None` is a bound flip of the entering column.
    leaving: Option<(usize, bool)>,
}
