use std::fmt::Write as _;

/// Index of a column in an [`LpProblem`].
pub type VarId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    /// Column takes part in the alpha rescaling performed by `solve_scaled`.
    pub frame_scaled: bool,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// Row activity `sum(coeff * x)`.
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row, zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// A linear program in maximization form with bounded columns.
///
/// Every column carries its own `[lower, upper]` interval (either side may be
/// infinite) and every row is a sparse linear expression compared against a
/// constant right-hand side.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: f64, upper: f64, objective: f64) -> VarId {
        let id = self.vars.len();
        self.vars.push(Variable {
            name: format!("x{id}"),
            lower,
            upper,
            objective,
            frame_scaled: false,
        });
        id
    }

    pub fn add_named_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> VarId {
        let id = self.add_var(lower, upper, objective);
        self.vars[id].name = name.into();
        id
    }

    pub fn mark_frame_scaled(&mut self, var: VarId) {
        self.vars[var].frame_scaled = true;
    }

    pub fn add_constraint(&mut self, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> usize {
        let id = self.constraints.len();
        self.constraints.push(Constraint {
            name: format!("c{id}"),
            terms,
            sense,
            rhs,
        });
        id
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.objective * xi).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .map(|c| c.violation(x))
            .fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Checks dimensions and bound consistency.
    pub fn validate(&self) -> Result<(), String> {
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.objective.is_nan() {
                return Err(format!("column {j} has NaN data"));
            }
            if v.lower > v.upper {
                return Err(format!("column {j} has lower bound above upper bound"));
            }
            if !v.objective.is_finite() {
                return Err(format!("column {j} has a non-finite objective"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(format!("row {i} has a non-finite right-hand side"));
            }
            for &(j, a) in &c.terms {
                if j >= self.vars.len() {
                    return Err(format!("row {i} references unknown column {j}"));
                }
                if !a.is_finite() {
                    return Err(format!("row {i} has a non-finite coefficient"));
                }
            }
        }
        Ok(())
    }

    /// Human-readable dump in the CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        out.push_str("\\ meshsep displacement LP\nMaximize\n obj:");
        let mut any = false;
        for v in &self.vars {
            if v.objective != 0.0 {
                push_term(&mut out, v.objective, &v.name, !any);
                any = true;
            }
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            if c.terms.is_empty() {
                out.push_str(" 0");
            }
            for (k, &(j, a)) in c.terms.iter().enumerate() {
                push_term(&mut out, a, &self.vars[j].name, k == 0);
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {:e}", c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) => {
                    let _ = writeln!(out, " {:e} <= {} <= {:e}", v.lower, v.name, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(out, " {} >= {:e}", v.name, v.lower);
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {} <= {:e}", v.name, v.upper);
                }
                (false, false) => {
                    let _ = writeln!(out, " {} free", v.name);
                }
            }
        }
        out.push_str("End\n");
        out
    }
}

fn push_term(out: &mut String, coeff: f64, name: &str, first: bool) {
    if coeff < 0.0 {
        let _ = write!(out, " - {:e} {name}", -coeff);
    } else if first {
        let _ = write!(out, " {coeff:e} {name}");
    } else {
        let _ = write!(out, " + {coeff:e} {name}");
    }
}
