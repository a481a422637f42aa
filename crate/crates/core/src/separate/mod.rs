//! Expansion and optimization: LP-driven vertex displacement until every
//! disjoint feature pair is more than d apart.

mod constraints;
mod expansion;
mod optimize;
mod poly;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{ExactPoint, Rational, Vec3f};
use crate::mesh::Mesh;

pub use constraints::{build_constraints, clusters, exact_lhs, min_base, SeparationConstraint};
pub use expansion::{
    expand, expansion_step, linearized_separation, ExpandOutcome, ExpansionMode, IterationRecord, StepResult,
};
pub use optimize::{optimize, total_l1, OptimizeOutcome};
pub use poly::{Poly, Sturm};
pub use verify::{swept_clear, verify_step, RejectReason, Verdict};

/// Per-vertex binary64 displacements, in length units.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisplacementField {
    pub moves: BTreeMap<usize, Vec3f>,
}

impl DisplacementField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, v: usize, a: Vec3f) {
        if a.x != 0.0 || a.y != 0.0 || a.z != 0.0 {
            self.moves.insert(v, a);
        }
    }

    pub fn get(&self, v: usize) -> Option<&Vec3f> {
        self.moves.get(&v)
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Largest coordinate magnitude.
    pub fn max_abs(&self) -> f64 {
        self.moves.values().map(|a| a.max_abs()).fold(0.0, f64::max)
    }

    pub fn exact(&self, v: usize) -> Option<ExactPoint> {
        self.moves.get(&v).map(|a| ExactPoint::from_f64(a.x, a.y, a.z))
    }

    pub fn extend(&mut self, o: DisplacementField) {
        self.moves.extend(o.moves);
    }

    /// Adds every displacement to the mesh positions, exactly.
    pub fn apply(&self, m: &mut Mesh) {
        for (&v, a) in &self.moves {
            let p = m.point(v).add(&ExactPoint::from_f64(a.x, a.y, a.z));
            m.set_point(v, p);
        }
    }
}

#[derive(Clone, Debug)]
pub struct SeparateConfig {
    pub d: Rational,
    pub max_iterations: usize,
    /// Weight of s against total displacement in the combined objective.
    pub b_const: f64,
    pub mode: ExpansionMode,
    pub scaling: meshsep_lp::ScalingConfig,
    /// Relative slack added to every target so the linearization error
    /// cannot leave a pair at exactly d.
    pub margin: f64,
    /// Directory for LP dumps, if any.
    pub dump_lp: Option<std::path::PathBuf>,
}

impl SeparateConfig {
    pub fn new(d: Rational) -> Self {
        Self {
            d,
            max_iterations: 64,
            b_const: 1e3,
            mode: ExpansionMode::Combined,
            scaling: meshsep_lp::ScalingConfig::default(),
            margin: 1.0 / 128.0 + 1.0 / 4096.0,
            dump_lp: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeparateError {
    #[error("no d-separation after {0} iterations")]
    MaxIterations(usize),
    #[error("features touch: {0}")]
    Touching(String),
    #[error("displacement LP was infeasible")]
    Infeasible,
}
