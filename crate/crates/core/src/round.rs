//! Snapping exact coordinates to binary64 and the full pipeline.
//!
//! Rounding a coordinate to the nearest double moves a vertex by at most
//! e = √3·M·2⁻⁵³ when every coordinate is bounded by M. Two features more
//! than 2e apart therefore cannot meet after the snap.

use std::time::Instant;

use log::info;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::geom::{rat_approx, rat_interval, rat_to_f64, ExactPoint, Feature, Rational};
use crate::mesh::{find_intersections, topology_signature, Mesh};
use crate::modify::modification_stage;
use crate::proximity::{build_octree, close_pairs, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
use crate::report::{displacement_stats, StageReport, TableRow};
use crate::separate::{
    expand, optimize, ExpandOutcome, ExpansionMode, OptimizeOutcome, SeparateConfig, SeparateError,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundingBudget {
    /// Largest coordinate magnitude.
    #[serde(serialize_with = "ser_rat")]
    pub max_coord: Rational,
    /// Upper bound on e.
    pub e: f64,
    /// e² exactly: 3·M²·2⁻¹⁰⁶.
    #[serde(skip)]
    pub e2: Rational,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(rat_approx(r))
}

fn pow2(k: i32) -> Rational {
    let two = Rational::from_integer(2.into());
    if k >= 0 {
        num_traits::pow(two, k as usize)
    } else {
        Rational::one() / num_traits::pow(two, (-k) as usize)
    }
}

pub fn rounding_budget(m: &Mesh) -> RoundingBudget {
    let max_coord = m.max_abs_coord();
    let e2 = Rational::from_integer(3.into()) * &max_coord * &max_coord * pow2(-106);
    let mhi = rat_interval(&max_coord).hi;
    let e = (3f64.sqrt().next_up() * mhi).next_up() * 2f64.powi(-53);
    RoundingBudget {
        max_coord,
        e: if e == 0.0 { 0.0 } else { e.next_up() },
        e2,
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundError {
    #[error("separation {separation:e} is not above 2e = {two_e:e}")]
    InsufficientSeparation { separation: f64, two_e: f64 },
    #[error("coordinate does not fit in binary64")]
    Overflow,
    #[error("certification failed after snapping: {0}")]
    CertificationFailure(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct SnapReport {
    pub budget: RoundingBudget,
    pub moved_vertices: usize,
    /// Largest vertex movement, in units of e.
    pub max_move_over_e: f64,
    pub report: StageReport,
}

/// Squared separation of the closest disjoint pair within `thr2`, if any.
fn closest_within(m: &Mesh, thr2: &Rational) -> Option<(Feature, Feature, Rational)> {
    let idx = build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
    close_pairs(m, &idx, thr2)
        .into_iter()
        .min_by(|a, b| a.dist2.cmp(&b.dist2))
        .map(|p| (p.a, p.b, p.dist2))
}

/// Rounds every coordinate to the nearest double after checking, exactly,
/// that the mesh is more than 2e separated.
pub fn snap(m: &Mesh) -> Result<(Mesh, SnapReport), RoundError> {
    let start = Instant::now();
    let budget = rounding_budget(m);
    let four_e2 = Rational::from_integer(4.into()) * &budget.e2;
    // A pair at distance exactly 2e is caught by asking for pairs within 4e.
    let probe = Rational::from_integer(4.into()) * &four_e2;
    if let Some((_, _, d2)) = closest_within(m, &probe) {
        if d2 <= four_e2 {
            return Err(RoundError::InsufficientSeparation {
                separation: rat_approx(&d2).sqrt(),
                two_e: 2.0 * budget.e,
            });
        }
    }
    let mut out = m.clone();
    let mut moved = 0;
    let mut worst = Rational::zero();
    for v in m.vertices() {
        let p = m.point(v);
        let r = |c: &Rational| rat_to_f64(c).filter(|x| x.is_finite()).ok_or(RoundError::Overflow);
        let s = ExactPoint::from_f64(r(&p.x)?, r(&p.y)?, r(&p.z)?);
        if &s != p {
            moved += 1;
            let d2 = s.sub(p).norm2();
            if d2 > worst {
                worst = d2;
            }
            out.set_point(v, s);
        }
    }
    if worst > budget.e2 {
        return Err(RoundError::CertificationFailure("a vertex moved more than e".into()));
    }
    let idx = build_octree(&out, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
    let hits = find_intersections(&out, &idx);
    if !hits.is_empty() {
        return Err(RoundError::CertificationFailure(format!("{} intersecting triangle pairs", hits.len())));
    }
    if topology_signature(&out) != topology_signature(m) {
        return Err(RoundError::CertificationFailure("topology changed".into()));
    }
    let max_move_over_e = if budget.e2.is_zero() {
        0.0
    } else {
        rat_approx(&(&worst / &budget.e2)).sqrt()
    };
    let mut report = StageReport::new("snap");
    report.seconds = start.elapsed().as_secs_f64();
    report.bump("moved_vertices", moved as u64);
    Ok((
        out,
        SnapReport {
            budget,
            moved_vertices: moved,
            max_move_over_e,
            report,
        },
    ))
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub d: Rational,
    pub modify: bool,
    pub expand: bool,
    pub optimize: bool,
    pub snap: bool,
    pub max_iterations: usize,
    pub b_const: f64,
    pub mode: ExpansionMode,
    pub scaling: meshsep_lp::ScalingConfig,
    pub dump_lp: Option<std::path::PathBuf>,
}

impl PipelineConfig {
    pub fn new(d: Rational) -> Self {
        let s = SeparateConfig::new(d.clone());
        Self {
            d,
            modify: true,
            expand: true,
            optimize: false,
            snap: true,
            max_iterations: s.max_iterations,
            b_const: s.b_const,
            mode: s.mode,
            scaling: s.scaling,
            dump_lp: None,
        }
    }

    pub fn separate_config(&self) -> SeparateConfig {
        let mut s = SeparateConfig::new(self.d.clone());
        s.max_iterations = self.max_iterations;
        s.b_const = self.b_const;
        s.mode = self.mode;
        s.scaling = self.scaling.clone();
        s.dump_lp = self.dump_lp.clone();
        s
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("d must be at least 2e = {two_e:e}")]
    ConfigError { two_e: f64 },
    #[error(transparent)]
    Separate(#[from] SeparateError),
    #[error(transparent)]
    Round(#[from] RoundError),
}

#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
    pub row: TableRow,
    pub expand: Option<ExpandOutcome>,
    pub optimize: Option<OptimizeOutcome>,
    pub snap: Option<SnapReport>,
    /// Squared minimum separation before the snap, over pairs within 2√3·d;
    /// `None` when there are none.
    pub min_dist2: Option<Rational>,
}

/// Number of disjoint pairs at distance ≤ d.
pub fn count_below(m: &Mesh, d: &Rational) -> usize {
    let d2 = d * d;
    let idx = build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
    close_pairs(m, &idx, &(Rational::from_integer(4.into()) * &d2))
        .iter()
        .filter(|p| p.dist2 <= d2)
        .count()
}

/// Squared minimum separation over pairs within 2√3·d, or `None`.
pub fn separation_within(m: &Mesh, d: &Rational) -> Option<Rational> {
    closest_within(m, &(Rational::from_integer(12.into()) * d * d)).map(|x| x.2)
}

/// Separation stages only, in place: modify, expand, optionally optimize.
pub fn separate_mesh(m: &mut Mesh, cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let scfg = cfg.separate_config();
    let mut stages = Vec::new();
    let triangles = m.num_triangles();
    if cfg.modify {
        let before = count_below(m, &cfg.d);
        let mut r = modification_stage(m, &cfg.d).report;
        r.close_pairs = before;
        info!("modify: {} close pairs, {} edits", before, r.counter("contractions") + r.counter("flips"));
        stages.push(r);
    }
    let originals = m.points().to_vec();
    let mut expand_out = None;
    if cfg.expand {
        let o = expand(m, &scfg)?;
        info!("expand: {} iterations, {} halvings", o.iterations.len(), o.halvings);
        stages.push(o.report.clone());
        expand_out = Some(o);
    }
    let mut opt_out = None;
    if cfg.optimize {
        let o = optimize(m, &originals, &scfg)?;
        stages.push(o.report.clone());
        opt_out = Some(o);
    }
    let row = TableRow::from_reports(triangles, &stages);
    Ok(PipelineReport {
        stages,
        row,
        expand: expand_out,
        optimize: opt_out,
        snap: None,
        min_dist2: separation_within(m, &cfg.d),
    })
}

/// Separates and then snaps to binary64.
pub fn geometric_round(m: &Mesh, cfg: &PipelineConfig) -> Result<(Mesh, PipelineReport), PipelineError> {
    let budget = rounding_budget(m);
    let two_e2 = Rational::from_integer(4.into()) * &budget.e2;
    if &cfg.d * &cfg.d < two_e2 {
        return Err(PipelineError::ConfigError { two_e: 2.0 * budget.e });
    }
    let mut work = m.clone();
    let mut report = separate_mesh(&mut work, cfg)?;
    if !cfg.snap {
        return Ok((work, report));
    }
    let orig = work.points().to_vec();
    let (out, mut snap_rep) = snap(&work)?;
    let stats = displacement_stats(out.vertices().map(|v| (&orig[v], out.point(v))), &cfg.d);
    snap_rep.report = snap_rep.report.clone().with_stats(&stats);
    report.stages.push(snap_rep.report.clone());
    report.row.t += snap_rep.report.seconds;
    report.snap = Some(snap_rep);
    Ok((out, report))
}
