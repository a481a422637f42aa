//! The expansion stage: repeatedly solve the displacement LP over the close
//! pairs, verify the step exactly, and apply it.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use log::{debug, warn};
use meshsep_lp::{solve_scaled, LpProblem, LpSolver, Sense, SimplexSolver, Status, ScalingError};
use num_traits::Zero;
use serde::Serialize;

use crate::geom::{rat_approx, rat_from_f64, ExactPoint, Feature, PointSource, Rational, Vec3f};
use crate::mesh::Mesh;
use crate::proximity::{build_octree, close_pairs, FeaturePair, Octree, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
use crate::report::{displacement_stats, DisplacementStats, StageReport};

use super::constraints::{build_constraints, clusters, exact_lhs, SeparationConstraint};
use super::verify::{verify_step, RejectReason, Verdict};
use super::{DisplacementField, SeparateConfig, SeparateError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExpansionMode {
    /// One LP maximizing b·n·s minus the total displacement.
    Combined,
    /// Maximize s, then minimize displacement at that s.
    TwoStage,
}

/// LP values below this, in units of d, are treated as zero motion.
const NOISE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct StepResult {
    pub disp: DisplacementField,
    /// Smallest s over the solved clusters; 1 when nothing needed solving.
    pub s: f64,
    /// LP rotation values per input pair.
    pub lm: Vec<(f64, f64)>,
    /// Largest exact violation over the accepted LPs, in units of d.
    pub max_violation: f64,
    pub lps: usize,
    pub alpha_rounds: usize,
}

#[derive(Debug)]
pub(crate) enum StepFailure {
    Scaling(ScalingError),
    Fatal(SeparateError),
}

/// Column layout of one cluster LP.
pub(crate) struct ClusterLp {
    pub problem: LpProblem,
    pub verts: Vec<usize>,
    /// (p, n) column pairs per vertex coordinate, indexed like `verts`.
    pub disp_cols: Vec<[(usize, usize); 3]>,
    /// (l, m) columns per pair, indexed like the cluster's pair list.
    pub lm_cols: Vec<(usize, usize)>,
    pub s_col: Option<usize>,
    pub rows: Vec<SeparationConstraint>,
    pub cap: f64,
}

/// Builds the LP for the pairs `idx` of `pairs`. `target` multiplies s (or
/// is the right side when `s_weight` is `None`).
pub(crate) fn cluster_lp(
    pts: &(impl PointSource + ?Sized),
    pairs: &[FeaturePair],
    idx: &[usize],
    d: &Rational,
    cap: f64,
    s_weight: Option<f64>,
    disp_weight: f64,
    target: f64,
) -> ClusterLp {
    let sub: Vec<FeaturePair> = idx.iter().map(|&i| pairs[i].clone()).collect();
    let rows = build_constraints(&sub, pts, d, s_weight.is_some());
    let verts: Vec<usize> = sub
        .iter()
        .flat_map(|p| p.vertices())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut p = LpProblem::new();
    let disp_cols: Vec<[(usize, usize); 3]> = verts
        .iter()
        .map(|&v| {
            [0, 1, 2].map(|k| {
                let axis = ["x", "y", "z"][k];
                (
                    p.add_named_var(format!("p{v}{axis}"), 0.0, cap, -disp_weight),
                    p.add_named_var(format!("n{v}{axis}"), 0.0, cap, -disp_weight),
                )
            })
        })
        .collect();
    let lm_cols: Vec<(usize, usize)> = (0..sub.len())
        .map(|i| {
            let l = p.add_named_var(format!("l{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
            let m = p.add_named_var(format!("m{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
            p.mark_frame_scaled(l);
            p.mark_frame_scaled(m);
            (l, m)
        })
        .collect();
    let s_col = s_weight.map(|w| p.add_named_var("s", 0.0, 1.0, w));
    let col = |v: usize| verts.binary_search(&v).unwrap();
    for c in &rows {
        let mut terms = Vec::with_capacity(15);
        let u = c.u.to_array();
        for k in 0..3 {
            if u[k] != 0.0 {
                let (pb, nb) = disp_cols[col(c.b)][k];
                let (pa, na) = disp_cols[col(c.a)][k];
                terms.extend([(pb, u[k]), (nb, -u[k]), (pa, -u[k]), (na, u[k])]);
            }
        }
        let (l, m) = lm_cols[c.pair];
        terms.push((l, c.cl));
        terms.push((m, c.cm));
        let rhs = match s_col {
            Some(s) => {
                terms.push((s, -target));
                -c.base
            }
            None => target - c.base,
        };
        p.add_constraint(terms, Sense::Ge, rhs);
    }
    ClusterLp {
        problem: p,
        verts,
        disp_cols,
        lm_cols,
        s_col,
        rows,
        cap,
    }
}

impl ClusterLp {
    /// Displacements in length units, clamped to the box and with noise
    /// removed.
    pub fn displacement(&self, x: &[f64], d_len: f64) -> DisplacementField {
        let mut f = DisplacementField::new();
        for (i, &v) in self.verts.iter().enumerate() {
            let c = self.disp_cols[i].map(|(p, n)| {
                let r = (x[p] - x[n]).clamp(-self.cap, self.cap);
                if r.abs() < NOISE {
                    0.0
                } else {
                    r * d_len
                }
            });
            f.insert(v, Vec3f::new(c[0], c[1], c[2]));
        }
        f
    }

    pub fn lm(&self, x: &[f64]) -> Vec<(f64, f64)> {
        self.lm_cols.iter().map(|&(l, m)| (x[l], x[m])).collect()
    }

    /// Largest exact shortfall of the rows, in units of d. `target` is the
    /// right side when there is no s column.
    pub fn exact_violation(
        &self,
        pts: &(impl PointSource + ?Sized),
        pairs: &[FeaturePair],
        idx: &[usize],
        x: &[f64],
        d: &Rational,
        d_len: f64,
        target: f64,
    ) -> f64 {
        let disp = self.displacement(x, d_len);
        let rhs = match self.s_col {
            Some(s) => rat_from_f64(x[s].clamp(0.0, 1.0)) * rat_from_f64(target),
            None => rat_from_f64(target),
        };
        let mut worst = 0.0f64;
        for c in &self.rows {
            let frame = pairs[idx[c.pair]].frame.as_ref().expect("constrained pairs have frames");
            let (l, m) = self.lm_cols[c.pair];
            let lhs = exact_lhs(c, frame, pts, &disp.moves, x[l], x[m], d);
            let short = &rhs - lhs;
            if short > Rational::zero() {
                worst = worst.max(rat_approx(&short));
            }
        }
        worst
    }
}

fn dump(problem: &LpProblem, path: Option<PathBuf>) {
    if let Some(p) = path {
        if let Err(e) = std::fs::write(&p, problem.to_lp_format()) {
            warn!("could not write {}: {e}", p.display());
        }
    }
}

fn scaled(
    solver: &dyn LpSolver,
    lp: &ClusterLp,
    pts: &(impl PointSource + ?Sized),
    pairs: &[FeaturePair],
    idx: &[usize],
    cfg: &SeparateConfig,
    d_len: f64,
    target: f64,
) -> Result<meshsep_lp::ScaledSolution, StepFailure> {
    solve_scaled(solver, &lp.problem, &cfg.scaling, |x| {
        lp.exact_violation(pts, pairs, idx, x, &cfg.d, d_len, target)
    })
    .map_err(|e| match e {
        ScalingError::Solver(Status::Infeasible) => StepFailure::Fatal(SeparateError::Infeasible),
        e => StepFailure::Scaling(e),
    })
}

/// Solves the displacement LPs for every cluster of `pairs` that contains a
/// pair at distance ≤ d. `delta` is the coordinate bound in units of d.
pub fn expansion_step(
    pts: &(impl PointSource + ?Sized),
    pairs: &[FeaturePair],
    delta: f64,
    cfg: &SeparateConfig,
) -> Result<StepResult, SeparateError> {
    step_with(&SimplexSolver::new(), pts, pairs, delta, cfg, None).map_err(|e| match e {
        StepFailure::Fatal(e) => e,
        StepFailure::Scaling(_) => SeparateError::Infeasible,
    })
}

pub(crate) fn step_with(
    solver: &dyn LpSolver,
    pts: &(impl PointSource + ?Sized),
    pairs: &[FeaturePair],
    delta: f64,
    cfg: &SeparateConfig,
    dump_tag: Option<&str>,
) -> Result<StepResult, StepFailure> {
    let d2 = &cfg.d * &cfg.d;
    let d_len = rat_approx(&cfg.d);
    let cap = delta * (1.0 - f64::EPSILON * 1024.0);
    let target = 1.0 + cfg.margin;
    let mut out = StepResult {
        disp: DisplacementField::new(),
        s: 1.0,
        lm: vec![(0.0, 0.0); pairs.len()],
        max_violation: 0.0,
        lps: 0,
        alpha_rounds: 0,
    };
    for (ci, idx) in clusters(pairs).into_iter().enumerate() {
        if !idx.iter().any(|&i| pairs[i].dist2 <= d2) {
            continue;
        }
        if let Some(&i) = idx.iter().find(|&&i| pairs[i].frame.is_none()) {
            let p = &pairs[i];
            return Err(StepFailure::Fatal(SeparateError::Touching(format!("{:?} / {:?}", p.a, p.b))));
        }
        let n = idx.iter().flat_map(|&i| pairs[i].vertices()).collect::<BTreeSet<_>>().len() as f64;
        let path = |stage: &str| {
            cfg.dump_lp
                .as_ref()
                .zip(dump_tag)
                .map(|(dir, tag)| dir.join(format!("{tag}_c{ci}{stage}.lp")))
        };
        let (lp, sol) = match cfg.mode {
            ExpansionMode::Combined => {
                let lp = cluster_lp(pts, pairs, &idx, &cfg.d, cap, Some(cfg.b_const * n), 1.0, target);
                dump(&lp.problem, path(""));
                let sol = scaled(solver, &lp, pts, pairs, &idx, cfg, d_len, target)?;
                (lp, sol)
            }
            ExpansionMode::TwoStage => {
                let first = cluster_lp(pts, pairs, &idx, &cfg.d, cap, Some(1.0), 0.0, target);
                dump(&first.problem, path("a"));
                let s1 = scaled(solver, &first, pts, pairs, &idx, cfg, d_len, target)?;
                out.alpha_rounds += s1.rounds;
                out.lps += 1;
                let s_star = s1.solution.values[first.s_col.unwrap()].clamp(0.0, 1.0);
                let mut lp = cluster_lp(pts, pairs, &idx, &cfg.d, cap, Some(0.0), 1.0, target);
                let s = lp.s_col.unwrap();
                lp.problem.vars[s].lower = (s_star - 1e-9).max(0.0);
                dump(&lp.problem, path("b"));
                let sol = scaled(solver, &lp, pts, pairs, &idx, cfg, d_len, target)?;
                (lp, sol)
            }
        };
        let x = &sol.solution.values;
        out.lps += 1;
        out.alpha_rounds += sol.rounds;
        out.max_violation = out.max_violation.max(sol.max_violation);
        out.s = out.s.min(x[lp.s_col.unwrap()].clamp(0.0, 1.0));
        for (k, lm) in lp.lm(x).into_iter().enumerate() {
            out.lm[idx[k]] = lm;
        }
        out.disp.extend(lp.displacement(x, d_len));
    }
    Ok(out)
}

/// First-order separation of one pair after `disp`, maximized over the
/// rotation values with |l|, |m| ≤ `lm_bound`. Length units.
pub fn linearized_separation(
    pts: &(impl PointSource + ?Sized),
    pair: &FeaturePair,
    disp: &DisplacementField,
    d: &Rational,
    lm_bound: f64,
) -> f64 {
    let rows = build_constraints(std::slice::from_ref(pair), pts, d, false);
    let mut p = LpProblem::new();
    let t = p.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let l = p.add_var(-lm_bound, lm_bound, 0.0);
    let m = p.add_var(-lm_bound, lm_bound, 0.0);
    let d_len = rat_approx(d);
    let zero = Vec3f::new(0.0, 0.0, 0.0);
    for c in &rows {
        let da = disp.get(c.a).unwrap_or(&zero);
        let db = disp.get(c.b).unwrap_or(&zero);
        let moved = c.u.dot(&db.sub(da)) / d_len;
        p.add_constraint(vec![(t, 1.0), (l, -c.cl), (m, -c.cm)], Sense::Le, c.base + moved);
    }
    let sol = SimplexSolver::new().solve(&p);
    assert_eq!(sol.status, Status::Optimal);
    sol.values[t] * d_len
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    /// Coordinate bound in units of d.
    pub delta: f64,
    pub pairs: usize,
    pub below: usize,
    pub s: f64,
    pub accepted: bool,
    pub reason: Option<String>,
    pub max_violation: f64,
    pub lps: usize,
}

#[derive(Clone, Debug)]
pub struct ExpandOutcome {
    pub report: StageReport,
    pub stats: DisplacementStats,
    pub iterations: Vec<IterationRecord>,
    /// Squared minimum separation over the final close pairs; `None` when no
    /// pair is within the working threshold.
    pub min_dist2: Option<Rational>,
    pub halvings: usize,
}

impl ExpandOutcome {
    pub fn accepted_steps(&self) -> usize {
        self.iterations.iter().filter(|r| r.accepted).count()
    }

    pub fn max_violation(&self) -> f64 {
        self.iterations
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.max_violation)
            .fold(0.0, f64::max)
    }
}

fn refresh_index(m: &Mesh, index: &mut Octree, moved: &DisplacementField) {
    let tris: BTreeSet<usize> = moved.moves.keys().flat_map(|&v| m.vertex_triangles(v).iter().copied()).collect();
    for t in tris {
        index.update(t, m.triangle_bbox(t));
    }
    if index.needs_rebuild() {
        *index = index.rebuilt();
    }
}

/// Moves vertices until every disjoint pair is more than d apart.
pub fn expand(m: &mut Mesh, cfg: &SeparateConfig) -> Result<ExpandOutcome, SeparateError> {
    expand_with(&SimplexSolver::new(), m, cfg, "expand")
}

pub(crate) fn expand_with(
    solver: &dyn LpSolver,
    m: &mut Mesh,
    cfg: &SeparateConfig,
    tag: &str,
) -> Result<ExpandOutcome, SeparateError> {
    let start = Instant::now();
    let orig: Vec<ExactPoint> = m.points().to_vec();
    let d2 = &cfg.d * &cfg.d;
    let thr2 = Rational::from_integer(12.into()) * &d2;
    let mut index = build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
    let mut delta = 1.0;
    let mut records = Vec::new();
    let mut halvings = 0;
    let mut report = StageReport::new("expand");
    let mut prev_below: BTreeSet<(Feature, Feature)> = BTreeSet::new();
    let mut separated: BTreeSet<(Feature, Feature)> = BTreeSet::new();
    let mut first = true;
    let min_dist2 = loop {
        let pairs = close_pairs(m, &index, &thr2);
        let below: BTreeSet<(Feature, Feature)> =
            pairs.iter().filter(|p| p.dist2 <= d2).map(|p| p.key()).collect();
        if first {
            report.close_pairs = below.len();
            first = false;
        }
        for k in below.intersection(&separated) {
            warn!("pair {:?} / {:?} fell back below d", k.0, k.1);
        }
        separated.extend(prev_below.difference(&below).copied());
        prev_below = below.clone();
        if below.is_empty() {
            break pairs.iter().map(|p| &p.dist2).min().cloned();
        }
        if records.len() >= cfg.max_iterations {
            return Err(SeparateError::MaxIterations(records.len()));
        }
        let k = records.len();
        let mut rec = IterationRecord {
            delta,
            pairs: pairs.len(),
            below: below.len(),
            s: 0.0,
            accepted: false,
            reason: None,
            max_violation: 0.0,
            lps: 0,
        };
        let dump_tag = format!("{tag}{k}");
        match step_with(solver, &*m, &pairs, delta, cfg, Some(&dump_tag)) {
            Err(StepFailure::Fatal(e)) => return Err(e),
            Err(StepFailure::Scaling(e)) => {
                debug!("iteration {k}: LP failed: {e}");
                rec.reason = Some(e.to_string());
                report.bump("lp_failures", 1);
            }
            Ok(step) => {
                rec.s = step.s;
                rec.lps = step.lps;
                rec.max_violation = step.max_violation;
                report.bump("alpha_rounds", step.alpha_rounds as u64);
                match verify_step(&*m, &step.disp, &pairs, &step.lm) {
                    Verdict::Accept { .. } => {
                        step.disp.apply(m);
                        refresh_index(m, &mut index, &step.disp);
                        rec.accepted = true;
                    }
                    Verdict::Reject(r) => {
                        rec.reason = Some(format!("{r:?}"));
                        report.bump(
                            match r {
                                RejectReason::SweptContact => "rejected_swept",
                                RejectReason::NoImprovement => "rejected_no_improvement",
                            },
                            1,
                        );
                    }
                }
            }
        }
        debug!(
            "iteration {k}: delta {} s {:.6} below {} -> {}",
            rec.delta,
            rec.s,
            rec.below,
            if rec.accepted { "accepted" } else { "rejected" }
        );
        if rec.accepted {
            delta = 1.0;
        } else {
            delta *= 0.5;
            halvings += 1;
        }
        records.push(rec);
    };
    let live: Vec<usize> = m.vertices().filter(|&v| !m.vertex_triangles(v).is_empty()).collect();
    let stats = displacement_stats(live.iter().map(|&v| (&orig[v], m.point(v))), &cfg.d);
    let mut report = report.with_stats(&stats);
    report.iterations = records.len();
    report.seconds = start.elapsed().as_secs_f64();
    report.bump("halvings", halvings as u64);
    Ok(ExpandOutcome {
        report,
        stats,
        iterations: records,
        min_dist2,
        halvings,
    })
}
