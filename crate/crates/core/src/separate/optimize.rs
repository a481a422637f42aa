//! Descent on the total displacement from the pre-expansion positions,
//! keeping every close pair at least d apart to first order. Each step is
//! repaired by the expansion stage and rolled back unless the total
//! ℓ¹ displacement strictly drops.

use std::collections::BTreeSet;
use std::time::Instant;

use log::debug;
use meshsep_lp::{solve_scaled, LpProblem, LpSolver, Sense, SimplexSolver};
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::geom::{rat_approx, rat_from_f64, ExactPoint, Rational, Vec3f};
use crate::mesh::Mesh;
use crate::proximity::{build_octree, close_pairs, FeaturePair, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
use crate::report::{displacement_stats, DisplacementStats, StageReport};

use super::constraints::{build_constraints, clusters, exact_lhs, min_base};
use super::expansion::expand_with;
use super::verify::swept_clear;
use super::{DisplacementField, SeparateConfig, SeparateError};

const BETA_FLOOR: f64 = 1.0 / 256.0;
const MIN_IMPROVEMENT: f64 = 1e-3;
const MAX_ROUNDS: usize = 200;

/// Σ‖a − a⁰‖₁ over live vertices.
pub fn total_l1(m: &Mesh, originals: &[ExactPoint]) -> Rational {
    m.vertices()
        .filter(|&v| v < originals.len() && !m.vertex_triangles(v).is_empty())
        .map(|v| {
            let x = m.point(v).sub(&originals[v]);
            x.x.abs() + x.y.abs() + x.z.abs()
        })
        .fold(Rational::zero(), |a, b| a + b)
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub report: StageReport,
    pub stats: DisplacementStats,
    /// Total ℓ¹ displacement before the stage and after each accepted round.
    pub totals: Vec<Rational>,
    /// Squared minimum close-pair separation after each accepted round.
    pub round_min_dist2: Vec<Option<Rational>>,
    pub accepted: usize,
    pub rejected: usize,
}

fn diff_over_d(m: &Mesh, originals: &[ExactPoint], v: usize, d: &Rational) -> [f64; 3] {
    let x = m.point(v).sub(&originals[v]);
    [&x.x, &x.y, &x.z].map(|c| rat_approx(&(c / d)))
}

/// One descent step over a cluster of pairs, or `None` when the LP fails.
fn cluster_step(
    solver: &dyn LpSolver,
    m: &Mesh,
    originals: &[ExactPoint],
    pairs: &[FeaturePair],
    free: &[usize],
    beta: f64,
    cfg: &SeparateConfig,
) -> Option<(DisplacementField, Vec<(f64, f64)>)> {
    let d = &cfg.d;
    let d_len = rat_approx(d);
    let rows = build_constraints(pairs, m, d, false);
    let verts: Vec<usize> = pairs
        .iter()
        .flat_map(|p| p.vertices())
        .chain(free.iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cap = beta * (1.0 - f64::EPSILON * 1024.0);
    let mut p = LpProblem::new();
    let mut cols = Vec::with_capacity(verts.len());
    for &v in &verts {
        let c0 = diff_over_d(m, originals, v, d);
        let c = [0, 1, 2].map(|k| {
            let a = p.add_named_var(format!("a{v}_{k}"), -cap, cap, 0.0);
            let ad = p.add_named_var(format!("ad{v}_{k}"), 0.0, f64::INFINITY, -1.0);
            p.add_constraint(vec![(ad, 1.0), (a, -1.0)], Sense::Ge, c0[k]);
            p.add_constraint(vec![(ad, 1.0), (a, 1.0)], Sense::Ge, -c0[k]);
            a
        });
        cols.push(c);
    }
    let lm: Vec<(usize, usize)> = (0..pairs.len())
        .map(|i| {
            let l = p.add_named_var(format!("l{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
            let mm = p.add_named_var(format!("m{i}"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
            p.mark_frame_scaled(l);
            p.mark_frame_scaled(mm);
            (l, mm)
        })
        .collect();
    // Never ask a pair for more than it already has, so that staying put is
    // always feasible.
    let targets: Vec<f64> = (0..pairs.len())
        .map(|i| {
            let own: Vec<_> = rows.iter().filter(|c| c.pair == i).cloned().collect();
            min_base(&own).unwrap_or(1.0).min(1.0 + cfg.margin)
        })
        .collect();
    let col = |v: usize| verts.binary_search(&v).unwrap();
    for c in &rows {
        let u = c.u.to_array();
        let mut terms = Vec::new();
        for k in 0..3 {
            if u[k] != 0.0 {
                terms.push((cols[col(c.b)][k], u[k]));
                terms.push((cols[col(c.a)][k], -u[k]));
            }
        }
        let (l, mm) = lm[c.pair];
        terms.push((l, c.cl));
        terms.push((mm, c.cm));
        p.add_constraint(terms, Sense::Ge, targets[c.pair] - c.base);
    }
    let field = |x: &[f64]| {
        let mut f = DisplacementField::new();
        for (i, &v) in verts.iter().enumerate() {
            let a = cols[i].map(|j| {
                let r = x[j].clamp(-cap, cap);
                if r.abs() < 1e-12 {
                    0.0
                } else {
                    r * d_len
                }
            });
            f.insert(v, Vec3f::new(a[0], a[1], a[2]));
        }
        f
    };
    let check = |x: &[f64]| {
        let f = field(x);
        rows.iter()
            .map(|c| {
                let frame = pairs[c.pair].frame.as_ref().unwrap();
                let (l, mm) = lm[c.pair];
                let short = rat_from_f64(targets[c.pair]) - exact_lhs(c, frame, m, &f.moves, x[l], x[mm], d);
                if short.is_positive() {
                    rat_approx(&short)
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    };
    let sol = solve_scaled(solver, &p, &cfg.scaling, check).ok()?;
    let x = &sol.solution.values;
    Some((field(x), lm.iter().map(|&(l, mm)| (x[l], x[mm])).collect()))
}

fn restore(m: &mut Mesh, snapshot: &[ExactPoint]) {
    for v in 0..snapshot.len() {
        if m.is_alive(v) && m.point(v) != &snapshot[v] {
            m.set_point(v, snapshot[v].clone());
        }
    }
}

/// Gradient-descent style reduction of the total displacement. The mesh must
/// already be d-separated; it stays d-separated after every round.
pub fn optimize(m: &mut Mesh, originals: &[ExactPoint], cfg: &SeparateConfig) -> Result<OptimizeOutcome, SeparateError> {
    let start = Instant::now();
    let solver = SimplexSolver::new();
    let d = &cfg.d;
    let thr2 = Rational::from_integer(12.into()) * d * d;
    let mut best = total_l1(m, originals);
    let mut totals = vec![best.clone()];
    let mut round_min = Vec::new();
    let mut beta: f64 = 1.0;
    let mut successes = 0;
    let (mut accepted, mut rejected) = (0, 0);
    let mut rounds = 0;
    while beta >= BETA_FLOOR && rounds < MAX_ROUNDS && best.is_positive() {
        rounds += 1;
        let index = build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
        let pairs = close_pairs(m, &index, &thr2);
        if pairs.iter().any(|p| p.frame.is_none()) {
            return Err(SeparateError::Touching("close pair without a frame".into()));
        }
        let displaced: BTreeSet<usize> = m
            .vertices()
            .filter(|&v| v < originals.len() && m.point(v) != &originals[v])
            .collect();
        let groups = clusters(&pairs);
        let mut in_pairs = BTreeSet::new();
        let mut disp = DisplacementField::new();
        let mut lm = vec![(0.0, 0.0); pairs.len()];
        let mut failed = false;
        for idx in &groups {
            let vs: BTreeSet<usize> = idx.iter().flat_map(|&i| pairs[i].vertices()).collect();
            if vs.is_disjoint(&displaced) {
                in_pairs.extend(vs);
                continue;
            }
            in_pairs.extend(vs);
            let sub: Vec<FeaturePair> = idx.iter().map(|&i| pairs[i].clone()).collect();
            match cluster_step(&solver, m, originals, &sub, &[], beta, cfg) {
                Some((f, l)) => {
                    disp.extend(f);
                    for (k, x) in l.into_iter().enumerate() {
                        lm[idx[k]] = x;
                    }
                }
                None => failed = true,
            }
        }
        // Vertices in no close pair head straight back, within the box.
        let cap = rat_from_f64(beta * (1.0 - f64::EPSILON * 1024.0)) * d;
        for &v in displaced.difference(&in_pairs) {
            let back = originals[v].sub(m.point(v));
            let a = [&back.x, &back.y, &back.z].map(|c| {
                let c = if c.abs() > cap { c.signum() * &cap } else { c.clone() };
                rat_approx(&c)
            });
            disp.insert(v, Vec3f::new(a[0], a[1], a[2]));
        }
        let clear = !failed
            && !disp.is_empty()
            && pairs.par_iter().enumerate().all(|(i, p)| swept_clear(&*m, &disp, p, lm[i]));
        let snapshot = m.points().to_vec();
        let mut ok = false;
        if clear {
            disp.apply(m);
            match expand_with(&solver, m, cfg, "optimize") {
                Ok(rep) => {
                    let now = total_l1(m, originals);
                    if now < best {
                        let gain = rat_approx(&((&best - &now) / &best));
                        debug!("optimize round {rounds}: beta {beta} gain {gain:.3e}");
                        best = now;
                        totals.push(best.clone());
                        round_min.push(rep.min_dist2);
                        ok = true;
                        accepted += 1;
                        successes += 1;
                        if successes == 4 {
                            beta = (2.0 * beta).min(1.0);
                            successes = 0;
                        }
                        if gain < MIN_IMPROVEMENT {
                            break;
                        }
                    }
                }
                Err(e) => debug!("optimize round {rounds}: repair failed: {e}"),
            }
        }
        if !ok {
            restore(m, &snapshot);
            rejected += 1;
            successes = 0;
            beta *= 0.5;
        }
    }
    let live: Vec<usize> = m
        .vertices()
        .filter(|&v| v < originals.len() && !m.vertex_triangles(v).is_empty())
        .collect();
    let stats = displacement_stats(live.iter().map(|&v| (&originals[v], m.point(v))), d);
    let mut report = StageReport::new("optimize").with_stats(&stats);
    report.iterations = rounds;
    report.seconds = start.elapsed().as_secs_f64();
    report.bump("accepted", accepted as u64);
    report.bump("rejected", rejected as u64);
    Ok(OptimizeOutcome {
        report,
        stats,
        totals,
        round_min_dist2: round_min,
        accepted,
        rejected,
    })
}
