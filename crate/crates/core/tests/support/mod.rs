//! Independent oracles and randomized campaigns shared by the integration
//! tests and the acceptance gate.
#![allow(dead_code)]

use meshsep::geom::{
    closest_frame, feature_distance, rat_approx, rat_from_f64, triangles_intersect, segment_meets_triangle,
    ExactPoint, Feature, Rational, SlicePoints, Vec3f,
};
use meshsep::mesh::{build_mesh, Mesh};
use meshsep::modify::{contract_edge, flip_edge, EditOutcome};
use meshsep::proximity::{
    build_octree, close_pairs, close_pairs_exhaustive, FeaturePair, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF,
};
use meshsep::separate::{linearized_separation, DisplacementField};
use meshsep::synth::{generate_synthetic, SynthKind, SynthSpec};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dyadic_point(rng: &mut ChaCha8Rng, scale: i64, den: i64) -> ExactPoint {
    let mut c = || rat_from_f64(rng.gen_range(-scale..=scale) as f64 / den as f64);
    ExactPoint::new(c(), c(), c())
}

/// Point on a coarse lattice, so that coplanar and touching input is common.
pub fn lattice_point(rng: &mut ChaCha8Rng) -> ExactPoint {
    let mut c = || rat_from_f64(rng.gen_range(0..=4) as f64 / 2.0);
    ExactPoint::new(c(), c(), c())
}

pub fn nondegenerate(t: &[ExactPoint; 3]) -> bool {
    !t[1].sub(&t[0]).cross(&t[2].sub(&t[0])).norm2().is_zero()
}

// ---------------------------------------------------------------------------
// Convex hull intersection by exact linear feasibility.

fn solve_columns(cols: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let (rows, n) = (rhs.len(), cols.len());
    let mut a: Vec<Vec<Rational>> = (0..rows)
        .map(|r| {
            let mut row: Vec<Rational> = cols.iter().map(|c| c[r].clone()).collect();
            row.push(rhs[r].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            return None;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for k in c..=n {
            a[r][k] = &a[r][k] * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in c..=n {
                    let t = &f * &a[r][k];
                    a[i][k] -= t;
                }
            }
        }
        pivots.push(r);
        r += 1;
    }
    if (r..rows).any(|i| !a[i][n].is_zero()) {
        return None;
    }
    Some(pivots.iter().map(|&i| a[i][n].clone()).collect())
}

/// Whether the convex hulls of two point sets meet: some λ, μ ≥ 0 with
/// Σλ = Σμ = 1 and Σλa = Σμb. A feasible system has a basic solution on
/// independent columns, so trying every column subset decides it.
pub fn hulls_intersect(a: &[ExactPoint], b: &[ExactPoint]) -> bool {
    let one = Rational::from_integer(1.into());
    let zero = Rational::zero();
    let mut cols = Vec::new();
    for p in a {
        cols.push(vec![p.x.clone(), p.y.clone(), p.z.clone(), one.clone(), zero.clone()]);
    }
    for p in b {
        cols.push(vec![-p.x.clone(), -p.y.clone(), -p.z.clone(), zero.clone(), one.clone()]);
    }
    let rhs = vec![zero.clone(), zero.clone(), zero.clone(), one.clone(), one.clone()];
    let n = cols.len();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() > 5 {
            continue;
        }
        let sub: Vec<Vec<Rational>> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| cols[i].clone()).collect();
        if let Some(x) = solve_columns(&sub, &rhs) {
            if x.iter().all(|v| !v.is_negative()) {
                return true;
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Distances by sampling.

fn samples(f: &[Vec3f], n: usize) -> Vec<Vec3f> {
    let lerp3 = |a: f64, b: f64| {
        let c = 1.0 - a - b;
        match f.len() {
            1 => f[0],
            2 => f[0].scale(&c).add(&f[1].scale(&(a + b))),
            _ => f[0].scale(&c).add(&f[1].scale(&a)).add(&f[2].scale(&b)),
        }
    };
    let mut out = Vec::new();
    match f.len() {
        1 => out.push(f[0]),
        2 => out.extend((0..=n).map(|i| lerp3(i as f64 / n as f64, 0.0))),
        _ => {
            for i in 0..=n {
                for j in 0..=n - i {
                    out.push(lerp3(i as f64 / n as f64, j as f64 / n as f64));
                }
            }
        }
    }
    out
}

fn diameter(f: &[Vec3f]) -> f64 {
    let mut d: f64 = 0.0;
    for a in f {
        for b in f {
            d = d.max(a.sub(b).length());
        }
    }
    d
}

/// Minimum distance over grid samples of both simplices, with the grid's
/// resolution bound: the true distance lies within `tol` below the value.
pub fn sampled_distance(a: &[Vec3f], b: &[Vec3f], n: usize) -> (f64, f64) {
    let (sa, sb) = (samples(a, n), samples(b, n));
    let mut best = f64::INFINITY;
    for p in &sa {
        for q in &sb {
            best = best.min(p.sub(q).length());
        }
    }
    let tol = 2.0 * (diameter(a) + diameter(b)) / n as f64 + 1e-12;
    (best, tol)
}

pub fn feature_points(f: &Feature, pts: &[ExactPoint]) -> Vec<ExactPoint> {
    f.ids().iter().map(|&v| pts[v].clone()).collect()
}

/// One distance case: a vertex and a triangle, or two edges, on disjoint
/// vertex ids 0.. of `pts`.
pub struct DistanceCase {
    pub pts: Vec<ExactPoint>,
    pub a: Feature,
    pub b: Feature,
}

pub fn random_distance_case(rng: &mut ChaCha8Rng, adversarial: bool) -> DistanceCase {
    loop {
        let pts: Vec<ExactPoint> = (0..4)
            .map(|_| if adversarial { lattice_point(rng) } else { dyadic_point(rng, 256, 256) })
            .collect();
        let vt = rng.gen_bool(0.5);
        let (a, b) = if vt {
            (Feature::Vertex(0), Feature::Triangle([1, 2, 3]))
        } else {
            (Feature::Edge([0, 1]), Feature::Edge([2, 3]))
        };
        let ok = if vt {
            nondegenerate(&[pts[1].clone(), pts[2].clone(), pts[3].clone()])
        } else {
            pts[0] != pts[1] && pts[2] != pts[3]
        };
        if ok {
            return DistanceCase { pts, a, b };
        }
    }
}

/// Exact distance against the sampling oracle; `None` when they agree.
pub fn check_distance(c: &DistanceCase) -> Option<String> {
    let r = feature_distance(&c.a, &c.b, |v| &c.pts[v]).ok()?;
    let exact = rat_approx(&r.dist2).sqrt();
    let f = |x: &Feature| -> Vec<Vec3f> { feature_points(x, &c.pts).iter().map(|p| p.to_f64()).collect() };
    let (fa, fb) = (f(&c.a), f(&c.b));
    let n = if fa.len() == 1 { 96 } else { 512 };
    let (sampled, tol) = sampled_distance(&fa, &fb, n);
    // Closest points must lie on the features and realize the distance.
    let on = |p: &ExactPoint, pts: &[ExactPoint]| hulls_intersect(std::slice::from_ref(p), pts);
    let realized = r.q.sub(&r.p).norm2() == r.dist2;
    let ok = exact <= sampled * (1.0 + 1e-12) + 1e-15
        && sampled - tol <= exact
        && realized
        && on(&r.p, &feature_points(&c.a, &c.pts))
        && on(&r.q, &feature_points(&c.b, &c.pts));
    (!ok).then(|| format!("distance {exact} vs sampled {sampled} (tol {tol})"))
}

// ---------------------------------------------------------------------------
// Intersection predicates.

pub fn random_triangle(rng: &mut ChaCha8Rng, adversarial: bool) -> [ExactPoint; 3] {
    loop {
        let t = if adversarial {
            [lattice_point(rng), lattice_point(rng), lattice_point(rng)]
        } else {
            [dyadic_point(rng, 64, 64), dyadic_point(rng, 64, 64), dyadic_point(rng, 64, 64)]
        };
        if nondegenerate(&t) {
            return t;
        }
    }
}

pub fn check_triangles(t1: &[ExactPoint; 3], t2: &[ExactPoint; 3]) -> Option<String> {
    let got = triangles_intersect([&t1[0], &t1[1], &t1[2]], [&t2[0], &t2[1], &t2[2]]).ok()?;
    let want = hulls_intersect(t1, t2);
    (got != want).then(|| format!("triangles_intersect {got}, oracle {want}: {t1:?} {t2:?}"))
}

pub fn check_segment(p: &ExactPoint, q: &ExactPoint, t: &[ExactPoint; 3]) -> Option<String> {
    let got = segment_meets_triangle(p, q, [&t[0], &t[1], &t[2]]);
    let want = hulls_intersect(&[p.clone(), q.clone()], t);
    (got != want).then(|| format!("segment_meets_triangle {got}, oracle {want}"))
}

// ---------------------------------------------------------------------------
// Close pairs against the exhaustive scan.

pub fn random_soup(rng: &mut ChaCha8Rng, tris: usize, adversarial: bool) -> Mesh {
    loop {
        let mut pts = Vec::new();
        let mut ts = Vec::new();
        for _ in 0..tris {
            let t = random_triangle(rng, adversarial);
            let b = pts.len();
            pts.extend(t);
            ts.push([b, b + 1, b + 2]);
        }
        if let Ok(m) = build_mesh(pts, ts) {
            return m;
        }
    }
}

pub fn check_close_pairs(m: &Mesh, threshold2: &Rational) -> Option<String> {
    let idx = build_octree(m, 2, 8);
    let got: Vec<_> = close_pairs(m, &idx, threshold2).into_iter().map(|p| (p.key(), p.dist2)).collect();
    let want: Vec<_> = close_pairs_exhaustive(m, threshold2).into_iter().map(|p| (p.key(), p.dist2)).collect();
    (got != want).then(|| format!("close_pairs {} vs exhaustive {}", got.len(), want.len()))
}

#[derive(Debug, Default)]
pub struct OracleTally {
    pub cases: usize,
    pub failures: Vec<String>,
}

impl OracleTally {
    fn record(&mut self, r: Option<String>) {
        self.cases += 1;
        if let Some(f) = r {
            self.failures.push(f);
        }
    }
}

/// `random` plus `adversarial` cases of each kernel check.
pub fn kernel_campaign(random: usize, adversarial: usize, seed: u64) -> [(&'static str, OracleTally); 4] {
    let mut r = rng(seed);
    let mut dist = OracleTally::default();
    let mut tri = OracleTally::default();
    let mut seg = OracleTally::default();
    let mut pairs = OracleTally::default();
    for i in 0..random + adversarial {
        let adv = i >= random;
        dist.record(check_distance(&random_distance_case(&mut r, adv)));
        let t1 = random_triangle(&mut r, adv);
        let t2 = if adv && r.gen_bool(0.3) {
            // Share a corner position without sharing ids.
            let mut t = random_triangle(&mut r, adv);
            t[0] = t1[r.gen_range(0..3)].clone();
            if nondegenerate(&t) { t } else { random_triangle(&mut r, adv) }
        } else {
            random_triangle(&mut r, adv)
        };
        tri.record(check_triangles(&t1, &t2));
        let (p, q) = if adv {
            (lattice_point(&mut r), lattice_point(&mut r))
        } else {
            (dyadic_point(&mut r, 64, 64), dyadic_point(&mut r, 64, 64))
        };
        seg.record(check_segment(&p, &q, &t1));
        let m = random_soup(&mut r, 5, adv);
        let thr = if adv {
            // A threshold equal to an actual distance tests the strict bound.
            close_pairs_exhaustive(&m, &Rational::from_integer(100.into()))
                .get(r.gen_range(0..8))
                .map(|p| p.dist2.clone())
                .unwrap_or_else(|| Rational::from_integer(1.into()))
        } else {
            rat_from_f64(r.gen_range(1..=64) as f64 / 256.0)
        };
        pairs.record(check_close_pairs(&m, &thr));
    }
    [("feature_distance", dist), ("triangles_intersect", tri), ("segment_meets_triangle", seg), ("close_pairs", pairs)]
}

// ---------------------------------------------------------------------------
// Linearization order.

fn pair_from(pts: &[ExactPoint], a: Feature, b: Feature) -> FeaturePair {
    let r = feature_distance(&a, &b, |v| &pts[v]).unwrap();
    FeaturePair {
        a,
        b,
        frame: closest_frame(&r.p, &r.q).ok(),
        dist2: r.dist2,
        p: r.p,
        q: r.q,
    }
}

/// A generic pair: the vertex over the triangle's interior, or two edges
/// whose closest points are interior to both.
fn generic_pair(rng: &mut ChaCha8Rng) -> (Vec<ExactPoint>, FeaturePair) {
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    if u(0.0, 1.0) < 0.5 {
        let pts = vec![
            ExactPoint::from_f64(u(0.2, 0.4), u(0.2, 0.4), u(0.5, 1.0)),
            ExactPoint::from_f64(u(-0.2, 0.0), u(-0.2, 0.0), u(-0.2, 0.2)),
            ExactPoint::from_f64(u(1.0, 1.3), u(-0.2, 0.1), u(-0.2, 0.2)),
            ExactPoint::from_f64(u(-0.2, 0.1), u(1.0, 1.3), u(-0.2, 0.2)),
        ];
        let p = pair_from(&pts, Feature::Vertex(0), Feature::Triangle([1, 2, 3]));
        (pts, p)
    } else {
        let h = u(0.5, 1.0);
        let pts = vec![
            ExactPoint::from_f64(-1.0, u(-0.3, 0.3), u(-0.2, 0.2)),
            ExactPoint::from_f64(1.0, u(-0.3, 0.3), u(-0.2, 0.2)),
            ExactPoint::from_f64(u(-0.3, 0.3), -1.0, h + u(-0.2, 0.2)),
            ExactPoint::from_f64(u(-0.3, 0.3), 1.0, h + u(-0.2, 0.2)),
        ];
        let p = pair_from(&pts, Feature::Edge([0, 1]), Feature::Edge([2, 3]));
        (pts, p)
    }
}

fn truncation_error(pts: &[ExactPoint], pair: &FeaturePair, dir: &[Vec3f], scale: f64) -> f64 {
    let mut disp = DisplacementField::new();
    for (v, a) in dir.iter().enumerate() {
        disp.insert(v, a.scale(&scale));
    }
    let approx: Vec<_> = pts.iter().map(|p| p.interval()).collect();
    let src = SlicePoints { exact: pts, approx: &approx };
    let one = Rational::from_integer(1.into());
    let lin = linearized_separation(&src, pair, &disp, &one, 10.0);
    let moved: Vec<ExactPoint> = (0..pts.len())
        .map(|v| disp.exact(v).map_or_else(|| pts[v].clone(), |a| pts[v].add(&a)))
        .collect();
    let truth = rat_approx(&feature_distance(&pair.a, &pair.b, |v| &moved[v]).unwrap().dist2).sqrt();
    (truth - lin).abs()
}

/// Mean truncation errors at Δ and Δ/2 over `trials` random pairs and
/// displacement directions, with the ratio of the means.
pub fn linearization_ratio(trials: usize, delta: f64, seed: u64) -> (f64, f64, f64) {
    let mut r = rng(seed);
    let (mut e1, mut e2) = (0.0, 0.0);
    for _ in 0..trials {
        let (pts, pair) = generic_pair(&mut r);
        let dir: Vec<Vec3f> = (0..pts.len())
            .map(|_| Vec3f::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect();
        e1 += truncation_error(&pts, &pair, &dir, delta);
        e2 += truncation_error(&pts, &pair, &dir, delta / 2.0);
    }
    let n = trials as f64;
    (e1 / n, e2 / n, e2 / e1)
}

// ---------------------------------------------------------------------------
// Edit combinatorics.

#[derive(Debug, Default)]
pub struct EditTally {
    pub applied: usize,
    pub contractions: usize,
    pub flips: usize,
    pub rejected: usize,
    pub violations: Vec<String>,
}

/// Two subdivided cubes side by side: a closed mesh of two components.
fn two_cubes(seed: u64) -> Mesh {
    let one = Rational::from_integer(1.into());
    let spec = SynthSpec { k: 0, ..SynthSpec::new(SynthKind::SliverBand, 400, one / Rational::from_integer(1000.into()), seed) };
    let (m, _) = generate_synthetic(&spec);
    let mut pts = m.points().to_vec();
    let n = pts.len();
    let shift = ExactPoint::from_ints(100, 0, 0);
    pts.extend(m.points().iter().map(|p| p.add(&shift)));
    let mut tris: Vec<[usize; 3]> = m.triangles().map(|(_, t)| t).collect();
    tris.extend(m.triangles().map(|(_, t)| t.map(|v| v + n)));
    build_mesh(pts, tris).unwrap()
}

/// Random contractions and flips until `target` have been applied. Every
/// applied edit is checked against its forced count change and the
/// per-component (χ, boundary) signature.
pub fn edit_campaign(target: usize, seed: u64) -> EditTally {
    let mut tally = EditTally::default();
    let mut r = rng(seed);
    let d = Rational::new(1.into(), 1000.into());
    let mut round = 0;
    while tally.applied < target {
        let mut m = two_cubes(seed + round);
        round += 1;
        let mut idx = build_octree(&m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
        let mut sig = m.components().iter().map(|c| m.component_signature(c)).map(|s| (s.euler, s.boundary_loops)).collect::<Vec<_>>();
        sig.sort_unstable();
        let mut attempts = 0;
        while tally.applied < target && attempts < 2000 {
            attempts += 1;
            let tris: Vec<[usize; 3]> = m.triangles().map(|(_, t)| t).collect();
            let t = tris[r.gen_range(0..tris.len())];
            let k = r.gen_range(0..3);
            let e = (t[k], t[(k + 1) % 3]);
            let contract = r.gen_bool(0.35);
            let before = m.counts();
            let out = if contract { contract_edge(&mut m, e, &mut idx) } else { flip_edge(&mut m, e, &d, &mut idx) };
            let EditOutcome::Applied(rec) = out else {
                tally.rejected += 1;
                continue;
            };
            tally.applied += 1;
            let after = m.counts();
            let delta = (
                after.0 as i64 - before.0 as i64,
                after.1 as i64 - before.1 as i64,
                after.2 as i64 - before.2 as i64,
            );
            let forced = if contract { (-1, -3, -2) } else { (0, 0, 0) };
            if contract {
                tally.contractions += 1;
            } else {
                tally.flips += 1;
            }
            if delta != forced || (rec.before, rec.after) != (before, after) {
                tally.violations.push(format!("{:?} changed counts by {delta:?}", rec.kind));
            }
            let mut now: Vec<_> = m.components().iter().map(|c| m.component_signature(c)).map(|s| (s.euler, s.boundary_loops)).collect();
            now.sort_unstable();
            if now != sig {
                tally.violations.push(format!("{:?} changed component signature {sig:?} -> {now:?}", rec.kind));
                sig = now;
            }
        }
    }
    tally
}
