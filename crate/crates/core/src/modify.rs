//! Local mesh edits that remove short edges and skinny triangles.
//!
//! Contractions run before flips, each kind in ascending order of its
//! measure, in rounds until a round applies nothing. Every edit is checked
//! for new triangle intersections before it is committed.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::geom::{
    rat_interval, triangles_conflict, vertex_edge_projection, ExactPoint, Feature, PointSource, Rational,
};
use crate::mesh::{edge_key, is_degenerate, topology_signature, vertex_star_boundary, Edge, Mesh, PositionOverlay};
use crate::proximity::{build_octree, Aabb, Octree, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
use crate::report::{displacement_stats, DisplacementStats, StageReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Rejection {
    /// The vertex loops around the two end points share a vertex.
    LinkCondition,
    /// An end point's star is not a closed disk.
    NotDisk,
    /// The edge is not on exactly two triangles.
    Incidence,
    /// A new triangle would touch an existing one.
    Intersection,
    /// The flipped diagonal is already an edge.
    ExistingEdge,
    /// A triangle produced by the flip is skinny.
    StillSkinny,
    /// A new triangle would be degenerate or duplicate another.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EditKind {
    Contract,
    Flip,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EditRecord {
    pub kind: EditKind,
    pub edge: Edge,
    pub before: (usize, usize, usize),
    pub after: (usize, usize, usize),
    /// For contractions, (kept, removed) vertex ids.
    pub merged: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EditOutcome {
    Applied(EditRecord),
    Rejected(Rejection),
}

impl EditOutcome {
    pub fn is_applied(&self) -> bool {
        matches!(self, EditOutcome::Applied(_))
    }
}

/// Edges with squared length below d², shortest first.
pub fn find_short_edges(m: &Mesh, d: &Rational) -> Vec<(Edge, Rational)> {
    let d2 = d * d;
    let d2_hi = rat_interval(&d2).hi;
    let mut out: Vec<(Edge, Rational)> = m
        .edges()
        .filter_map(|((a, b), _)| {
            if m.approx(b).sub(m.approx(a)).norm2().lo > d2_hi {
                return None;
            }
            let l2 = m.point(b).sub(m.point(a)).norm2();
            (l2 < d2).then_some(((a, b), l2))
        })
        .collect();
    out.sort_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)));
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkinnyTriangle {
    pub tri: usize,
    pub base: Edge,
    pub apex: usize,
    pub height2: Rational,
}

/// Bases of `t` over which the apex projects strictly inside the base at
/// squared height below `d2`.
fn skinny_bases(pts: &(impl PointSource + ?Sized), t: [usize; 3], d2: &Rational) -> Vec<(Edge, usize, Rational)> {
    let d2_hi = rat_interval(d2).hi;
    let mut out = Vec::new();
    let ia = t.map(|v| *pts.approx(v));
    let n2 = ia[1].sub(&ia[0]).cross(&ia[2].sub(&ia[0])).norm2();
    for i in 0..3 {
        let (a, b, v) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
        // height² = |n|² / |b−a|²
        let e2 = ia[(i + 1) % 3].sub(&ia[i]).norm2();
        if n2.lo > (d2_hi * e2.hi).next_up() {
            continue;
        }
        if let Ok(Some((_, h2))) = vertex_edge_projection(pts.exact(v), pts.exact(a), pts.exact(b)) {
            if h2 < *d2 {
                out.push((edge_key(a, b), v, h2));
            }
        }
    }
    out
}

/// Triangles whose apex projects into the opposite edge at height below d,
/// lowest first.
pub fn find_skinny_triangles(m: &Mesh, d: &Rational) -> Vec<SkinnyTriangle> {
    let d2 = d * d;
    let mut out: Vec<SkinnyTriangle> = m
        .triangles()
        .flat_map(|(id, t)| {
            skinny_bases(m, t, &d2)
                .into_iter()
                .map(move |(base, apex, height2)| SkinnyTriangle { tri: id, base, apex, height2 })
        })
        .collect();
    out.sort_by(|x, y| x.height2.cmp(&y.height2).then(x.tri.cmp(&y.tri)).then(x.base.cmp(&y.base)));
    out
}

fn third(t: [usize; 3], a: usize, b: usize) -> usize {
    t.into_iter().find(|&x| x != a && x != b).unwrap()
}

/// Whether any new triangle conflicts with a surviving old triangle or with
/// another new triangle.
fn new_triangles_conflict(
    pts: &PositionOverlay<'_>,
    index: &Octree,
    new: &[[usize; 3]],
    removed: &HashSet<usize>,
) -> bool {
    let m = pts.mesh();
    for (k, &n) in new.iter().enumerate() {
        let b: Aabb = pts.bbox(n);
        for c in index.query(&b) {
            if removed.contains(&c) {
                continue;
            }
            let old = m.triangle(c).expect("indexed triangle is live");
            if triangles_conflict(n, old, pts) {
                return true;
            }
        }
        for &o in &new[k + 1..] {
            if triangles_conflict(n, o, pts) {
                return true;
            }
        }
    }
    false
}

fn commit(m: &mut Mesh, index: &mut Octree, removed: &[usize], added: &[[usize; 3]]) {
    for &id in removed {
        m.remove_triangle(id);
        index.remove(id);
    }
    for &t in added {
        let id = m.add_triangle(t);
        index.insert(id, m.triangle_bbox(id));
    }
}

/// Replaces edge th by its midpoint. Vertex `t` keeps its id and moves to
/// the midpoint; `h` is removed.
pub fn contract_edge(m: &mut Mesh, th: Edge, index: &mut Octree) -> EditOutcome {
    use EditOutcome::Rejected;
    let (t, h) = th;
    let pair = m.edge_triangles(t, h).to_vec();
    if pair.len() != 2 {
        return Rejected(Rejection::Incidence);
    }
    let v = third(m.triangle(pair[0]).unwrap(), t, h);
    let w = third(m.triangle(pair[1]).unwrap(), t, h);
    if v == w {
        return Rejected(Rejection::Incidence);
    }
    let (Some(lt), Some(lh)) = (vertex_star_boundary(m, t), vertex_star_boundary(m, h)) else {
        return Rejected(Rejection::NotDisk);
    };
    let ring_t: BTreeSet<usize> = lt.into_iter().filter(|x| ![h, v, w].contains(x)).collect();
    let ring_h: BTreeSet<usize> = lh.into_iter().filter(|x| ![t, v, w].contains(x)).collect();
    if !ring_t.is_disjoint(&ring_h) {
        return Rejected(Rejection::LinkCondition);
    }
    let mut removed: Vec<usize> = m.vertex_triangles(t).iter().chain(m.vertex_triangles(h)).copied().collect();
    removed.sort_unstable();
    removed.dedup();
    let new: Vec<[usize; 3]> = removed
        .iter()
        .filter(|id| !pair.contains(id))
        .map(|&id| m.triangle(id).unwrap().map(|x| if x == h { t } else { x }))
        .collect();
    let mut keys = HashSet::new();
    for n in &new {
        let mut k = *n;
        k.sort_unstable();
        if k[0] == k[1] || k[1] == k[2] || !keys.insert(k) {
            return Rejected(Rejection::Degenerate);
        }
    }
    let half = Rational::new(1.into(), 2.into());
    let mid = m.point(t).add(m.point(h)).scale(&half);
    let mut pts = PositionOverlay::new(m);
    pts.set(t, mid.clone());
    if new.iter().any(|n| is_degenerate(pts.exact(n[0]), pts.exact(n[1]), pts.exact(n[2]))) {
        return Rejected(Rejection::Degenerate);
    }
    let removed_set: HashSet<usize> = removed.iter().copied().collect();
    if new_triangles_conflict(&pts, index, &new, &removed_set) {
        return Rejected(Rejection::Intersection);
    }
    let before = m.counts();
    commit(m, index, &removed, &[]);
    m.set_point(t, mid);
    commit(m, index, &[], &new);
    m.kill_vertex(h);
    EditOutcome::Applied(EditRecord {
        kind: EditKind::Contract,
        edge: th,
        before,
        after: m.counts(),
        merged: Some((t, h)),
    })
}

/// Replaces edge th, shared by thv and htw, with vw.
pub fn flip_edge(m: &mut Mesh, th: Edge, d: &Rational, index: &mut Octree) -> EditOutcome {
    use EditOutcome::Rejected;
    let pair = m.edge_triangles(th.0, th.1).to_vec();
    if pair.len() != 2 {
        return Rejected(Rejection::Incidence);
    }
    // Orient so the first triangle reads (t, h, v); the new triangles then
    // keep its orientation.
    let t1 = m.triangle(pair[0]).unwrap();
    let v = third(t1, th.0, th.1);
    let k = t1.iter().position(|&x| x == v).unwrap();
    let (t, h) = (t1[(k + 1) % 3], t1[(k + 2) % 3]);
    let w = third(m.triangle(pair[1]).unwrap(), t, h);
    if m.has_edge(v, w) {
        return Rejected(Rejection::ExistingEdge);
    }
    let new = [[v, w, h], [w, v, t]];
    let pts = PositionOverlay::new(m);
    if new.iter().any(|n| is_degenerate(m.point(n[0]), m.point(n[1]), m.point(n[2]))) {
        return Rejected(Rejection::Degenerate);
    }
    let d2 = d * d;
    if new.iter().any(|n| !skinny_bases(m, *n, &d2).is_empty()) {
        return Rejected(Rejection::StillSkinny);
    }
    let removed_set: HashSet<usize> = pair.iter().copied().collect();
    if new_triangles_conflict(&pts, index, &new, &removed_set) {
        return Rejected(Rejection::Intersection);
    }
    let before = m.counts();
    commit(m, index, &pair, &new);
    EditOutcome::Applied(EditRecord {
        kind: EditKind::Flip,
        edge: th,
        before,
        after: m.counts(),
        merged: None,
    })
}

/// Signed volume enclosed by a set of triangles, times six.
fn volume6(m: &Mesh, tris: &[usize]) -> Rational {
    let mut s = Rational::zero();
    for &id in tris {
        let [a, b, c] = m.triangle_points(id);
        s += a.cross(b).dot(c);
    }
    s
}

fn is_thin(m: &Mesh, tris: &[usize], d: &Rational) -> bool {
    let d2 = d * d;
    let items: Vec<(usize, Aabb)> = tris.iter().map(|&t| (t, m.triangle_bbox(t))).collect();
    let local = Octree::build(&items, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
    let r = rat_interval(d).hi;
    let mut verts: Vec<usize> = tris.iter().flat_map(|&t| m.triangle(t).unwrap()).collect();
    verts.sort_unstable();
    verts.dedup();
    verts.iter().any(|&v| {
        let b = Aabb::empty().union_point(m.approx(v)).expanded(r);
        local.query(&b).into_iter().any(|c| {
            let t = m.triangle(c).unwrap();
            if t.contains(&v) {
                return false;
            }
            let r = crate::geom::feature_distance(&Feature::Vertex(v), &Feature::Triangle(t), |x| m.point(x));
            r.map(|r| r.dist2 < d2).unwrap_or(false)
        })
    })
}

/// Deletes components too small to separate: closed ones with volume below
/// d³ or thickness below d, open ones that fit in a box of side d. Returns
/// the indices, in [`Mesh::components`] order, of the removed components.
pub fn remove_small_components(m: &mut Mesh, d: &Rational) -> Vec<usize> {
    let d3 = d * d * d;
    let d_hi = rat_interval(d).hi;
    let d_lo = rat_interval(d).lo;
    let mut removed = Vec::new();
    for (ci, comp) in m.components().into_iter().enumerate() {
        let sig = m.component_signature(&comp);
        let b = m.bbox_of(&comp);
        let small = if sig.boundary_loops == 0 {
            let vol = volume6(m, &comp).abs() / Rational::from_integer(6.into());
            vol < d3 || ((0..3).any(|k| b.extent(k) < 4.0 * d_hi) && is_thin(m, &comp, d))
        } else {
            (0..3).all(|k| b.extent(k) < d_lo)
        };
        if small {
            let mut verts = BTreeSet::new();
            for &t in &comp {
                verts.extend(m.remove_triangle(t));
            }
            for v in verts {
                if m.vertex_triangles(v).is_empty() {
                    m.kill_vertex(v);
                }
            }
            removed.push(ci);
        }
    }
    removed
}

#[derive(Clone, Debug)]
pub struct ModifyOutcome {
    pub report: StageReport,
    pub stats: DisplacementStats,
    pub edits: Vec<EditRecord>,
    pub rejections: Vec<(EditKind, Rejection)>,
    pub removed_components: usize,
    pub rounds: usize,
}

pub const MAX_EDIT_ROUNDS: usize = 64;

/// Runs contraction and flip rounds to a fixpoint, after removing small
/// components.
pub fn modification_stage(m: &mut Mesh, d: &Rational) -> ModifyOutcome {
    let start = Instant::now();
    let orig: Vec<ExactPoint> = m.points().to_vec();
    let was_alive: Vec<bool> = (0..m.vertex_capacity()).map(|v| m.is_alive(v)).collect();
    let mut removed_components = remove_small_components(m, d).len();
    let mut index = build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH);
    let mut rep: Vec<usize> = (0..m.vertex_capacity()).collect();
    let mut edits = Vec::new();
    let mut rejections = Vec::new();
    let d2 = d * d;
    let mut rounds = 0;
    while rounds < MAX_EDIT_ROUNDS {
        rounds += 1;
        let mut applied = 0;
        for ((a, b), _) in find_short_edges(m, d) {
            if !m.has_edge(a, b) || m.point(b).sub(m.point(a)).norm2() >= d2 {
                continue;
            }
            match contract_edge(m, (a, b), &mut index) {
                EditOutcome::Applied(r) => {
                    if let Some((keep, gone)) = r.merged {
                        rep[gone] = keep;
                    }
                    edits.push(r);
                    applied += 1;
                }
                EditOutcome::Rejected(why) => rejections.push((EditKind::Contract, why)),
            }
        }
        for s in find_skinny_triangles(m, d) {
            let Some(t) = m.triangle(s.tri) else { continue };
            let still = skinny_bases(m, t, &d2).iter().any(|(e, _, _)| *e == s.base);
            if !still {
                continue;
            }
            match flip_edge(m, s.base, d, &mut index) {
                EditOutcome::Applied(r) => {
                    edits.push(r);
                    applied += 1;
                }
                EditOutcome::Rejected(why) => rejections.push((EditKind::Flip, why)),
            }
        }
        if applied == 0 {
            break;
        }
    }
    removed_components += remove_small_components(m, d).len();
    let find = |mut v: usize| {
        while rep[v] != v {
            v = rep[v];
        }
        v
    };
    let moves: Vec<(usize, usize)> = (0..orig.len())
        .filter(|&v| was_alive[v])
        .map(|v| (v, find(v)))
        .filter(|&(_, r)| m.is_alive(r) && !m.vertex_triangles(r).is_empty())
        .collect();
    let stats = displacement_stats(moves.iter().map(|&(v, r)| (&orig[v], m.point(r))), d);
    let mut report = StageReport::new("modify").with_stats(&stats);
    report.iterations = rounds;
    report.seconds = start.elapsed().as_secs_f64();
    let contractions = edits.iter().filter(|e| e.kind == EditKind::Contract).count() as u64;
    report.bump("contractions", contractions);
    report.bump("flips", edits.len() as u64 - contractions);
    report.bump("rejected", rejections.len() as u64);
    report.bump("removed_components", removed_components as u64);
    ModifyOutcome {
        report,
        stats,
        edits,
        rejections,
        removed_components,
        rounds,
    }
}

/// Per-component (χ, boundary loops) multiset, for edit audits.
pub fn intrinsic_topology(m: &Mesh) -> Vec<(i64, usize)> {
    topology_signature(m).intrinsic()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{parse_rational, rat_from_i64};
    use crate::mesh::build_mesh;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn pt(x: &str, y: &str, z: &str) -> ExactPoint {
        ExactPoint::new(q(x), q(y), q(z))
    }

    /// Octahedron with the north pole split into two vertices a short
    /// distance apart.
    fn split_octahedron(gap: &str) -> Mesh {
        let pts = vec![
            pt("1", "0", "0"),
            pt("0", "1", "0"),
            pt("-1", "0", "0"),
            pt("0", "-1", "0"),
            pt("0", "0", "-1"),
            pt(&format!("-{gap}"), "0", "1"),
            pt(gap, "0", "1"),
        ];
        // 5 = north-west pole, 6 = north-east pole
        let tris = vec![
            [0, 1, 6],
            [1, 5, 6],
            [1, 2, 5],
            [2, 3, 5],
            [3, 6, 5],
            [3, 0, 6],
            [1, 0, 4],
            [2, 1, 4],
            [3, 2, 4],
            [0, 3, 4],
        ];
        build_mesh(pts, tris).unwrap()
    }

    #[test]
    fn contraction_changes_counts_by_fixed_amounts() {
        let mut m = split_octahedron("1/1000000000");
        let before = m.counts();
        let chi = intrinsic_topology(&m);
        let mut idx = build_octree(&m, 16, 20);
        let r = contract_edge(&mut m, (5, 6), &mut idx);
        let EditOutcome::Applied(rec) = r else { panic!("{r:?}") };
        assert_eq!(rec.after, (before.0 - 1, before.1 - 3, before.2 - 2));
        assert_eq!(intrinsic_topology(&m), chi);
        assert_eq!(m.point(5), &pt("0", "0", "1"));
        m.check_consistency().unwrap();
    }

    #[test]
    fn short_edge_listing() {
        let m = split_octahedron("1/1000000000");
        let e = find_short_edges(&m, &q("1e-6"));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].0, (5, 6));
        assert!(find_short_edges(&m, &q("1e-10")).is_empty());
    }

    #[test]
    fn link_condition_rejects_shared_neighbours() {
        // Tetrahedron: contracting any edge would collapse it.
        let pts = vec![pt("0", "0", "0"), pt("1", "0", "0"), pt("0", "1", "0"), pt("0", "0", "1")];
        let mut m = build_mesh(pts, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap();
        let mut idx = build_octree(&m, 16, 20);
        let r = contract_edge(&mut m, (0, 1), &mut idx);
        assert_eq!(r, EditOutcome::Rejected(Rejection::Degenerate));
    }

    #[test]
    fn planar_quad_flip() {
        let d = "1e-6";
        let pts = vec![pt("0", "0", "0"), pt("1", "0", "0"), pt("1/2", "5e-7", "0"), pt("1/2", "-1", "0")];
        let mut m = build_mesh(pts, vec![[0, 1, 2], [1, 0, 3]]).unwrap();
        let sk = find_skinny_triangles(&m, &q(d));
        assert_eq!(sk.len(), 1);
        assert_eq!(sk[0].base, (0, 1));
        assert_eq!(sk[0].height2, q("25e-14"));
        let mut idx = build_octree(&m, 16, 20);
        let r = flip_edge(&mut m, (0, 1), &q(d), &mut idx);
        let EditOutcome::Applied(rec) = r else { panic!("{r:?}") };
        assert_eq!(rec.before, rec.after);
        assert!(m.has_edge(2, 3) && !m.has_edge(0, 1));
        assert!(find_skinny_triangles(&m, &q(d)).is_empty());
        m.check_consistency().unwrap();
    }

    #[test]
    fn obtuse_sliver_is_not_skinny() {
        let pts = vec![pt("0", "0", "0"), pt("1", "0", "0"), pt("2", "1e-9", "0")];
        let m = build_mesh(pts, vec![[0, 1, 2]]).unwrap();
        // apex 2 projects outside edge 01; vertex 1 projects inside 02
        let sk = find_skinny_triangles(&m, &q("1e-6"));
        assert_eq!(sk.len(), 1);
        assert_eq!(sk[0].apex, 1);
    }

    #[test]
    fn tiny_closed_component_is_removed() {
        let s = "1e-7";
        let pts = vec![pt("0", "0", "0"), pt(s, "0", "0"), pt("0", s, "0"), pt("0", "0", s)];
        let mut m = build_mesh(pts, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap();
        assert_eq!(remove_small_components(&mut m, &q("1e-6")), vec![0]);
        assert_eq!(m.num_triangles(), 0);
        let pts = vec![pt("0", "0", "0"), pt("1", "0", "0"), pt("0", "1", "0"), pt("0", "0", "1")];
        let mut m = build_mesh(pts, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap();
        assert!(remove_small_components(&mut m, &rat_from_i64(0)).is_empty());
    }

    #[test]
    fn stage_is_idempotent() {
        let mut m = split_octahedron("1/1000000000");
        let d = q("1e-6");
        let first = modification_stage(&mut m, &d);
        assert_eq!(first.edits.len(), 1);
        assert!((first.stats.max - 0.001).abs() < 1e-9);
        let second = modification_stage(&mut m, &d);
        assert!(second.edits.is_empty());
    }
}
