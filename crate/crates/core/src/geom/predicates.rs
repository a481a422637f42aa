//! Orientation and intersection predicates.
//!
//! Each predicate has a generic body returning `Option`; `None` means the
//! scalar type could not decide a sign. Public entry points run the body on
//! intervals first and fall back to rationals.

use std::cmp::Ordering;

use super::interval::Interval;
use super::scalar::{Rational, Scalar};
use super::vec3::{ExactPoint, IVec3, V3};
use super::GeomError;

/// Source of vertex positions, exact and approximate.
pub trait PointSource {
    fn exact(&self, v: usize) -> &ExactPoint;
    fn approx(&self, v: usize) -> &IVec3;
}

/// Positions given as plain slices.
pub struct SlicePoints<'a> {
    pub exact: &'a [ExactPoint],
    pub approx: &'a [IVec3],
}

impl PointSource for SlicePoints<'_> {
    fn exact(&self, v: usize) -> &ExactPoint {
        &self.exact[v]
    }
    fn approx(&self, v: usize) -> &IVec3 {
        &self.approx[v]
    }
}

fn decide<R>(approx: impl FnOnce() -> Option<R>, exact: impl FnOnce() -> Option<R>) -> R {
    match approx() {
        Some(r) => r,
        None => exact().expect("exact arithmetic always decides"),
    }
}

pub fn orient3d_with<S: Scalar>(a: &V3<S>, b: &V3<S>, c: &V3<S>, d: &V3<S>) -> Option<Ordering> {
    b.sub(a).cross(&c.sub(a)).dot(&d.sub(a)).sign()
}

/// Sign of det[b−a, c−a, d−a]; positive when d is above the plane abc.
pub fn orient3d(a: &ExactPoint, b: &ExactPoint, c: &ExactPoint, d: &ExactPoint) -> Ordering {
    let ia = [a.interval(), b.interval(), c.interval(), d.interval()];
    decide(
        || orient3d_with(&ia[0], &ia[1], &ia[2], &ia[3]),
        || orient3d_with(a, b, c, d),
    )
}

fn is_le0(s: Option<Ordering>) -> Option<bool> {
    s.map(|o| o != Ordering::Greater)
}

/// Closed point-in-triangle test for a point known to be coplanar; `n` is the
/// triangle normal (b−a)×(c−a).
fn point_in_tri_coplanar<S: Scalar>(x: &V3<S>, t: [&V3<S>; 3], n: &V3<S>) -> Option<bool> {
    let mut inside = true;
    for i in 0..3 {
        let (p, q) = (t[i], t[(i + 1) % 3]);
        let s = q.sub(p).cross(&x.sub(p)).dot(n).sign()?;
        if s == Ordering::Less {
            inside = false;
        }
    }
    Some(inside)
}

/// Closed intersection of coplanar segments ab and cd, sides measured
/// against the plane normal `n`.
fn segments_meet_coplanar<S: Scalar>(
    a: &V3<S>,
    b: &V3<S>,
    c: &V3<S>,
    d: &V3<S>,
    n: &V3<S>,
) -> Option<bool> {
    let side = |x: &V3<S>, p: &V3<S>, q: &V3<S>| q.sub(p).cross(&x.sub(p)).dot(n).sign();
    let s1 = side(c, a, b)?;
    let s2 = side(d, a, b)?;
    let s3 = side(a, c, d)?;
    let s4 = side(b, c, d)?;
    use Ordering::*;
    let strict_same = |x: Ordering, y: Ordering| x != Equal && x == y;
    if strict_same(s1, s2) || strict_same(s3, s4) {
        return Some(false);
    }
    if [s1, s2, s3, s4].iter().all(|s| *s == Equal) {
        // collinear: compare parameters along ab
        let ab = b.sub(a);
        let tc = c.sub(a).dot(&ab);
        let td = d.sub(a).dot(&ab);
        let len = ab.dot(&ab);
        // [0, len] overlaps [min(tc,td), max(tc,td)]
        let c_before = tc.sign()? == Less;
        let d_before = td.sign()? == Less;
        if c_before && d_before {
            return Some(false);
        }
        let c_after = tc.sub(&len).sign()? == Greater;
        let d_after = td.sub(&len).sign()? == Greater;
        return Some(!(c_after && d_after));
    }
    Some(true)
}

/// Closed segment pq against closed triangle abc.
pub fn segment_meets_triangle_with<S: Scalar>(p: &V3<S>, q: &V3<S>, t: [&V3<S>; 3]) -> Option<bool> {
    let [a, b, c] = t;
    let o1 = orient3d_with(a, b, c, p)?;
    let o2 = orient3d_with(a, b, c, q)?;
    use Ordering::*;
    if o1 != Equal && o1 == o2 {
        return Some(false);
    }
    if o1 == Equal && o2 == Equal {
        let n = b.sub(a).cross(&c.sub(a));
        if point_in_tri_coplanar(p, t, &n)? || point_in_tri_coplanar(q, t, &n)? {
            return Some(true);
        }
        for i in 0..3 {
            if segments_meet_coplanar(p, q, t[i], t[(i + 1) % 3], &n)? {
                return Some(true);
            }
        }
        return Some(false);
    }
    // The segment reaches the plane; its crossing point lies in the triangle
    // iff the line pq passes on one consistent side of every edge.
    let s = [
        orient3d_with(p, q, a, b)?,
        orient3d_with(p, q, b, c)?,
        orient3d_with(p, q, c, a)?,
    ];
    Some(!(s.contains(&Greater) && s.contains(&Less)))
}

/// Separating-axis test for closed triangles. Candidate axes are the two
/// normals, the nine edge cross products and, for coplanar input, the
/// in-plane edge normals; these are the facet normals of T1 ⊕ (−T2).
pub fn triangles_intersect_with<S: Scalar>(t1: [&V3<S>; 3], t2: [&V3<S>; 3]) -> Option<bool> {
    let e1 = [t1[1].sub(t1[0]), t1[2].sub(t1[1]), t1[0].sub(t1[2])];
    let e2 = [t2[1].sub(t2[0]), t2[2].sub(t2[1]), t2[0].sub(t2[2])];
    let n1 = e1[0].cross(&e1[1]);
    let n2 = e2[0].cross(&e2[1]);
    let mut undecided = false;
    let mut test = |axis: &V3<S>| -> Option<bool> {
        match axis.is_zero() {
            Some(true) => return Some(false),
            None => {
                undecided = true;
                return Some(false);
            }
            Some(false) => {}
        }
        let p1: Vec<S> = t1.iter().map(|p| p.dot(axis)).collect();
        let p2: Vec<S> = t2.iter().map(|p| p.dot(axis)).collect();
        let mut above = Some(true);
        let mut below = Some(true);
        for x in &p1 {
            for y in &p2 {
                match y.sub(x).sign() {
                    Some(Ordering::Greater) => below = Some(false),
                    Some(Ordering::Less) => above = Some(false),
                    Some(Ordering::Equal) => {
                        above = Some(false);
                        below = Some(false);
                    }
                    None => {
                        above = above.and_then(|a| if a { None } else { Some(false) });
                        below = below.and_then(|b| if b { None } else { Some(false) });
                    }
                }
            }
        }
        match (above, below) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => {
                undecided = true;
                Some(false)
            }
        }
    };
    let mut separated = test(&n1)? || test(&n2)?;
    if !separated {
        'outer: for a in &e1 {
            for b in &e2 {
                if test(&a.cross(b))? {
                    separated = true;
                    break 'outer;
                }
            }
        }
    }
    if !separated {
        match n1.cross(&n2).is_zero() {
            Some(true) => {
                for e in e1.iter().chain(e2.iter()) {
                    if test(&n1.cross(e))? {
                        separated = true;
                        break;
                    }
                }
            }
            Some(false) => {}
            None => undecided = true,
        }
    }
    if separated {
        Some(false)
    } else if undecided {
        None
    } else {
        Some(true)
    }
}

fn nondegenerate(t: [&ExactPoint; 3]) -> Result<(), GeomError> {
    let n = t[1].sub(t[0]).cross(&t[2].sub(t[0]));
    if n.is_zero() == Some(true) {
        Err(GeomError::DegenerateTriangle)
    } else {
        Ok(())
    }
}

/// Whether two closed triangles share a point.
pub fn triangles_intersect(t1: [&ExactPoint; 3], t2: [&ExactPoint; 3]) -> Result<bool, GeomError> {
    nondegenerate(t1)?;
    nondegenerate(t2)?;
    let i1 = t1.map(|p| p.interval());
    let i2 = t2.map(|p| p.interval());
    Ok(decide(
        || triangles_intersect_with([&i1[0], &i1[1], &i1[2]], [&i2[0], &i2[1], &i2[2]]),
        || triangles_intersect_with(t1, t2),
    ))
}

/// Closed segment–triangle intersection in exact arithmetic.
pub fn segment_meets_triangle(p: &ExactPoint, q: &ExactPoint, t: [&ExactPoint; 3]) -> bool {
    let ip = p.interval();
    let iq = q.interval();
    let it = t.map(|x| x.interval());
    decide(
        || segment_meets_triangle_with(&ip, &iq, [&it[0], &it[1], &it[2]]),
        || segment_meets_triangle_with(p, q, t),
    )
}

/// Whether the segment from `s` toward `a` starts inside triangle (s, c, d):
/// `a` is coplanar with it and inside the angle at `s`.
fn edge_enters_corner<S: Scalar>(s: &V3<S>, a: &V3<S>, c: &V3<S>, d: &V3<S>) -> Option<bool> {
    if orient3d_with(s, c, d, a)? != Ordering::Equal {
        return Some(false);
    }
    let (ca, da, aa) = (c.sub(s), d.sub(s), a.sub(s));
    let n = ca.cross(&da);
    let first = is_le0(ca.cross(&aa).dot(&n).neg().sign())?;
    let second = is_le0(aa.cross(&da).dot(&n).neg().sign())?;
    Some(first && second)
}

/// Conflict between two mesh triangles given by vertex ids: contact beyond
/// the vertices or edge they share.
fn conflict_with<'a, S: Scalar + 'a>(
    t1: [usize; 3],
    t2: [usize; 3],
    pos: &impl Fn(usize) -> &'a V3<S>,
) -> Option<bool> {
    let shared: Vec<usize> = t1.iter().copied().filter(|v| t2.contains(v)).collect();
    let p1 = t1.map(pos);
    let p2 = t2.map(pos);
    match shared.len() {
        0 => triangles_intersect_with(p1, p2),
        1 => {
            let s = shared[0];
            let [a, b] = others(t1, s);
            let [c, d] = others(t2, s);
            let (ps, pa, pb, pc, pd) = (pos(s), pos(a), pos(b), pos(c), pos(d));
            Some(
                segment_meets_triangle_with(pa, pb, p2)?
                    || segment_meets_triangle_with(pc, pd, p1)?
                    || edge_enters_corner(ps, pa, pc, pd)?
                    || edge_enters_corner(ps, pb, pc, pd)?
                    || edge_enters_corner(ps, pc, pa, pb)?
                    || edge_enters_corner(ps, pd, pa, pb)?,
            )
        }
        2 => {
            let (s1, s2) = (pos(shared[0]), pos(shared[1]));
            let a = pos(t1.iter().copied().find(|v| !shared.contains(v)).unwrap());
            let b = pos(t2.iter().copied().find(|v| !shared.contains(v)).unwrap());
            if orient3d_with(s1, s2, a, b)? != Ordering::Equal {
                return Some(false);
            }
            let e = s2.sub(s1);
            let side = e.cross(&a.sub(s1)).dot(&e.cross(&b.sub(s1)));
            Some(side.sign()? == Ordering::Greater)
        }
        _ => Some(true),
    }
}

fn others(t: [usize; 3], s: usize) -> [usize; 2] {
    let mut out = [0; 2];
    let mut k = 0;
    for v in t {
        if v != s {
            out[k] = v;
            k += 1;
        }
    }
    out
}

/// Mesh-level intersection: two triangles conflict when they touch anywhere
/// other than their shared vertices and edges.
pub fn triangles_conflict(t1: [usize; 3], t2: [usize; 3], pts: &(impl PointSource + ?Sized)) -> bool {
    decide(
        || conflict_with::<Interval>(t1, t2, &|v| pts.approx(v)),
        || conflict_with::<Rational>(t1, t2, &|v| pts.exact(v)),
    )
}
