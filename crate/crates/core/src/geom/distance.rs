//! Closest points between mesh features.
//!
//! Distances are carried squared: the Euclidean distance between rational
//! points is generally irrational, its square never is.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::scalar::{FieldScalar, Rational};
use super::vec3::{ExactPoint, V3};
use super::GeomError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Vertex(usize),
    Edge([usize; 2]),
    Triangle([usize; 3]),
}

impl Feature {
    pub fn ids(&self) -> &[usize] {
        match self {
            Feature::Vertex(v) => std::slice::from_ref(v),
            Feature::Edge(e) => e,
            Feature::Triangle(t) => t,
        }
    }

    pub fn shares_vertex(&self, o: &Feature) -> bool {
        self.ids().iter().any(|v| o.ids().contains(v))
    }

    /// Same feature with ids sorted, so equal features compare equal.
    pub fn canonical(&self) -> Feature {
        match *self {
            Feature::Vertex(v) => Feature::Vertex(v),
            Feature::Edge([a, b]) => Feature::Edge([a.min(b), a.max(b)]),
            Feature::Triangle(mut t) => {
                t.sort_unstable();
                Feature::Triangle(t)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDistance {
    pub dist2: Rational,
    /// Closest point on the first feature.
    pub p: ExactPoint,
    /// Closest point on the second feature.
    pub q: ExactPoint,
}

/// Closest point of segment ab to p, with its squared distance.
pub fn point_segment<T: FieldScalar>(p: &V3<T>, a: &V3<T>, b: &V3<T>) -> (V3<T>, T) {
    let ab = b.sub(a);
    let num = p.sub(a).dot(&ab);
    let den = ab.dot(&ab);
    let q = if num <= T::zero() {
        a.clone()
    } else if num >= den {
        b.clone()
    } else {
        a.add(&ab.scale(&num.div(&den)))
    };
    let d2 = p.sub(&q).norm2();
    (q, d2)
}

/// Closest point of closed triangle abc to p.
pub fn point_triangle<T: FieldScalar>(p: &V3<T>, t: [&V3<T>; 3]) -> (V3<T>, T) {
    let [a, b, c] = t;
    let n = b.sub(a).cross(&c.sub(a));
    let inside = (0..3).all(|i| {
        let (s, e) = (t[i], t[(i + 1) % 3]);
        e.sub(s).cross(&p.sub(s)).dot(&n) >= T::zero()
    });
    if inside {
        let k = p.sub(a).dot(&n).div(&n.norm2());
        let q = p.sub(&n.scale(&k));
        let d2 = p.sub(&q).norm2();
        return (q, d2);
    }
    let mut best: Option<(V3<T>, T)> = None;
    for i in 0..3 {
        let cand = point_segment(p, t[i], t[(i + 1) % 3]);
        if better(&cand.1, &cand.0, &best) {
            best = Some(cand);
        }
    }
    best.unwrap()
}

fn better<T: FieldScalar>(d2: &T, q: &V3<T>, best: &Option<(V3<T>, T)>) -> bool {
    match best {
        None => true,
        Some((bq, bd)) => match d2.partial_cmp(bd) {
            Some(Ordering::Less) => true,
            Some(Ordering::Equal) => q.lex_cmp(bq) == Ordering::Less,
            _ => false,
        },
    }
}

/// Closest points of segments a0a1 and b0b1. Among several minimizers the
/// lexicographically smallest (p, q) wins.
pub fn segment_segment<T: FieldScalar>(
    a0: &V3<T>,
    a1: &V3<T>,
    b0: &V3<T>,
    b1: &V3<T>,
) -> (V3<T>, V3<T>, T) {
    let d1 = a1.sub(a0);
    let d2 = b1.sub(b0);
    let r = a0.sub(b0);
    let a = d1.dot(&d1);
    let b = d1.dot(&d2);
    let e = d2.dot(&d2);
    let c = d1.dot(&r);
    let f = d2.dot(&r);
    let denom = a.mul(&e).sub(&b.mul(&b));
    if denom > T::zero() && !T::nearly_parallel(&denom, &a.mul(&e)) {
        let s = b.mul(&f).sub(&c.mul(&e));
        let t = a.mul(&f).sub(&b.mul(&c));
        let zero = T::zero();
        if s >= zero && s <= denom && t >= zero && t <= denom {
            let p = a0.add(&d1.scale(&s.div(&denom)));
            let q = b0.add(&d2.scale(&t.div(&denom)));
            let dist2 = q.sub(&p).norm2();
            return (p, q, dist2);
        }
    }
    // The minimum lies on the boundary of the parameter square.
    let mut best: Option<(V3<T>, V3<T>, T)> = None;
    let mut offer = |p: V3<T>, q: V3<T>, d: T| {
        let take = match &best {
            None => true,
            Some((bp, bq, bd)) => match d.partial_cmp(bd) {
                Some(Ordering::Less) => true,
                Some(Ordering::Equal) => p.lex_cmp(bp).then_with(|| q.lex_cmp(bq)) == Ordering::Less,
                _ => false,
            },
        };
        if take {
            best = Some((p, q, d));
        }
    };
    for a_end in [a0, a1] {
        let (q, d) = point_segment(a_end, b0, b1);
        offer(a_end.clone(), q, d);
    }
    for b_end in [b0, b1] {
        let (p, d) = point_segment(b_end, a0, a1);
        offer(p, b_end.clone(), d);
    }
    best.unwrap()
}

/// Closest points for the two pair kinds the separation uses, over any
/// field. Returns `None` for other kind combinations.
pub fn closest_points<T: FieldScalar>(
    a: &Feature,
    b: &Feature,
    pos: impl Fn(usize) -> V3<T>,
) -> Option<(V3<T>, V3<T>, T)> {
    match (a, b) {
        (Feature::Vertex(v), Feature::Triangle(t)) => {
            let p = pos(*v);
            let tp = t.map(&pos);
            let (q, d) = point_triangle(&p, [&tp[0], &tp[1], &tp[2]]);
            Some((p, q, d))
        }
        (Feature::Triangle(t), Feature::Vertex(v)) => {
            let q = pos(*v);
            let tp = t.map(&pos);
            let (p, d) = point_triangle(&q, [&tp[0], &tp[1], &tp[2]]);
            Some((p, q, d))
        }
        (Feature::Edge([a0, a1]), Feature::Edge([b0, b1])) => {
            Some(segment_segment(&pos(*a0), &pos(*a1), &pos(*b0), &pos(*b1)))
        }
        _ => None,
    }
}

/// Exact squared distance and closest points between disjoint features.
pub fn feature_distance<'a>(
    a: &Feature,
    b: &Feature,
    pos: impl Fn(usize) -> &'a ExactPoint,
) -> Result<FeatureDistance, GeomError> {
    if a.shares_vertex(b) {
        return Err(GeomError::SharedVertex);
    }
    let (p, q, dist2) =
        closest_points::<Rational>(a, b, |v| pos(v).clone()).ok_or(GeomError::UnsupportedPair)?;
    Ok(FeatureDistance { dist2, p, q })
}

/// Orthogonal projection of v onto segment th with its squared distance,
/// when the projection falls strictly inside the segment.
pub fn vertex_edge_projection(
    v: &ExactPoint,
    t: &ExactPoint,
    h: &ExactPoint,
) -> Result<Option<(ExactPoint, Rational)>, GeomError> {
    if t == h {
        return Err(GeomError::DegenerateEdge);
    }
    let th = h.sub(t);
    let num = v.sub(t).dot(&th);
    let den = th.norm2();
    use num_traits::Zero;
    if num <= Rational::zero() || num >= den {
        return Ok(None);
    }
    let p = t.add(&th.scale(&(num / den)));
    let d2 = v.sub(&p).norm2();
    Ok(Some((p, d2)))
}
