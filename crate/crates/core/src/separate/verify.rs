//! Step verification: no contact during the linear motion, and the minimum
//! separation must grow.
//!
//! Each vertex moves as x + t x′ for t in [0, 1]. A pair is cleared cheaply
//! when a fixed plane separates it at both ends of the motion. Otherwise
//! contact can only happen where the four relevant vertices are coplanar, at
//! the roots of a cubic in t. Sturm counting localizes the roots and a
//! Lipschitz bound on the distance rules out contact near each of them.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::geom::{feature_distance, ExactPoint, Feature, PointSource, Rational, V3};
use crate::proximity::FeaturePair;

use super::poly::{deflate_zero, half, Poly, Sturm};
use super::DisplacementField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    /// Some pair may touch during the motion.
    SweptContact,
    /// The smallest separation over the constrained pairs did not grow.
    NoImprovement,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// Squared minimum separation over the pairs after the step.
    Accept { min_dist2: Option<Rational> },
    Reject(RejectReason),
}

const MAX_DEPTH: usize = 48;

struct Motion<'a, P: ?Sized> {
    pts: &'a P,
    disp: &'a DisplacementField,
}

impl<P: PointSource + ?Sized> Motion<'_, P> {
    fn start(&self, v: usize) -> &ExactPoint {
        self.pts.exact(v)
    }

    fn vel(&self, v: usize) -> ExactPoint {
        self.disp.exact(v).unwrap_or_else(ExactPoint::zero)
    }

    fn at(&self, v: usize, t: &Rational) -> ExactPoint {
        self.start(v).add(&self.vel(v).scale(t))
    }

    fn lin(&self, v: usize) -> V3<Poly> {
        let (p, q) = (self.start(v), self.vel(v));
        V3 {
            x: Poly::linear(p.x.clone(), q.x.clone()),
            y: Poly::linear(p.y.clone(), q.y.clone()),
            z: Poly::linear(p.z.clone(), q.z.clone()),
        }
    }

    fn dist2_at(&self, a: &Feature, b: &Feature, t: &Rational) -> Rational {
        let pos: HashMap<usize, ExactPoint> =
            a.ids().iter().chain(b.ids()).map(|&v| (v, self.at(v, t))).collect();
        feature_distance(a, b, |v| &pos[&v]).expect("disjoint pair").dist2
    }
}

fn psub(a: &V3<Poly>, b: &V3<Poly>) -> V3<Poly> {
    V3 {
        x: a.x.sub(&b.x),
        y: a.y.sub(&b.y),
        z: a.z.sub(&b.z),
    }
}

fn det(a: &V3<Poly>, b: &V3<Poly>, c: &V3<Poly>) -> Poly {
    let cx = b.y.mul(&c.z).sub(&b.z.mul(&c.y));
    let cy = b.z.mul(&c.x).sub(&b.x.mul(&c.z));
    let cz = b.x.mul(&c.y).sub(&b.y.mul(&c.x));
    a.x.mul(&cx).add(&a.y.mul(&cy)).add(&a.z.mul(&cz))
}

/// Plane test: `n·(b−a) > 0` for every vertex combination at t = 0 and 1.
fn plane_separates<P: PointSource + ?Sized>(mo: &Motion<P>, p: &FeaturePair, n: &ExactPoint) -> bool {
    let one = Rational::one();
    for &a in p.a.ids() {
        for &b in p.b.ids() {
            let d0 = mo.start(b).sub(mo.start(a));
            let d1 = mo.at(b, &one).sub(&mo.at(a, &one));
            if !d0.dot(n).is_positive() || !d1.dot(n).is_positive() {
                return false;
            }
        }
    }
    true
}

fn l1(x: &ExactPoint) -> Rational {
    x.x.abs() + x.y.abs() + x.z.abs()
}

/// True when the pair provably stays apart during the motion. `lm` are the
/// rotation values the LP chose for the pair's frame.
pub fn swept_clear(
    pts: &(impl PointSource + ?Sized),
    disp: &DisplacementField,
    p: &FeaturePair,
    lm: (f64, f64),
) -> bool {
    let mo = Motion { pts, disp };
    if let Some(f) = &p.frame {
        let u = ExactPoint::from_f64(f.u.x, f.u.y, f.u.z);
        if plane_separates(&mo, p, &u) {
            return true;
        }
        if lm != (0.0, 0.0) {
            let n = f.u.add(&f.v.scale(&lm.0)).add(&f.w.scale(&lm.1));
            if plane_separates(&mo, p, &ExactPoint::from_f64(n.x, n.y, n.z)) {
                return true;
            }
        }
    }
    // Lipschitz constant of the distance: the largest relative speed.
    let mut lip = Rational::zero();
    for &a in p.a.ids() {
        for &b in p.b.ids() {
            lip = lip.max(l1(&mo.vel(b).sub(&mo.vel(a))));
        }
    }
    if lip.is_zero() {
        return !p.dist2.is_zero();
    }
    let cubic = match (p.a, p.b) {
        (Feature::Vertex(a), Feature::Triangle(t)) => {
            let a = mo.lin(a);
            det(&psub(&mo.lin(t[0]), &a), &psub(&mo.lin(t[1]), &a), &psub(&mo.lin(t[2]), &a))
        }
        (Feature::Edge(e), Feature::Edge(f)) => {
            let a = mo.lin(e[0]);
            det(&psub(&mo.lin(e[1]), &a), &psub(&mo.lin(f[0]), &a), &psub(&mo.lin(f[1]), &a))
        }
        _ => return false,
    };
    let cubic = deflate_zero(&cubic);
    let sturm = (!cubic.is_zero()).then(|| Sturm::new(&cubic.squarefree()));
    let mut stack = vec![(Rational::zero(), Rational::one(), 0usize)];
    while let Some((lo, hi, depth)) = stack.pop() {
        if let Some(s) = &sturm {
            if s.count(&lo, &hi) == 0 {
                continue;
            }
        }
        let mid = (&lo + &hi) * half();
        let reach = &lip * (&hi - &lo) * half();
        if mo.dist2_at(&p.a, &p.b, &mid) > &reach * &reach {
            continue;
        }
        if depth >= MAX_DEPTH {
            return false;
        }
        stack.push((mid.clone(), hi, depth + 1));
        stack.push((lo, mid, depth + 1));
    }
    true
}

/// Accepts a step when no constrained pair can touch during the motion and
/// the minimum separation over the pairs strictly grows. `lm[i]` holds the
/// LP's rotation values for `pairs[i]`, or is empty.
pub fn verify_step(
    pts: &(impl PointSource + Sync + ?Sized),
    disp: &DisplacementField,
    pairs: &[FeaturePair],
    lm: &[(f64, f64)],
) -> Verdict {
    let rot = |i: usize| lm.get(i).copied().unwrap_or((0.0, 0.0));
    let clear = pairs
        .par_iter()
        .enumerate()
        .all(|(i, p)| swept_clear(pts, disp, p, rot(i)));
    if !clear {
        return Verdict::Reject(RejectReason::SweptContact);
    }
    let one = Rational::one();
    let mo = Motion { pts, disp };
    let after: Option<Rational> = pairs
        .par_iter()
        .map(|p| mo.dist2_at(&p.a, &p.b, &one))
        .min();
    let before = pairs.iter().map(|p| &p.dist2).min();
    match (&after, before) {
        (Some(x), Some(y)) if x <= y => Verdict::Reject(RejectReason::NoImprovement),
        _ => Verdict::Accept { min_dist2: after },
    }
}
