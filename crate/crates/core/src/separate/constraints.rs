//! Linearized separation constraints.
//!
//! For a pair with closest-point frame (u, v, w), each vertex combination
//! (a, b) gives
//!
//! ```text
//! u·(b−a) + u·(b′−a′) + (l v + m w)·(b−a) ≥ s·d   (or ≥ d)
//! ```
//!
//! Everything is divided by d, so displacement columns and the constant
//! term are in units of d.

use std::collections::BTreeMap;

use crate::geom::{exact_dot, rat_approx, rat_from_f64, ExactPoint, Frame, PointSource, Rational, Vec3f};
use crate::proximity::FeaturePair;

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationConstraint {
    /// Index of the feature pair in the list the constraints were built from.
    pub pair: usize,
    /// Vertex on the first feature.
    pub a: usize,
    /// Vertex on the second feature.
    pub b: usize,
    pub u: Vec3f,
    /// u·(b−a)/d
    pub base: f64,
    /// v·(b−a)/d, the coefficient of l
    pub cl: f64,
    /// w·(b−a)/d, the coefficient of m
    pub cm: f64,
    /// Right side is s·d rather than d.
    pub s_variable: bool,
}

fn scaled_dot(dir: &Vec3f, x: &ExactPoint, d: &Rational) -> f64 {
    rat_approx(&(exact_dot(dir, x) / d))
}

/// One constraint per vertex combination of each pair. Pairs without a
/// frame (touching features) are skipped; they cannot be separated by a
/// linear step anyway and the caller rejects such meshes earlier.
pub fn build_constraints(
    pairs: &[FeaturePair],
    pts: &(impl PointSource + ?Sized),
    d: &Rational,
    s_variable: bool,
) -> Vec<SeparationConstraint> {
    let mut out = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let Some(f) = &p.frame else { continue };
        for &a in p.a.ids() {
            for &b in p.b.ids() {
                let ba = pts.exact(b).sub(pts.exact(a));
                out.push(SeparationConstraint {
                    pair: i,
                    a,
                    b,
                    u: f.u,
                    base: scaled_dot(&f.u, &ba, d),
                    cl: scaled_dot(&f.v, &ba, d),
                    cm: scaled_dot(&f.w, &ba, d),
                    s_variable,
                });
            }
        }
    }
    out
}

/// Exact left side, in units of d, for binary64 displacements, rotation
/// values `l`, `m` and the pair's frame.
pub fn exact_lhs(
    c: &SeparationConstraint,
    frame: &Frame,
    pts: &(impl PointSource + ?Sized),
    disp: &BTreeMap<usize, Vec3f>,
    l: f64,
    m: f64,
    d: &Rational,
) -> Rational {
    let ba = pts.exact(c.b).sub(pts.exact(c.a));
    let zero = Vec3f::new(0.0, 0.0, 0.0);
    let da = disp.get(&c.a).unwrap_or(&zero);
    let db = disp.get(&c.b).unwrap_or(&zero);
    let rel = ExactPoint::from_f64(db.x, db.y, db.z).sub(&ExactPoint::from_f64(da.x, da.y, da.z));
    let mut s = exact_dot(&frame.u, &ba.add(&rel));
    if l != 0.0 {
        s += rat_from_f64(l) * exact_dot(&frame.v, &ba);
    }
    if m != 0.0 {
        s += rat_from_f64(m) * exact_dot(&frame.w, &ba);
    }
    s / d
}

/// Groups pairs that share a vertex. Returns the pair indices of each group,
/// groups ordered by their smallest pair index.
pub fn clusters(pairs: &[FeaturePair]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..pairs.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        for v in p.vertices() {
            match owner.get(&v) {
                Some(&j) => {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
                None => {
                    owner.insert(v, i);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..pairs.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Smallest value of the constant terms: the zero-displacement left side.
pub fn min_base(cs: &[SeparationConstraint]) -> Option<f64> {
    cs.iter().map(|c| c.base).min_by(f64::total_cmp)
}
