use rayon::prelude::*;

use crate::geom::{
    closest_frame, closest_points, feature_distance, rat_interval, ExactPoint, Feature, Frame, IVec3,
    Interval, PointSource, Rational, Vec3f,
};
use crate::mesh::Mesh;

use super::octree::{Aabb, Octree};

/// Two disjoint features closer than some working threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePair {
    pub a: Feature,
    pub b: Feature,
    pub dist2: Rational,
    pub p: ExactPoint,
    pub q: ExactPoint,
    /// `None` only when the features touch.
    pub frame: Option<Frame>,
}

impl FeaturePair {
    pub fn key(&self) -> (Feature, Feature) {
        (self.a, self.b)
    }

    /// Both features' vertex ids.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.a.ids().iter().chain(self.b.ids()).copied()
    }

    pub fn dist_f64(&self) -> f64 {
        rat_interval(&self.dist2).mid().sqrt()
    }
}

/// Canonical unordered key: vertex before triangle, smaller edge first.
pub fn pair_key(a: Feature, b: Feature) -> (Feature, Feature) {
    let (a, b) = (a.canonical(), b.canonical());
    match (a, b) {
        (Feature::Triangle(_), Feature::Vertex(_)) => (b, a),
        (Feature::Edge(_), Feature::Edge(_)) if a > b => (b, a),
        _ => (a, b),
    }
}

/// The disjoint vertex–triangle and edge–edge sub-pairs of two triangles.
pub fn sub_pairs(t1: [usize; 3], t2: [usize; 3]) -> Vec<(Feature, Feature)> {
    let mut out = Vec::with_capacity(15);
    for (x, y) in [(t1, t2), (t2, t1)] {
        for v in x {
            if !y.contains(&v) {
                out.push(pair_key(Feature::Vertex(v), Feature::Triangle(y)));
            }
        }
    }
    for i in 0..3 {
        let e = [t1[i], t1[(i + 1) % 3]];
        for j in 0..3 {
            let f = [t2[j], t2[(j + 1) % 3]];
            if !e.iter().any(|v| f.contains(v)) {
                out.push(pair_key(Feature::Edge(e), Feature::Edge(f)));
            }
        }
    }
    out
}

fn feature_box(f: &Feature, pts: &(impl PointSource + ?Sized)) -> Aabb {
    f.ids().iter().fold(Aabb::empty(), |b, &v| b.union_point(pts.approx(v)))
}

/// Rigorous test that the pair is at least `thr` apart, using cheap
/// floating-point bounds. `false` means "unknown", not "close".
pub fn provably_far(a: &Feature, b: &Feature, pts: &(impl PointSource + ?Sized), thr: f64) -> bool {
    let (ba, bb) = (feature_box(a, pts), feature_box(b, pts));
    for k in 0..3 {
        let gap = (bb.lo[k] - ba.hi[k]).max(ba.lo[k] - bb.hi[k]);
        if gap.next_down() > thr {
            return true;
        }
    }
    // Separating-plane bound along the approximate closest direction.
    let mid = |v: usize| -> Vec3f { pts.approx(v).map(|c| c.mid()) };
    let Some((p, q, _)) = closest_points::<f64>(a, b, mid) else {
        return false;
    };
    let n = q.sub(&p);
    if !(n.max_abs() > 0.0) || !n.max_abs().is_finite() {
        return false;
    }
    let ni: IVec3 = n.map(|c| Interval::point(*c));
    let proj = |v: usize| pts.approx(v).dot(&ni);
    let amax = a.ids().iter().map(|&v| proj(v).hi).fold(f64::NEG_INFINITY, f64::max);
    let bmin = b.ids().iter().map(|&v| proj(v).lo).fold(f64::INFINITY, f64::min);
    let gap = (bmin - amax).next_down();
    if !(gap > 0.0) {
        return false;
    }
    let len = ni.norm2().sqrt_upper();
    (gap / len).next_down() > thr
}

fn exact_pair(m: &Mesh, a: Feature, b: Feature) -> FeaturePair {
    let r = feature_distance(&a, &b, |v| m.point(v)).expect("disjoint supported pair");
    let frame = closest_frame(&r.p, &r.q).ok();
    FeaturePair {
        a,
        b,
        dist2: r.dist2,
        p: r.p,
        q: r.q,
        frame,
    }
}

/// Disjoint vertex–triangle and edge–edge pairs with squared distance below
/// `threshold2`, sorted by key.
pub fn close_pairs(m: &Mesh, index: &Octree, threshold2: &Rational) -> Vec<FeaturePair> {
    let tris: Vec<(usize, [usize; 3])> = m.triangles().collect();
    close_pairs_for(m, index, threshold2, &tris)
}

/// Like [`close_pairs`], restricted to pairs with a feature on one of `tris`.
pub fn close_pairs_for(
    m: &Mesh,
    index: &Octree,
    threshold2: &Rational,
    tris: &[(usize, [usize; 3])],
) -> Vec<FeaturePair> {
    let thr = rat_interval(threshold2).sqrt_upper();
    let mut keys: Vec<(Feature, Feature)> = tris
        .par_iter()
        .flat_map_iter(|&(i, ti)| {
            let b = m.triangle_bbox(i).expanded(thr);
            index.query(&b).into_iter().flat_map(move |j| {
                let tj = m.triangle(j).expect("indexed triangle is live");
                let mut v = if j == i { Vec::new() } else { sub_pairs(ti, tj) };
                v.retain(|(a, b)| !provably_far(a, b, m, thr));
                v
            })
        })
        .collect();
    keys.par_sort_unstable();
    keys.dedup();
    let mut out: Vec<FeaturePair> = keys
        .into_par_iter()
        .filter_map(|(a, b)| {
            let fp = exact_pair(m, a, b);
            (fp.dist2 < *threshold2).then_some(fp)
        })
        .collect();
    out.sort_by_key(|x| x.key());
    out
}

/// Brute-force enumeration over all disjoint pairs; reference for tests.
pub fn close_pairs_exhaustive(m: &Mesh, threshold2: &Rational) -> Vec<FeaturePair> {
    let mut keys: Vec<(Feature, Feature)> = crate::mesh::all_feature_pairs(m)
        .into_iter()
        .map(|(a, b)| pair_key(a, b))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let mut out: Vec<FeaturePair> = keys
        .into_par_iter()
        .filter_map(|(a, b)| {
            let fp = exact_pair(m, a, b);
            (fp.dist2 < *threshold2).then_some(fp)
        })
        .collect();
    out.sort_by_key(|x| x.key());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{parse_rational, rat_from_i64};
    use crate::mesh::build_mesh;
    use crate::proximity::build_octree;

    fn sheets(h: &str) -> Mesh {
        let h = parse_rational(h).unwrap();
        let z = rat_from_i64(0);
        let pt = |x: i64, y: i64, z: &Rational| ExactPoint::new(rat_from_i64(x), rat_from_i64(y), z.clone());
        build_mesh(
            vec![pt(0, 0, &z), pt(1, 0, &z), pt(0, 1, &z), pt(0, 0, &h), pt(1, 0, &h), pt(0, 1, &h)],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap()
    }

    #[test]
    fn far_sheets_have_no_pairs() {
        let m = sheets("3");
        let idx = build_octree(&m, 16, 20);
        assert!(close_pairs(&m, &idx, &rat_from_i64(1)).is_empty());
    }

    #[test]
    fn near_sheets_match_exhaustive_enumeration() {
        let m = sheets("1/2");
        let idx = build_octree(&m, 16, 20);
        let got = close_pairs(&m, &idx, &rat_from_i64(1));
        let want = close_pairs_exhaustive(&m, &rat_from_i64(1));
        assert_eq!(got, want);
        // 6 vertex–triangle pairs (the vertices sit over the other sheet's
        // corners) and the 3 aligned edge pairs plus crossing ones.
        assert_eq!(got.iter().filter(|p| matches!(p.a, Feature::Vertex(_))).count(), 6);
        assert!(got.iter().all(|p| p.dist2 == parse_rational("1/4").unwrap()));
    }

    #[test]
    fn sub_pair_count_for_disjoint_triangles() {
        assert_eq!(sub_pairs([0, 1, 2], [3, 4, 5]).len(), 15);
        // a shared vertex leaves 2 + 2 vertex pairs and 5 disjoint edge pairs
        assert_eq!(sub_pairs([0, 1, 2], [0, 3, 4]).len(), 4 + 5);
    }
}
