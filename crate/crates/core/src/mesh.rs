//! Indexed triangle mesh with adjacency and topology bookkeeping.
//!
//! Vertex and triangle ids are stable across edits: removal leaves a
//! tombstone, and [`Mesh::compact`] renumbers when a dense mesh is needed.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geom::{
    feature_distance, triangles_conflict, ExactPoint, Feature, IVec3, PointSource, Rational, Scalar,
};
use crate::proximity::{FeaturePair, Octree};

pub type Edge = (usize, usize);

pub fn edge_key(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { tri: usize, index: usize, count: usize },
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("triangle {0} duplicates an earlier triangle")]
    DuplicateTriangle(usize),
}

#[derive(Clone, Debug)]
pub struct Mesh {
    points: Vec<ExactPoint>,
    approx: Vec<IVec3>,
    alive: Vec<bool>,
    tris: Vec<Option<[usize; 3]>>,
    edges: BTreeMap<Edge, Vec<usize>>,
    vtris: Vec<Vec<usize>>,
}

impl PointSource for Mesh {
    fn exact(&self, v: usize) -> &ExactPoint {
        &self.points[v]
    }
    fn approx(&self, v: usize) -> &IVec3 {
        &self.approx[v]
    }
}

pub fn is_degenerate(a: &ExactPoint, b: &ExactPoint, c: &ExactPoint) -> bool {
    let (ia, ib, ic) = (a.interval(), b.interval(), c.interval());
    if ib.sub(&ia).cross(&ic.sub(&ia)).is_zero() == Some(false) {
        return false;
    }
    b.sub(a).cross(&c.sub(a)).is_zero() == Some(true)
}

pub fn build_mesh(points: Vec<ExactPoint>, tris: Vec<[usize; 3]>) -> Result<Mesh, MeshError> {
    let n = points.len();
    let mut seen = HashSet::with_capacity(tris.len());
    for (i, t) in tris.iter().enumerate() {
        for &v in t {
            if v >= n {
                return Err(MeshError::IndexOutOfRange { tri: i, index: v, count: n });
            }
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(MeshError::DegenerateTriangle(i));
        }
        let mut key = *t;
        key.sort_unstable();
        if !seen.insert(key) {
            return Err(MeshError::DuplicateTriangle(i));
        }
    }
    let bad = tris
        .par_iter()
        .position_first(|t| is_degenerate(&points[t[0]], &points[t[1]], &points[t[2]]));
    if let Some(i) = bad {
        return Err(MeshError::DegenerateTriangle(i));
    }
    let approx = points.par_iter().map(|p| p.interval()).collect();
    let mut m = Mesh {
        alive: vec![true; n],
        approx,
        points,
        tris: Vec::with_capacity(tris.len()),
        edges: BTreeMap::new(),
        vtris: vec![Vec::new(); n],
    };
    for t in tris {
        m.add_triangle(t);
    }
    Ok(m)
}

impl Mesh {
    pub fn empty() -> Self {
        Self {
            points: Vec::new(),
            approx: Vec::new(),
            alive: Vec::new(),
            tris: Vec::new(),
            edges: BTreeMap::new(),
            vtris: Vec::new(),
        }
    }

    /// Number of vertex ids ever allocated, dead ones included.
    pub fn vertex_capacity(&self) -> usize {
        self.points.len()
    }

    pub fn triangle_capacity(&self) -> usize {
        self.tris.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.iter().filter(|t| t.is_some()).count()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// (V, E, F) with V counting live vertices.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.num_vertices(), self.num_edges(), self.num_triangles())
    }

    pub fn is_alive(&self, v: usize) -> bool {
        self.alive[v]
    }

    pub fn point(&self, v: usize) -> &ExactPoint {
        &self.points[v]
    }

    pub fn points(&self) -> &[ExactPoint] {
        &self.points
    }

    pub fn approx_points(&self) -> &[IVec3] {
        &self.approx
    }

    pub fn set_point(&mut self, v: usize, p: ExactPoint) {
        self.approx[v] = p.interval();
        self.points[v] = p;
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.points.len()).filter(|&v| self.alive[v])
    }

    pub fn triangle(&self, t: usize) -> Option<[usize; 3]> {
        self.tris.get(t).copied().flatten()
    }

    pub fn triangles(&self) -> impl Iterator<Item = (usize, [usize; 3])> + '_ {
        self.tris.iter().enumerate().filter_map(|(i, t)| t.map(|t| (i, t)))
    }

    pub fn triangle_points(&self, t: usize) -> [&ExactPoint; 3] {
        let [a, b, c] = self.tris[t].expect("live triangle");
        [&self.points[a], &self.points[b], &self.points[c]]
    }

    pub fn edges(&self) -> impl Iterator<Item = (Edge, &[usize])> + '_ {
        self.edges.iter().map(|(e, ts)| (*e, ts.as_slice()))
    }

    pub fn edge_triangles(&self, a: usize, b: usize) -> &[usize] {
        self.edges.get(&edge_key(a, b)).map_or(&[], |v| v.as_slice())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&edge_key(a, b))
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vtris[v]
    }

    /// Vertices joined to `v` by an edge, sorted.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vtris[v]
            .iter()
            .flat_map(|&t| self.tris[t].unwrap())
            .filter(|&x| x != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn find_triangle(&self, t: [usize; 3]) -> Option<usize> {
        let mut key = t;
        key.sort_unstable();
        self.vtris[t[0]].iter().copied().find(|&i| {
            let mut k = self.tris[i].unwrap();
            k.sort_unstable();
            k == key
        })
    }

    pub fn add_vertex(&mut self, p: ExactPoint) -> usize {
        self.approx.push(p.interval());
        self.points.push(p);
        self.alive.push(true);
        self.vtris.push(Vec::new());
        self.points.len() - 1
    }

    /// Marks an unreferenced vertex dead.
    pub fn kill_vertex(&mut self, v: usize) {
        debug_assert!(self.vtris[v].is_empty(), "vertex {v} still referenced");
        self.alive[v] = false;
    }

    pub fn add_triangle(&mut self, t: [usize; 3]) -> usize {
        let id = self.tris.len();
        self.tris.push(Some(t));
        for i in 0..3 {
            self.edges.entry(edge_key(t[i], t[(i + 1) % 3])).or_default().push(id);
            self.vtris[t[i]].push(id);
        }
        id
    }

    pub fn remove_triangle(&mut self, id: usize) -> [usize; 3] {
        let t = self.tris[id].take().expect("removing a dead triangle");
        for i in 0..3 {
            let k = edge_key(t[i], t[(i + 1) % 3]);
            let list = self.edges.get_mut(&k).unwrap();
            list.retain(|&x| x != id);
            if list.is_empty() {
                self.edges.remove(&k);
            }
            self.vtris[t[i]].retain(|&x| x != id);
        }
        t
    }

    /// Largest exact coordinate magnitude over live vertices.
    pub fn max_abs_coord(&self) -> Rational {
        use num_traits::Signed;
        let mut m = Rational::zero();
        for v in self.vertices() {
            for c in self.points[v].comps() {
                let a = c.abs();
                if a > m {
                    m = a;
                }
            }
        }
        m
    }

    /// Dense copy with dead vertices and triangles dropped, order preserved.
    /// Also returns the old-to-new vertex map.
    pub fn compact(&self) -> (Mesh, Vec<Option<usize>>) {
        let mut map = vec![None; self.points.len()];
        let mut pts = Vec::new();
        for v in self.vertices() {
            map[v] = Some(pts.len());
            pts.push(self.points[v].clone());
        }
        let tris: Vec<[usize; 3]> = self.triangles().map(|(_, t)| t.map(|v| map[v].unwrap())).collect();
        let approx = pts.iter().map(|p| p.interval()).collect();
        let mut m = Mesh {
            alive: vec![true; pts.len()],
            approx,
            vtris: vec![Vec::new(); pts.len()],
            points: pts,
            tris: Vec::with_capacity(tris.len()),
            edges: BTreeMap::new(),
        };
        for t in tris {
            m.add_triangle(t);
        }
        (m, map)
    }

    /// Rebuilds adjacency from the triangle list and compares; used by audits.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut edges: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        let mut vtris = vec![Vec::new(); self.points.len()];
        let mut seen = HashSet::new();
        for (id, t) in self.triangles() {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(format!("triangle {id} repeats a vertex"));
            }
            let mut key = t;
            key.sort_unstable();
            if !seen.insert(key) {
                return Err(format!("triangle {id} is a duplicate"));
            }
            for i in 0..3 {
                if !self.alive[t[i]] {
                    return Err(format!("triangle {id} uses dead vertex {}", t[i]));
                }
                edges.entry(edge_key(t[i], t[(i + 1) % 3])).or_default().push(id);
                vtris[t[i]].push(id);
            }
        }
        let norm = |m: &BTreeMap<Edge, Vec<usize>>| -> BTreeMap<Edge, Vec<usize>> {
            m.iter()
                .map(|(k, v)| {
                    let mut v = v.clone();
                    v.sort_unstable();
                    (*k, v)
                })
                .collect()
        };
        if norm(&edges) != norm(&self.edges) {
            return Err("edge table disagrees with triangle list".into());
        }
        for (v, list) in vtris.iter().enumerate() {
            let mut a = list.clone();
            let mut b = self.vtris[v].clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(format!("incidence list of vertex {v} is stale"));
            }
        }
        for v in 0..self.points.len() {
            if self.approx[v] != self.points[v].interval() {
                return Err(format!("cached approximation of vertex {v} is stale"));
            }
        }
        Ok(())
    }

    /// Triangles grouped into edge-connected components, each sorted, in
    /// order of their smallest triangle id.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.tris.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for ts in self.edges.values() {
            for w in ts.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (id, _) in self.triangles() {
            let r = find(&mut parent, id);
            groups.entry(r).or_default().push(id);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|c| c[0]);
        out
    }

    pub fn component_signature(&self, tris: &[usize]) -> ComponentSignature {
        let mut verts = BTreeSet::new();
        let mut edges: BTreeMap<Edge, usize> = BTreeMap::new();
        for &t in tris {
            let t = self.tris[t].unwrap();
            for i in 0..3 {
                verts.insert(t[i]);
                *edges.entry(edge_key(t[i], t[(i + 1) % 3])).or_default() += 1;
            }
        }
        let boundary: Vec<Edge> = edges.iter().filter(|(_, c)| **c == 1).map(|(e, _)| *e).collect();
        ComponentSignature {
            vertices: verts.len(),
            edges: edges.len(),
            triangles: tris.len(),
            euler: verts.len() as i64 - edges.len() as i64 + tris.len() as i64,
            boundary_loops: count_graph_components(&boundary),
        }
    }

    /// Bounding box of the given triangles, in binary64 and conservative.
    pub fn bbox_of(&self, tris: &[usize]) -> crate::proximity::Aabb {
        let mut b = crate::proximity::Aabb::empty();
        for &t in tris {
            for v in self.tris[t].unwrap() {
                b = b.union_point(&self.approx[v]);
            }
        }
        b
    }

    pub fn triangle_bbox(&self, t: usize) -> crate::proximity::Aabb {
        self.bbox_of(&[t])
    }
}

/// Mesh positions with a few vertices moved, for testing edits before
/// committing them.
pub struct PositionOverlay<'a> {
    base: &'a Mesh,
    moved: HashMap<usize, (ExactPoint, IVec3)>,
}

impl<'a> PositionOverlay<'a> {
    pub fn new(base: &'a Mesh) -> Self {
        Self {
            base,
            moved: HashMap::new(),
        }
    }

    pub fn set(&mut self, v: usize, p: ExactPoint) {
        let i = p.interval();
        self.moved.insert(v, (p, i));
    }

    pub fn mesh(&self) -> &Mesh {
        self.base
    }

    pub fn bbox(&self, t: [usize; 3]) -> crate::proximity::Aabb {
        t.iter()
            .fold(crate::proximity::Aabb::empty(), |b, &v| b.union_point(self.approx(v)))
    }
}

impl PointSource for PositionOverlay<'_> {
    fn exact(&self, v: usize) -> &ExactPoint {
        self.moved.get(&v).map_or_else(|| self.base.point(v), |m| &m.0)
    }
    fn approx(&self, v: usize) -> &IVec3 {
        self.moved.get(&v).map_or_else(|| &self.base.approx[v], |m| &m.1)
    }
}

fn count_graph_components(edges: &[Edge]) -> usize {
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in edges {
        let n = index.len();
        index.entry(a).or_insert(n);
        let n = index.len();
        index.entry(b).or_insert(n);
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut comps = index.len();
    for &(a, b) in edges {
        let (x, y) = (find(&mut parent, index[&a]), find(&mut parent, index[&b]));
        if x != y {
            parent[x] = y;
            comps -= 1;
        }
    }
    comps
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ComponentSignature {
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub euler: i64,
    pub boundary_loops: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TopologySignature {
    /// Per-component signatures, sorted.
    pub components: Vec<ComponentSignature>,
    pub component_count: usize,
}

impl TopologySignature {
    /// Multiset of (χ, boundary loops): the part edits must preserve.
    pub fn intrinsic(&self) -> Vec<(i64, usize)> {
        let mut v: Vec<_> = self.components.iter().map(|c| (c.euler, c.boundary_loops)).collect();
        v.sort_unstable();
        v
    }
}

pub fn topology_signature(m: &Mesh) -> TopologySignature {
    let mut components: Vec<ComponentSignature> =
        m.components().iter().map(|c| m.component_signature(c)).collect();
    components.sort();
    TopologySignature {
        component_count: components.len(),
        components,
    }
}

/// Link of `t` as an ordered cycle when the star of `t` is a closed disk.
pub fn vertex_star_boundary(m: &Mesh, t: usize) -> Option<Vec<usize>> {
    let star = m.vertex_triangles(t);
    if star.len() < 3 {
        return None;
    }
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &id in star {
        let tri = m.triangle(id).unwrap();
        let i = tri.iter().position(|&v| v == t).unwrap();
        let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    if adj.len() != star.len() || adj.values().any(|n| n.len() != 2) {
        return None;
    }
    let start = *adj.keys().next().unwrap();
    let mut cycle = vec![start];
    let mut prev = start;
    let mut cur = adj[&start][0];
    while cur != start {
        cycle.push(cur);
        let n = &adj[&cur];
        let next = if n[0] == prev { n[1] } else { n[0] };
        prev = cur;
        cur = next;
        if cycle.len() > adj.len() {
            return None;
        }
    }
    if cycle.len() != adj.len() {
        return None;
    }
    Some(cycle)
}

/// Smallest squared distance over the given pairs; `None` stands for +∞.
pub fn min_separation(pairs: &[FeaturePair]) -> Option<Rational> {
    pairs.iter().map(|p| &p.dist2).min().cloned()
}

/// All disjoint vertex–triangle and edge–edge pairs of the mesh.
pub fn all_feature_pairs(m: &Mesh) -> Vec<(Feature, Feature)> {
    let verts: Vec<usize> = m.vertices().filter(|&v| !m.vertex_triangles(v).is_empty()).collect();
    let tris: Vec<[usize; 3]> = m.triangles().map(|(_, t)| t).collect();
    let edges: Vec<Edge> = m.edges().map(|(e, _)| e).collect();
    let mut out = Vec::new();
    for &v in &verts {
        for t in &tris {
            if !t.contains(&v) {
                out.push((Feature::Vertex(v), Feature::Triangle(*t)));
            }
        }
    }
    for (i, a) in edges.iter().enumerate() {
        for b in &edges[i + 1..] {
            if a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1 {
                out.push((Feature::Edge([a.0, a.1]), Feature::Edge([b.0, b.1])));
            }
        }
    }
    out
}

/// Exhaustive minimum squared separation; quadratic, meant for small meshes.
pub fn min_separation_exhaustive(m: &Mesh) -> Option<Rational> {
    all_feature_pairs(m)
        .par_iter()
        .map(|(a, b)| feature_distance(a, b, |v| m.point(v)).unwrap().dist2)
        .min()
}

/// Pairs of conflicting triangles, sorted.
pub fn find_intersections(m: &Mesh, index: &Octree) -> Vec<(usize, usize)> {
    let ids: Vec<usize> = m.triangles().map(|(i, _)| i).collect();
    let mut out: Vec<(usize, usize)> = ids
        .par_iter()
        .flat_map_iter(|&i| {
            let ti = m.triangle(i).unwrap();
            index
                .query(&m.triangle_bbox(i))
                .into_iter()
                .filter(move |&j| j > i)
                .filter_map(move |j| {
                    let tj = m.triangle(j)?;
                    triangles_conflict(ti, tj, m).then_some((i, j))
                })
        })
        .collect();
    out.sort_unstable();
    out
}

pub fn certify_no_intersections(m: &Mesh, index: &Octree) -> bool {
    find_intersections(m, index).is_empty()
}
