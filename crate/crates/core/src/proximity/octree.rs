use serde::Serialize;

use crate::geom::IVec3;
use crate::mesh::Mesh;

/// Axis-aligned box in binary64; built from interval enclosures so it always
/// contains the exact geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            lo: [f64::INFINITY; 3],
            hi: [f64::NEG_INFINITY; 3],
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|k| self.lo[k] > self.hi[k])
    }

    pub fn union_point(mut self, p: &IVec3) -> Self {
        for (k, c) in p.comps().into_iter().enumerate() {
            self.lo[k] = self.lo[k].min(c.lo);
            self.hi[k] = self.hi[k].max(c.hi);
        }
        self
    }

    pub fn union(mut self, o: &Aabb) -> Self {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(o.lo[k]);
            self.hi[k] = self.hi[k].max(o.hi[k]);
        }
        self
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.lo[k] <= o.hi[k] && o.lo[k] <= self.hi[k])
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        (0..3).all(|k| self.lo[k] <= o.lo[k] && o.hi[k] <= self.hi[k])
    }

    /// Grown by at least `r` on every side.
    pub fn expanded(&self, r: f64) -> Self {
        let mut b = *self;
        for k in 0..3 {
            b.lo[k] = (b.lo[k] - r).next_down();
            b.hi[k] = (b.hi[k] + r).next_up();
        }
        b
    }

    pub fn extent(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    fn octant(&self, i: usize) -> Aabb {
        let mut b = *self;
        for k in 0..3 {
            let mid = 0.5 * self.lo[k] + 0.5 * self.hi[k];
            if i >> k & 1 == 0 {
                b.hi[k] = mid;
            } else {
                b.lo[k] = mid;
            }
        }
        b
    }
}

#[derive(Clone, Debug)]
enum Node {
    Leaf(Vec<usize>),
    Inner(Box<[usize; 8]>),
}

/// Loose octree over triangle bounding boxes. An item is stored in every
/// leaf its box overlaps; boxes reaching outside the root cube go to an
/// overflow list that every query scans.
#[derive(Clone, Debug)]
pub struct Octree {
    root: Aabb,
    nodes: Vec<Node>,
    boxes: Vec<Option<Aabb>>,
    overflow: Vec<usize>,
    max_leaf: usize,
    max_depth: usize,
    len: usize,
}

pub const DEFAULT_MAX_LEAF: usize = 16;
pub const DEFAULT_MAX_DEPTH: usize = 20;

pub fn build_octree(m: &Mesh, max_leaf: usize, max_depth: usize) -> Octree {
    let items: Vec<(usize, Aabb)> = m.triangles().map(|(i, _)| (i, m.triangle_bbox(i))).collect();
    Octree::build(&items, max_leaf, max_depth)
}

impl Octree {
    pub fn build(items: &[(usize, Aabb)], max_leaf: usize, max_depth: usize) -> Self {
        let mut all = Aabb::empty();
        for (_, b) in items {
            all = all.union(b);
        }
        if all.is_empty() {
            all = Aabb { lo: [0.0; 3], hi: [1.0; 3] };
        }
        // Cube with some slack so small vertex motions stay inside.
        let size = (0..3).map(|k| all.extent(k)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let half = 0.5 * size * 1.125;
        let mut root = Aabb::empty();
        for k in 0..3 {
            let c = 0.5 * all.lo[k] + 0.5 * all.hi[k];
            root.lo[k] = c - half;
            root.hi[k] = c + half;
        }
        let root = root.expanded(0.0);
        let cap = items.iter().map(|(i, _)| i + 1).max().unwrap_or(0);
        let mut t = Octree {
            root,
            nodes: vec![Node::Leaf(Vec::new())],
            boxes: vec![None; cap],
            overflow: Vec::new(),
            max_leaf: max_leaf.max(1),
            max_depth,
            len: 0,
        };
        for (i, b) in items {
            t.insert(*i, *b);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn root(&self) -> Aabb {
        self.root
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Octree, n: usize) -> usize {
            match &t.nodes[n] {
                Node::Leaf(_) => 0,
                Node::Inner(c) => 1 + c.iter().map(|&k| go(t, k)).max().unwrap(),
            }
        }
        go(self, 0)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn insert(&mut self, id: usize, b: Aabb) {
        if id >= self.boxes.len() {
            self.boxes.resize(id + 1, None);
        }
        assert!(self.boxes[id].is_none(), "triangle {id} already indexed");
        self.boxes[id] = Some(b);
        self.len += 1;
        if !self.root.contains(&b) {
            self.overflow.push(id);
            return;
        }
        self.insert_at(0, self.root, 0, id, &b);
    }

    fn insert_at(&mut self, node: usize, cell: Aabb, depth: usize, id: usize, b: &Aabb) {
        match &mut self.nodes[node] {
            Node::Inner(children) => {
                let children = **children;
                for (i, &c) in children.iter().enumerate() {
                    let cc = cell.octant(i);
                    if cc.overlaps(b) {
                        self.insert_at(c, cc, depth + 1, id, b);
                    }
                }
            }
            Node::Leaf(items) => {
                items.push(id);
                if items.len() > self.max_leaf && depth < self.max_depth {
                    self.try_split(node, cell);
                }
            }
        }
    }

    /// Splits a leaf only when every child would hold fewer items than the
    /// parent; clustered boxes therefore cannot force runaway subdivision.
    fn try_split(&mut self, node: usize, cell: Aabb) {
        let items = match &self.nodes[node] {
            Node::Leaf(items) => items.clone(),
            Node::Inner(_) => return,
        };
        let mut buckets: [Vec<usize>; 8] = Default::default();
        for &id in &items {
            let b = self.boxes[id].unwrap();
            for (i, bucket) in buckets.iter_mut().enumerate() {
                if cell.octant(i).overlaps(&b) {
                    bucket.push(id);
                }
            }
        }
        if buckets.iter().any(|b| b.len() == items.len()) {
            return;
        }
        let first = self.nodes.len();
        for b in buckets {
            self.nodes.push(Node::Leaf(b));
        }
        let children: [usize; 8] = std::array::from_fn(|i| first + i);
        self.nodes[node] = Node::Inner(Box::new(children));
    }

    pub fn remove(&mut self, id: usize) {
        let b = self.boxes.get_mut(id).and_then(|b| b.take()).expect("triangle not indexed");
        self.len -= 1;
        if let Some(pos) = self.overflow.iter().position(|&x| x == id) {
            self.overflow.swap_remove(pos);
            return;
        }
        self.remove_at(0, self.root, id, &b);
    }

    fn remove_at(&mut self, node: usize, cell: Aabb, id: usize, b: &Aabb) {
        match &mut self.nodes[node] {
            Node::Inner(children) => {
                let children = **children;
                for (i, &c) in children.iter().enumerate() {
                    let cc = cell.octant(i);
                    if cc.overlaps(b) {
                        self.remove_at(c, cc, id, b);
                    }
                }
            }
            Node::Leaf(items) => items.retain(|&x| x != id),
        }
    }

    /// Re-indexes a triangle whose box changed.
    pub fn update(&mut self, id: usize, b: Aabb) {
        if self.boxes.get(id).copied().flatten().is_some() {
            self.remove(id);
        }
        self.insert(id, b);
    }

    pub fn contains_item(&self, id: usize) -> bool {
        self.boxes.get(id).copied().flatten().is_some()
    }

    pub fn item_box(&self, id: usize) -> Option<Aabb> {
        self.boxes.get(id).copied().flatten()
    }

    /// Whether many items have drifted outside the root cube.
    pub fn needs_rebuild(&self) -> bool {
        self.overflow.len() > 64.max(self.len / 8)
    }

    pub fn rebuilt(&self) -> Octree {
        let items: Vec<(usize, Aabb)> =
            self.boxes.iter().enumerate().filter_map(|(i, b)| b.map(|b| (i, b))).collect();
        Octree::build(&items, self.max_leaf, self.max_depth)
    }

    /// Ids whose stored box overlaps `q`, sorted and unique.
    pub fn query(&self, q: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        if self.root.overlaps(q) {
            self.query_at(0, self.root, q, &mut out);
        }
        out.extend(self.overflow.iter().copied());
        out.sort_unstable();
        out.dedup();
        out.retain(|&id| self.boxes[id].is_some_and(|b| b.overlaps(q)));
        out
    }

    fn query_at(&self, node: usize, cell: Aabb, q: &Aabb, out: &mut Vec<usize>) {
        match &self.nodes[node] {
            Node::Leaf(items) => out.extend_from_slice(items),
            Node::Inner(children) => {
                for (i, &c) in children.iter().enumerate() {
                    let cc = cell.octant(i);
                    if cc.overlaps(q) {
                        self.query_at(c, cc, q, out);
                    }
                }
            }
        }
    }
}

/// Triangles whose boxes come within `radius` of `region`.
pub fn pairs_near(index: &Octree, region: &Aabb, radius: f64) -> Vec<usize> {
    index.query(&region.expanded(radius))
}
