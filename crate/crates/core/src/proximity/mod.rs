//! Spatial index over triangles and enumeration of close feature pairs.

mod octree;
mod pairs;

pub use octree::{build_octree, pairs_near, Aabb, Octree, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
pub use pairs::{
    close_pairs, close_pairs_exhaustive, close_pairs_for, pair_key, provably_far, sub_pairs, FeaturePair,
};
