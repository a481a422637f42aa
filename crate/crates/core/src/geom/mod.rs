//! Exact geometric kernel: rational points, closest features, frames and
//! intersection predicates.

mod distance;
mod frame;
mod interval;
mod predicates;
mod scalar;
mod vec3;

use thiserror::Error;

pub use distance::{
    closest_points, feature_distance, point_segment, point_triangle, segment_segment,
    vertex_edge_projection, Feature, FeatureDistance,
};
pub use frame::{closest_frame, exact_dot, unit_direction, Frame};
pub use interval::Interval;
pub use predicates::{
    orient3d, orient3d_with, segment_meets_triangle, segment_meets_triangle_with, triangles_conflict,
    triangles_intersect, triangles_intersect_with, PointSource, SlicePoints,
};
pub use scalar::{
    format_rational, is_f64_exact, parse_rational, rat_approx, rat_from_f64, rat_from_i64,
    rat_interval, rat_to_f64, rational_bits, FieldScalar, Rational, Scalar,
};
pub use vec3::{ExactPoint, IVec3, Vec3f, V3};

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    #[error("features share a vertex")]
    SharedVertex,
    #[error("only vertex-triangle and edge-edge pairs are supported")]
    UnsupportedPair,
    #[error("closest points coincide")]
    CoincidentPoints,
    #[error("triangle is degenerate")]
    DegenerateTriangle,
    #[error("edge is degenerate")]
    DegenerateEdge,
}
