//! Separation of close triangle-mesh features and topology-preserving
//! rounding of rational coordinates to binary64.

pub mod geom;
pub mod io;
pub mod mesh;
pub mod proximity;
pub mod modify;
pub mod report;
pub mod round;
pub mod separate;
pub mod synth;
