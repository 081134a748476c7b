//! Windows, slabs, cubes, box partitions and exact planar predicates.

mod partition;
pub mod predicates;
mod region;
mod window;

pub use partition::BoxPartition;
pub use predicates::{orient2d, segments_properly_cross};
pub use region::{Cube, Region, Slab, DEFAULT_CUTOFF};
pub use window::{AxisBox, Window, DEFAULT_MARGIN};

use crate::error::{Error, Result};

/// The projection π₁:₂ onto the first two coordinates.
pub fn project_to_plane(x: &[f64]) -> Result<[f64; 2]> {
    if x.len() < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
    }
    Ok([x[0], x[1]])
}

/// Chebyshev (sup-norm) distance.
pub fn chebyshev(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Formats a float so that parsing it back returns the same bits.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}
