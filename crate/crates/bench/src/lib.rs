//! Shared inputs for the criterion benches.

use pairfunc::{MarkModel, PointConfiguration, Result, Window};

/// Unit-intensity sample on the `n × n` square with the given marks.
pub fn square_sample(n: f64, marks: &MarkModel, seed: u64) -> Result<PointConfiguration> {
    pairfunc::process::sample_ppp(&Window::cube(2, n)?, 1.0, marks, seed)
}
