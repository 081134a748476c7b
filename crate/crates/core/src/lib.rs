//! Simulation toolkit for stabilizing pair functionals of marked Poisson
//! point processes with column-type dependence.
//!
//! The crate samples marked Poisson processes on growing rectangular
//! windows, builds the three model families (projected geometric-graph
//! crossing numbers, barcode inversion counts, and tree realization numbers
//! via the sum-log-sum functional), evaluates double-sum and sum-log-sum
//! functionals, and provides the distance-to-normal and scaling diagnostics
//! needed to check normal approximation empirically.
//!
//! Module map:
//!
//! * [`geometry`]: windows, slabs, cubes, box partitions, exact predicates.
//! * [`process`]: marked points, configurations, Poisson sampling, text I/O.
//! * [`graphs`]: connectivity kernels and the crossing-number functional.
//! * [`barcodes`]: lifetimes (uniform and Poisson tree), inversions, shields.
//! * [`functionals`]: double sum, sum-log-sum, difference operators,
//!   empirical stabilization radii.
//! * [`stats`]: Wasserstein/Kolmogorov distances to N(0,1), scaling fits,
//!   concentration bounds.
//! * [`experiment`]: reproducible Monte Carlo runner used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barcodes;
pub mod error;
pub mod experiment;
pub mod functionals;
pub mod geometry;
pub mod graphs;
pub mod process;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{AxisBox, BoxPartition, Cube, Region, Slab, Window};
pub use process::{Mark, MarkModel, MarkedPoint, PointConfiguration, PointId};
