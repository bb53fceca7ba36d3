//! Near-field sensing with movable-antenna arrays: Cramér–Rao bounds,
//! antenna-position optimization, MUSIC estimation and steering-vector
//! correlation for linear and planar arrays.

// `!(x > 0.0)` is used on purpose so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod correlation;
pub mod crb;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod music;
pub mod optimize;

pub use channel::Param;
pub use crb::Case;
pub use error::{Error, Result};
pub use geometry::{ApmPlanar, ApvLinear, Benchmark, Dim, Geometry, Scenario, Target, TargetParams};

/// Crate version embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
