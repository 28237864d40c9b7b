//! Matrix-free solvers for convolutional structured low-rank matrix recovery.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Multi-axis index loops read several per-axis arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod dense;
pub mod error;
pub mod giraf;
pub mod grids;
pub mod lifting;
pub mod models;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
