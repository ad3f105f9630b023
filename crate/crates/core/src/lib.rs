//! Dual-control bounds for dynamic asset allocation in an incomplete
//! Vasicek economy with a non-traded inflation risk.
//!
//! The crate is `no_std` (it needs `alloc`). Path simulation is generic over an
//! [`Executor`], so callers can plug in a thread pool without changing results.

#![no_std]
// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod diagnostics;
pub mod dual;
mod error;
mod exec;
pub mod linalg;
pub mod market;
pub mod normal;
pub mod optimize;
pub mod preferences;
pub mod primal;
pub mod roots;
pub mod stats;

pub use error::{Error, Result};
pub use exec::{Executor, Serial};
