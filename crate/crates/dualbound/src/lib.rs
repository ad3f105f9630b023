//! Experiment runner for the dual-control portfolio bounds: TOML configuration,
//! the bounds pipeline, figure data and CSV output.

pub mod config;
pub mod format;
pub mod output;
pub mod pipeline;

use dualbound_core::Executor;
use rayon::prelude::*;

/// Executor backed by the global rayon pool. Results come back in index order,
/// so output is identical to [`dualbound_core::Serial`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "DUALBOUND_OUT";
