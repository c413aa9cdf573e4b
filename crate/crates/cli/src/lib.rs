//! Batch experiments on the disordered SSH chain: configuration, orchestration
//! and result files for the `sshlab` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod selftest;

use std::path::PathBuf;
use std::time::Instant;

pub use config::{ConfigOverrides, Experiment, OutputFormat, RunConfig};
pub use error::{CliError, Result};

/// Runs `cfg` on a pool of `threads` workers (0 = one per core) and writes
/// the result file plus its sidecar.
pub fn execute(cfg: &RunConfig, threads: usize) -> Result<PathBuf> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let start = Instant::now();
    let table = pool.install(|| experiments::run(cfg))?;
    let elapsed = start.elapsed().as_secs_f64();
    output::write_result(cfg, &table, pool.current_num_threads(), elapsed)
}
