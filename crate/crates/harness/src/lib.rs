//! Experiment driver for the disclosure-avoidance toolkit: data-release
//! and classification comparisons, parameter sweeps, accounting tables and
//! the `da-toolkit` command line.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod synth;

pub use error::{Error, Result};

/// Caps the global rayon pool at `DA_TOOLKIT_THREADS` when set. Later
/// calls and a pool that is already built are left alone.
pub fn init_thread_pool() -> Result<()> {
    let Ok(v) = std::env::var("DA_TOOLKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("DA_TOOLKIT_THREADS must be a positive integer, got {v:?}")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("rayon pool already initialized");
    }
    Ok(())
}
