//! Configuration, experiment drivers and trace/summary files for the
//! `steep` command-line tool.
//!
//! A run directory holds `config.json` (the fully resolved configuration),
//! `seed.txt`, `trace.csv`, `summary.json` (rebuilt from the trace by
//! [`summary::summarize_dir`]) and `run.json` (exact counters, baselines and
//! oracle comparisons). The spectral scan writes `scan.csv` in place of a
//! trace.

pub mod config;
pub mod error;
pub mod experiments;
pub mod stats;
pub mod summary;
pub mod trace;

pub use config::{Experiment, LadderSpec, Overrides, RunConfig};
pub use error::{HarnessError, Result};
