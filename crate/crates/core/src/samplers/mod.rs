//! Metropolis-Hastings and Small-World steps, the replica-swap baseline,
//! the tempered multi-chain sampler with its optimiser mode, and ladders.

mod chain;
mod diagnostics;
mod ladder;
mod steep;
mod tempering;

pub use chain::{
    accept_log, mh_step, small_world_step, swap_log_accept, tempered_jump_log_accept,
    tempered_jump_step, AcceptCounts, ChainState, StepOutcome,
};
pub use diagnostics::convergence_rate_diagnostic;
pub use ladder::{geometric_ladder, tune_ladder, TemperatureLadder, TuneOptions};
pub use steep::{
    exploring_run, optimize_run, steep_run, steep_two_chain_run, ChainReport, Keep,
    OptimizeOutput, RunOutput, SteepConfig, TraceEvent,
};
pub use tempering::{tempering_baseline_run, TemperingConfig, TemperingOutput};
