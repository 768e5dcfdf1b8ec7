//! Experiment drivers. Each one validates its config, writes the resolved
//! config and seed, runs its repetitions in a worker pool with one part
//! file per repetition, merges the parts, and derives the summary from the
//! merged trace.

mod baselines;
mod needles;
mod optimize;
mod phylo;
mod spectral;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use steep::proposals::Proposal;
use steep::samplers::{tune_ladder, ChainReport, Keep, SteepConfig, TemperatureLadder, TraceEvent, TuneOptions};
use steep::{LogDensity, RngStream};

pub use baselines::{
    ergodic_average_check, local_chain_visits, nni_baseline, two_mode_lattice, ErgodicReport, LocalBaseline,
    NniBaseline,
};
pub use needles::{run_needles, NeedlesReport};
pub use optimize::{run_optimize, OptimizeRep, OptimizeReport};
pub use phylo::{run_phylo, ExactComparison, OracleReport, PhyloReport};
pub use spectral::{run_spectral_scan, PeakRow, ScanReport, ScanRow, SuiteLine, SuitesReport};

use crate::config::{write_file, RunConfig, TraceLevel};
use crate::error::{HarnessError, Result};
use crate::summary::{summarize, Summary, SUMMARY_FILE};
use crate::trace::{merge_parts, part_path, prepare_parts, read_trace, StateLayout, TraceState, TraceWriter};

// Streams outside every repetition's block: repetitions use ids
// `rep * 2^32 + chain` with `rep < 2^32 - 1`.
pub(crate) const TUNE_STREAM: u64 = u64::MAX;
pub(crate) const DATA_STREAM: u64 = u64::MAX - 1;
pub(crate) const ORACLE_DATA_STREAM: u64 = u64::MAX - 2;
pub(crate) const BASELINE_STREAM: u64 = u64::MAX - 3;
/// Repetition index whose streams drive the oracle run.
pub(crate) const ORACLE_REPETITION: u64 = (1 << 32) - 1;

pub const RUN_FILE: &str = "run.json";

/// Exact attempt/accept counters of one chain over a whole repetition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainCounts {
    pub chain: usize,
    pub temperature: f64,
    pub local_attempts: u64,
    pub local_accepted: u64,
    pub long_attempts: u64,
    pub long_accepted: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepCounts {
    pub rep: u64,
    pub total_steps: u64,
    pub chains: Vec<ChainCounts>,
}

impl RepCounts {
    fn new(rep: u64, total_steps: u64, chains: &[ChainReport]) -> Self {
        Self {
            rep,
            total_steps,
            chains: chains
                .iter()
                .enumerate()
                .map(|(chain, c)| ChainCounts {
                    chain,
                    temperature: c.temperature,
                    local_attempts: c.counts.local_tot,
                    local_accepted: c.counts.local_acc,
                    long_attempts: c.counts.long_tot,
                    long_accepted: c.counts.long_acc,
                })
                .collect(),
        }
    }
}

/// Writes the trace rows a run asks for and keeps the first write error.
pub struct TraceSink {
    writer: TraceWriter,
    level: TraceLevel,
    burn_in: u64,
    thin: u64,
    rep: u64,
    error: Option<HarnessError>,
}

impl TraceSink {
    fn open(cfg: &RunConfig, rep: u64) -> Result<Self> {
        Ok(Self {
            writer: TraceWriter::create(&part_path(&cfg.out, rep))?,
            level: cfg.trace,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            rep,
            error: None,
        })
    }

    pub fn observe<S: TraceState>(&mut self, e: &TraceEvent<'_, S>) {
        if self.error.is_some() {
            return;
        }
        let kept = e.iteration > self.burn_in && e.iteration % self.thin == 0;
        let write = match self.level {
            TraceLevel::All => true,
            TraceLevel::Kept => kept,
            TraceLevel::Coldest => kept && e.chain == 0,
        };
        if write {
            if let Err(err) = self.writer.write(self.rep, e.chain, e.iteration, e.outcome, e.log_pi, e.state) {
                self.error = Some(err);
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self.error {
            Some(e) => Err(e),
            None => self.writer.finish(),
        }
    }
}

/// Runs `body` for every repetition in parallel; results come back in
/// repetition order.
pub(crate) fn run_reps<R, F>(cfg: &RunConfig, body: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, &mut TraceSink) -> Result<R> + Sync,
{
    prepare_parts(&cfg.out)?;
    (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut sink = TraceSink::open(cfg, rep)?;
            let out = body(rep, &mut sink)?;
            sink.finish()?;
            Ok(out)
        })
        .collect()
}

/// Merges the parts, rebuilds the summary from the merged trace and writes it.
pub(crate) fn finalize(cfg: &RunConfig, layout: StateLayout) -> Result<Summary> {
    let path = merge_parts(&cfg.out, cfg.reps, layout)?;
    let (_, records) = read_trace(&path)?;
    let summary = summarize(cfg, &records)?;
    write_file(&cfg.out.join(SUMMARY_FILE), summary.to_json().as_bytes())?;
    Ok(summary)
}

pub(crate) fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("report serialises");
    write_file(&dir.join(name), format!("{json}\n").as_bytes())
}

/// The configured ladder, or one tuned by pilot runs on a dedicated stream.
pub(crate) fn resolve_ladder<S, T, L, G>(
    cfg: &RunConfig,
    target: &T,
    x0: &S,
    local: &L,
    long_range: &G,
) -> Result<TemperatureLadder>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
{
    match cfg.ladder.fixed()? {
        Some(l) => Ok(l),
        None => {
            let opts = TuneOptions { s: cfg.s, ..TuneOptions::default() };
            let mut rng = RngStream::new(cfg.seed(), TUNE_STREAM);
            Ok(tune_ladder(target, x0, local, long_range, &opts, &mut rng)?)
        }
    }
}

pub(crate) fn sampler_config(cfg: &RunConfig, ladder: &TemperatureLadder, rep: u64) -> SteepConfig {
    SteepConfig {
        s: cfg.s,
        n_iter: cfg.n_iter,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        repetition: rep,
        keep: Keep::None,
        ..SteepConfig::new(ladder.clone(), cfg.seed())
    }
}
