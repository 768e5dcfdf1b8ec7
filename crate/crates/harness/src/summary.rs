//! Statistics computed from trace records and the run configuration alone,
//! so that a summary can be rebuilt from the files a run leaves behind.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use steep::phylo::TreeTopology;
use steep::proposals::MoveKind;

use crate::config::{swap_labels, ContinuousTarget, Experiment, RunConfig, TargetSpec};
use crate::error::{HarnessError, Result};
use crate::stats::{spread, Spread};
use crate::trace::{read_trace, StateValue, TraceRecord, TRACE_FILE};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub rows: u64,
    pub local_attempts: u64,
    pub local_accepted: u64,
    pub local_rate: f64,
    pub long_attempts: u64,
    pub long_accepted: u64,
    pub long_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeedlesSummary {
    pub region_radius: f64,
    /// Fraction of sampling-chain states within `region_radius` of the first mean.
    pub region: Spread,
    /// Fraction of sampling-chain states nearer (by weighted density) the first component.
    pub mode_occupancy: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFrequency {
    pub tree: String,
    pub count: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhyloSummary {
    pub tree_a: String,
    pub tree_b: String,
    pub mass_a: Spread,
    pub mass_b: Spread,
    pub mass_on_modes: Spread,
    /// Changes between the two modes along each repetition's sampled states.
    pub switches: Vec<u64>,
    /// Sampling-chain topologies pooled over repetitions, most frequent first.
    pub frequencies: Vec<TreeFrequency>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub rep: u64,
    pub iter: u64,
    pub log_density: f64,
    pub state: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSummary {
    /// Highest log-density among each repetition's traced coldest-chain rows.
    pub best: Vec<BestRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub reps: u64,
    pub rows: u64,
    pub chains: Vec<ChainSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub needles: Option<NeedlesSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phylo: Option<PhyloSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSummary>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        format!("{}\n", serde_json::to_string_pretty(self).expect("summary serialises"))
    }
}

fn rate(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn chain_table(records: &[TraceRecord]) -> Vec<ChainSummary> {
    let mut by_chain: BTreeMap<usize, ChainSummary> = BTreeMap::new();
    for r in records {
        let c = by_chain.entry(r.chain).or_insert_with(|| ChainSummary {
            chain: r.chain,
            ..Default::default()
        });
        c.rows += 1;
        let (acc, tot) = match r.kind {
            MoveKind::Local => (&mut c.local_accepted, &mut c.local_attempts),
            MoveKind::LongRange => (&mut c.long_accepted, &mut c.long_attempts),
        };
        *tot += 1;
        *acc += u64::from(r.accepted);
    }
    by_chain
        .into_values()
        .map(|mut c| {
            c.local_rate = rate(c.local_accepted, c.local_attempts);
            c.long_rate = rate(c.long_accepted, c.long_attempts);
            c
        })
        .collect()
}

/// Sampling-chain rows at kept iterations, grouped by repetition.
fn sampled<'a>(cfg: &RunConfig, records: &'a [TraceRecord]) -> Vec<Vec<&'a TraceRecord>> {
    let mut per_rep = vec![Vec::new(); cfg.reps as usize];
    for r in records {
        if r.chain == 0 && r.iter > cfg.burn_in && r.iter % cfg.thin == 0 {
            if let Some(v) = per_rep.get_mut(r.rep as usize) {
                v.push(r);
            }
        }
    }
    per_rep
}

fn coords<'a>(r: &'a TraceRecord) -> Result<&'a [f64]> {
    match &r.state {
        StateValue::Coords(x) => Ok(x),
        StateValue::Tree(_) => Err(HarnessError::config("expected coordinates in the trace, found a tree")),
    }
}

/// Fraction of `rows` satisfying `hit`; with no rows, the starting state decides.
fn fraction(rows: &[&TraceRecord], start: bool, hit: impl Fn(&TraceRecord) -> Result<bool>) -> Result<f64> {
    if rows.is_empty() {
        return Ok(if start { 1.0 } else { 0.0 });
    }
    let mut n = 0u64;
    for r in rows {
        n += u64::from(hit(r)?);
    }
    Ok(n as f64 / rows.len() as f64)
}

fn needles_summary(cfg: &RunConfig, records: &[TraceRecord]) -> Result<NeedlesSummary> {
    let spec = cfg
        .needles
        .as_ref()
        .ok_or_else(|| HarnessError::config("needles config lacks its section"))?;
    let target = cfg.target.continuous()?;
    let ContinuousTarget::Mixture(mix) = &target else {
        return Err(HarnessError::config("needles summary needs a mixture target"));
    };
    let center = mix.components()[0].mean.clone();
    let r = spec.region_radius;
    let in_region = |x: &[f64]| x.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < r * r;
    let x0 = cfg.start_point(&target)?;
    let mut region = Vec::new();
    let mut occupancy = Vec::new();
    for rows in sampled(cfg, records) {
        region.push(fraction(&rows, in_region(&x0), |t| Ok(in_region(coords(t)?)))?);
        occupancy.push(fraction(&rows, mix.component_of(&x0) == 0, |t| {
            Ok(mix.component_of(coords(t)?) == 0)
        })?);
    }
    Ok(NeedlesSummary {
        region_radius: r,
        region: spread(&region),
        mode_occupancy: spread(&occupancy),
    })
}

/// Canonical strings of the two modes of a phylo config.
pub fn phylo_modes(cfg: &RunConfig) -> Result<(String, String)> {
    let TargetSpec::Phylo(data) = &cfg.target else {
        return Err(HarnessError::config("phylo summary needs a phylo target"));
    };
    let a = TreeTopology::from_newick(&data.tree)?;
    let b = TreeTopology::from_newick(&swap_labels(&data.tree, data.swap[0], data.swap[1]))?;
    Ok((a.canonical(), b.canonical()))
}

fn phylo_summary(cfg: &RunConfig, records: &[TraceRecord]) -> Result<PhyloSummary> {
    let (tree_a, tree_b) = phylo_modes(cfg)?;
    let start = match cfg.phylo.as_ref().and_then(|p| p.start.as_ref()) {
        Some(s) => TreeTopology::from_newick(s)?.canonical(),
        None => tree_a.clone(),
    };
    let tree = |r: &TraceRecord| -> Result<String> {
        match &r.state {
            StateValue::Tree(t) => Ok(t.clone()),
            StateValue::Coords(_) => Err(HarnessError::config("expected trees in the trace, found coordinates")),
        }
    };
    let (mut mass_a, mut mass_b, mut on_modes, mut switches) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut pooled: BTreeMap<String, u64> = BTreeMap::new();
    for rows in sampled(cfg, records) {
        let a = fraction(&rows, start == tree_a, |r| Ok(tree(r)? == tree_a))?;
        let b = fraction(&rows, start == tree_b, |r| Ok(tree(r)? == tree_b))?;
        mass_a.push(a);
        mass_b.push(b);
        on_modes.push(a + b);
        let mut last: Option<bool> = None;
        let mut n = 0u64;
        for r in &rows {
            let t = tree(r)?;
            let mode = if t == tree_a {
                Some(true)
            } else if t == tree_b {
                Some(false)
            } else {
                None
            };
            if let Some(m) = mode {
                if last.is_some_and(|l| l != m) {
                    n += 1;
                }
                last = Some(m);
            }
            *pooled.entry(t).or_default() += 1;
        }
        switches.push(n);
    }
    let total: u64 = pooled.values().sum();
    let mut frequencies: Vec<TreeFrequency> = pooled
        .into_iter()
        .map(|(tree, count)| TreeFrequency {
            tree,
            count,
            fraction: rate(count, total),
        })
        .collect();
    frequencies.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.tree.cmp(&y.tree)));
    Ok(PhyloSummary {
        tree_a,
        tree_b,
        mass_a: spread(&mass_a),
        mass_b: spread(&mass_b),
        mass_on_modes: spread(&on_modes),
        switches,
        frequencies,
    })
}

fn optimize_summary(cfg: &RunConfig, records: &[TraceRecord]) -> Result<OptimizeSummary> {
    let mut best: Vec<Option<BestRow>> = vec![None; cfg.reps as usize];
    for r in records.iter().filter(|r| r.chain == 0) {
        let Some(slot) = best.get_mut(r.rep as usize) else { continue };
        if slot.as_ref().is_none_or(|b| r.log_density > b.log_density) {
            *slot = Some(BestRow {
                rep: r.rep,
                iter: r.iter,
                log_density: r.log_density,
                state: coords(r)?.to_vec(),
            });
        }
    }
    Ok(OptimizeSummary {
        best: best.into_iter().flatten().collect(),
    })
}

pub fn summarize(cfg: &RunConfig, records: &[TraceRecord]) -> Result<Summary> {
    let mut summary = Summary {
        experiment: cfg.experiment,
        reps: cfg.reps,
        rows: records.len() as u64,
        chains: chain_table(records),
        needles: None,
        phylo: None,
        optimize: None,
    };
    match cfg.experiment {
        Experiment::Needles => summary.needles = Some(needles_summary(cfg, records)?),
        Experiment::Phylo => summary.phylo = Some(phylo_summary(cfg, records)?),
        Experiment::Optimize => summary.optimize = Some(optimize_summary(cfg, records)?),
        Experiment::SpectralScan => {
            return Err(HarnessError::config("spectral-scan output has no sampling trace to summarise"))
        }
    }
    Ok(summary)
}

/// Rebuilds the summary of a finished run from `dir/config.json` and `dir/trace.csv`.
pub fn summarize_dir(dir: &Path) -> Result<Summary> {
    let cfg = RunConfig::read(&dir.join("config.json"))?;
    let (_, records) = read_trace(&dir.join(TRACE_FILE))?;
    summarize(&cfg, &records)
}
