use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;

use serde::Serialize;
use steep::phylo::{
    build_swapped_alignment, exact_topology_posterior, PhyloTarget, SequenceAlignment, TreeTopology,
    MAX_ENUMERATION_TAXA,
};
use steep::proposals::{CompoundNni, Nni};
use steep::samplers::{steep_run, Keep, SteepConfig, TemperatureLadder};
use steep::RngStream;

use super::baselines::{nni_baseline, NniBaseline};
use super::{
    finalize, resolve_ladder, run_reps, sampler_config, write_json, RepCounts, BASELINE_STREAM, DATA_STREAM,
    ORACLE_DATA_STREAM, ORACLE_REPETITION, RUN_FILE,
};
use crate::config::{caterpillar, swap_labels, Experiment, OracleSpec, RunConfig, TargetSpec};
use crate::error::{HarnessError, Result};
use crate::summary::{phylo_modes, Summary};
use crate::trace::StateLayout;

#[derive(Clone, Debug, Serialize)]
pub struct ExactComparison {
    pub topologies: usize,
    pub probability_a: f64,
    pub probability_b: f64,
    /// Between the pooled sampling-chain frequencies and the exact posterior.
    pub tv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub taxa: usize,
    pub sites: usize,
    pub topologies: usize,
    pub sweeps: u64,
    pub samples: u64,
    pub distinct_visited: usize,
    pub tv: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhyloReport {
    pub temperatures: Vec<f64>,
    pub n_taxa: usize,
    pub n_sites: usize,
    pub n_patterns: usize,
    pub log_likelihood_a: f64,
    pub log_likelihood_b: f64,
    pub reps: Vec<RepCounts>,
    pub exact: Option<ExactComparison>,
    /// Plain NNI chain from the start tree, watched for the second mode.
    pub baseline: Option<NniBaseline>,
    pub oracle: Option<OracleReport>,
    pub summary: Summary,
}

fn long_kernel(cfg: &RunConfig) -> Result<CompoundNni> {
    // a plain NNI long-range kernel is a compound move of exactly one step
    Ok(cfg.long_range.compound()?.unwrap_or(CompoundNni::new(1, 1.0)?))
}

pub fn run_phylo(cfg: &RunConfig) -> Result<PhyloReport> {
    if cfg.experiment != Experiment::Phylo {
        return Err(HarnessError::config("run_phylo needs a phylo config"));
    }
    cfg.validate()?;
    let spec = cfg.phylo.as_ref().expect("validated");
    let TargetSpec::Phylo(data) = &cfg.target else { unreachable!("validated") };
    let tree_a = TreeTopology::from_newick(&data.tree)?;
    let tree_b = TreeTopology::from_newick(&swap_labels(&data.tree, data.swap[0], data.swap[1]))?;
    let alignment = match &data.fasta {
        Some(path) => {
            let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
            SequenceAlignment::read_fasta(BufReader::new(f))?
        }
        None => {
            let mut rng = RngStream::new(cfg.seed(), DATA_STREAM);
            build_swapped_alignment(&tree_a, data.sites, (data.swap[0], data.swap[1]), &mut rng)?
        }
    };
    if alignment.n_taxa() != tree_a.n_taxa() {
        return Err(steep::Error::TaxaMismatch {
            tree: tree_a.n_taxa(),
            alignment: alignment.n_taxa(),
        }
        .into());
    }
    let target = PhyloTarget::new(&alignment);
    let start = match &spec.start {
        Some(s) => TreeTopology::from_newick(s)?,
        None => tree_a.clone(),
    };
    let long_range = long_kernel(cfg)?;
    let ladder = resolve_ladder(cfg, &target, &start, &Nni, &long_range)?;
    cfg.write_resolved()?;

    let reps = run_reps(cfg, |rep, sink| {
        let sc = sampler_config(cfg, &ladder, rep);
        let out = steep_run(&sc, &target, start.clone(), &Nni, &long_range, |e| sink.observe(e))?;
        Ok(RepCounts::new(rep, out.total_steps, &out.chains))
    })?;
    let summary = finalize(cfg, StateLayout::Tree)?;
    let phylo = summary.phylo.as_ref().expect("phylo summary");

    let exact = if spec.exact_posterior && target.n_taxa() <= MAX_ENUMERATION_TAXA {
        let post = exact_topology_posterior(&target)?;
        let counts: BTreeMap<String, u64> = phylo.frequencies.iter().map(|f| (f.tree.clone(), f.count)).collect();
        Some(ExactComparison {
            topologies: post.topologies.len(),
            probability_a: post.probability_of(&tree_a),
            probability_b: post.probability_of(&tree_b),
            tv: post.tv_distance(&counts),
        })
    } else {
        None
    };
    let baseline = if spec.baseline_steps > 0 {
        let (_, avoid) = phylo_modes(cfg)?;
        let mut rng = RngStream::new(cfg.seed(), BASELINE_STREAM);
        Some(nni_baseline(&target, start.clone(), &avoid, spec.baseline_steps, &mut rng)?)
    } else {
        None
    };
    let oracle = match &spec.oracle {
        Some(o) => Some(oracle_run(cfg, o, &ladder, &long_range)?),
        None => None,
    };
    let report = PhyloReport {
        temperatures: ladder.temperatures().to_vec(),
        n_taxa: target.n_taxa(),
        n_sites: target.n_sites(),
        n_patterns: target.n_patterns(),
        log_likelihood_a: target.loglik(&tree_a)?,
        log_likelihood_b: target.loglik(&tree_b)?,
        reps,
        exact,
        baseline,
        oracle,
        summary,
    };
    write_json(&cfg.out, RUN_FILE, &report)?;
    Ok(report)
}

/// Samples a small swapped-caterpillar instance for `spec.sweeps` sweeps of
/// the configured ladder and compares every post-burn-in sampling-chain
/// state with the exhaustive posterior.
pub fn oracle_run(
    cfg: &RunConfig,
    spec: &OracleSpec,
    ladder: &TemperatureLadder,
    long_range: &CompoundNni,
) -> Result<OracleReport> {
    let tree = TreeTopology::from_newick(&caterpillar(spec.taxa))?;
    let mut rng = RngStream::new(cfg.seed(), ORACLE_DATA_STREAM);
    let alignment = build_swapped_alignment(&tree, spec.sites, (spec.swap[0], spec.swap[1]), &mut rng)?;
    let target = PhyloTarget::new(&alignment);
    let post = exact_topology_posterior(&target)?;
    let sc = SteepConfig {
        s: cfg.s,
        n_iter: spec.sweeps,
        burn_in: spec.burn_in,
        thin: 1,
        repetition: ORACLE_REPETITION,
        keep: Keep::None,
        ..SteepConfig::new(ladder.clone(), cfg.seed())
    };
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut last: Option<(TreeTopology, String)> = None;
    steep_run(&sc, &target, tree, &Nni, long_range, |e| {
        if e.chain == 0 && e.iteration > spec.burn_in {
            let key = match &last {
                Some((t, k)) if t == e.state => k.clone(),
                _ => {
                    let k = e.state.canonical();
                    last = Some((e.state.clone(), k.clone()));
                    k
                }
            };
            *counts.entry(key).or_default() += 1;
        }
    })?;
    Ok(OracleReport {
        taxa: spec.taxa,
        sites: alignment.n_sites(),
        topologies: post.topologies.len(),
        sweeps: spec.sweeps,
        samples: counts.values().sum(),
        distinct_visited: counts.len(),
        tv: post.tv_distance(&counts),
    })
}
