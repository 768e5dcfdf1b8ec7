use serde::Serialize;
use steep::samplers::steep_run;
use steep::RngStream;

use super::baselines::{local_chain_visits, LocalBaseline};
use super::{finalize, resolve_ladder, run_reps, sampler_config, write_json, RepCounts, BASELINE_STREAM, RUN_FILE};
use crate::config::{Experiment, RunConfig};
use crate::error::{HarnessError, Result};
use crate::summary::Summary;
use crate::trace::StateLayout;

#[derive(Clone, Debug, Serialize)]
pub struct NeedlesReport {
    pub temperatures: Vec<f64>,
    pub reps: Vec<RepCounts>,
    /// Plain local chain from the start point, watched near the second mean.
    pub baseline: Option<LocalBaseline>,
    pub summary: Summary,
}

pub fn run_needles(cfg: &RunConfig) -> Result<NeedlesReport> {
    if cfg.experiment != Experiment::Needles {
        return Err(HarnessError::config("run_needles needs a needles config"));
    }
    cfg.validate()?;
    let spec = cfg.needles.as_ref().expect("validated");
    let target = cfg.target.continuous()?;
    let local = cfg.local.continuous()?;
    let long_range = cfg.long_range.continuous()?;
    let x0 = cfg.start_point(&target)?;
    let ladder = resolve_ladder(cfg, &target, &x0, &local, &long_range)?;
    cfg.write_resolved()?;

    let reps = run_reps(cfg, |rep, sink| {
        let sc = sampler_config(cfg, &ladder, rep);
        let out = steep_run(&sc, &target, x0.clone(), &local, &long_range, |e| sink.observe(e))?;
        Ok(RepCounts::new(rep, out.total_steps, &out.chains))
    })?;
    let summary = finalize(cfg, StateLayout::Coords(x0.dim()))?;

    let baseline = if spec.baseline_steps > 0 {
        let far = &target.optima()[1];
        let mut rng = RngStream::new(cfg.seed(), BASELINE_STREAM);
        Some(local_chain_visits(
            &target,
            &local,
            x0.clone(),
            far,
            spec.far_radius,
            spec.baseline_steps,
            &mut rng,
        )?)
    } else {
        None
    };
    let report = NeedlesReport {
        temperatures: ladder.temperatures().to_vec(),
        reps,
        baseline,
        summary,
    };
    write_json(&cfg.out, RUN_FILE, &report)?;
    Ok(report)
}
