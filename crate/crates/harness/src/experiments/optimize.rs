use serde::Serialize;
use steep::samplers::optimize_run;
use steep::ContinuousState;

use super::{finalize, run_reps, sampler_config, write_json, RUN_FILE};
use crate::config::{Experiment, RunConfig};
use crate::error::{HarnessError, Result};
use crate::summary::Summary;
use crate::trace::StateLayout;

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeRep {
    pub rep: u64,
    pub best: Vec<f64>,
    pub best_log_density: f64,
    /// First iteration at which the coldest chain reached `best`.
    pub best_iteration: u64,
    /// First iteration at which the coldest chain came within epsilon of `best`.
    pub first_entry: u64,
    pub nearest_optimum: Option<Vec<f64>>,
    pub distance_to_optimum: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeReport {
    pub temperatures: Vec<f64>,
    pub epsilon: f64,
    pub reps: Vec<OptimizeRep>,
    pub summary: Summary,
}

pub fn run_optimize(cfg: &RunConfig) -> Result<OptimizeReport> {
    if cfg.experiment != Experiment::Optimize {
        return Err(HarnessError::config("run_optimize needs an optimize config"));
    }
    cfg.validate()?;
    let spec = cfg.optimize.as_ref().expect("validated");
    let target = cfg.target.continuous()?;
    let local = cfg.local.continuous()?;
    let long_range = cfg.long_range.continuous()?;
    let x0 = cfg.start_point(&target)?;
    let ladder = cfg.ladder.fixed()?.expect("validated: fixed ladder");
    let optima = target.optima();
    cfg.write_resolved()?;

    let mut temperatures = Vec::new();
    let reps = run_reps(cfg, |rep, sink| {
        let sc = sampler_config(cfg, &ladder, rep);
        let mut path: Vec<ContinuousState> = Vec::new();
        let out = optimize_run(&sc, spec.cold_steps, &target, x0.clone(), &local, &long_range, |e| {
            if e.chain == 0 {
                path.push(e.state.clone());
            }
            sink.observe(e);
        })?;
        let first_entry = path
            .iter()
            .position(|x| x.distance(&out.best) <= spec.epsilon)
            .map_or(0, |i| i as u64 + 1);
        let nearest = optima
            .iter()
            .map(|m| (m, out.best.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        Ok((
            out.temperatures,
            OptimizeRep {
                rep,
                best: out.best.to_vec(),
                best_log_density: out.best_log_pi,
                best_iteration: out.best_iteration,
                first_entry,
                nearest_optimum: nearest.map(|(m, _)| m.clone()),
                distance_to_optimum: nearest.map(|(_, d)| d),
            },
        ))
    })?
    .into_iter()
    .map(|(t, r)| {
        temperatures = t;
        r
    })
    .collect();
    let summary = finalize(cfg, StateLayout::Coords(x0.dim()))?;
    let report = OptimizeReport {
        temperatures,
        epsilon: spec.epsilon,
        reps,
        summary,
    };
    write_json(&cfg.out, RUN_FILE, &report)?;
    Ok(report)
}
