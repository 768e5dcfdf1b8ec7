//! Single-chain comparison runs and the lattice ergodic-average check.

use serde::Serialize;
use steep::phylo::{PhyloTarget, TreeTopology};
use steep::proposals::{ContinuousKernel, LatticeStep, LatticeUniform, Nni};
use steep::samplers::{mh_step, steep_two_chain_run, ChainState, Keep, SteepConfig, TemperatureLadder};
use steep::target::{log_sum_exp, LatticeTarget};
use steep::{ContinuousState, LogDensity, RngStream};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalBaseline {
    pub steps: u64,
    pub accepted: u64,
    /// Steps that ended within the radius of the far point.
    pub visits: u64,
    pub final_state: Vec<f64>,
}

/// Plain Metropolis-Hastings at temperature 1 with one local kernel,
/// counting steps that end within `radius` of `far`.
pub fn local_chain_visits<T: LogDensity<ContinuousState> + ?Sized>(
    target: &T,
    kernel: &ContinuousKernel,
    x0: ContinuousState,
    far: &[f64],
    radius: f64,
    steps: u64,
    rng: &mut RngStream,
) -> Result<LocalBaseline> {
    let far = ContinuousState::new(far.to_vec())?;
    let mut chain = ChainState::new(target, x0, 1.0)?;
    let mut visits = 0;
    for _ in 0..steps {
        mh_step(&mut chain, target, kernel, rng);
        visits += u64::from(chain.current().distance(&far) < radius);
    }
    Ok(LocalBaseline {
        steps,
        accepted: chain.counts().local_acc,
        visits,
        final_state: chain.current().to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NniBaseline {
    pub steps: u64,
    pub accepted: u64,
    /// Steps that ended on the avoided topology.
    pub visits: u64,
    pub distinct_trees: usize,
}

/// Plain NNI Metropolis-Hastings from `start`, counting steps that end on
/// the topology whose canonical string is `avoid`.
pub fn nni_baseline(
    target: &PhyloTarget,
    start: TreeTopology,
    avoid: &str,
    steps: u64,
    rng: &mut RngStream,
) -> Result<NniBaseline> {
    let mut chain = ChainState::new(target, start, 1.0)?;
    let mut seen = std::collections::HashSet::new();
    let mut key = chain.current().canonical();
    seen.insert(key.clone());
    let mut visits = 0;
    for _ in 0..steps {
        if mh_step(&mut chain, target, &Nni, rng).accepted {
            key = chain.current().canonical();
            seen.insert(key.clone());
        }
        visits += u64::from(key == avoid);
    }
    Ok(NniBaseline {
        steps,
        accepted: chain.counts().local_acc,
        visits,
        distinct_trees: seen.len(),
    })
}

/// 60 sites carrying `0.35 N(14, 2.5^2) + 0.65 N(44, 2.5^2)` evaluated at
/// the integers, and the boundary `30`: the first mode is `{x < 30}`.
pub fn two_mode_lattice() -> (LatticeTarget, i64) {
    let bump = |x: f64, w: f64, m: f64| w.ln() - 0.5 * ((x - m) / 2.5).powi(2);
    let log_w = (0..60)
        .map(|x| {
            let x = x as f64;
            log_sum_exp(&[bump(x, 0.35, 14.0), bump(x, 0.65, 44.0)])
        })
        .collect();
    (LatticeTarget::new(log_w).expect("finite weights"), 30)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgodicReport {
    pub iterations: u64,
    pub hot_temperature: f64,
    /// Exact mass of the first mode.
    pub exact: f64,
    /// Fraction of post-burn-in sampling-chain states in the first mode.
    pub average: f64,
    pub error: f64,
}

/// Two-chain sampler on [`two_mode_lattice`] at temperatures `(1, 8)`:
/// the exploring chain mixes +-1..2 steps with uniform proposals over the
/// sites, the sampling chain jumps from its samples.
pub fn ergodic_average_check(seed: u64, iterations: u64) -> Result<ErgodicReport> {
    let (target, boundary) = two_mode_lattice();
    let exact: f64 = target.probabilities()[..boundary as usize].iter().sum();
    let hot = 8.0;
    let cfg = SteepConfig {
        n_iter: iterations,
        burn_in: 1000,
        thin: 1,
        keep: Keep::None,
        ..SteepConfig::new(TemperatureLadder::new(vec![1.0, hot])?, seed)
    };
    let (mut hits, mut n) = (0u64, 0u64);
    steep_two_chain_run(
        &cfg,
        &target,
        14,
        &LatticeStep { max_step: 2 },
        &LatticeUniform { n: target.len() as i64 },
        |e| {
            if e.chain == 0 && e.iteration > cfg.burn_in {
                n += 1;
                hits += u64::from(*e.state < boundary);
            }
        },
    )?;
    let average = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    Ok(ErgodicReport {
        iterations,
        hot_temperature: hot,
        exact,
        average,
        error: (average - exact).abs(),
    })
}
