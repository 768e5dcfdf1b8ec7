use super::chain::{
    mh_step, small_world_step, tempered_jump_step, AcceptCounts, ChainState, StepOutcome,
};
use super::ladder::TemperatureLadder;
use crate::empirical::EmpiricalMeasure;
use crate::proposals::Proposal;
use crate::target::LogDensity;
use crate::{Error, Result, RngStream};

/// Which chains keep their post-burn-in, thinned states in the output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    None,
    Coldest,
    All,
}

#[derive(Clone, Debug)]
pub struct SteepConfig {
    pub ladder: TemperatureLadder,
    /// Probability of a long-range move, fixed for the whole run.
    pub s: f64,
    /// Iterations after burn-in.
    pub n_iter: u64,
    pub burn_in: u64,
    /// Output thinning: states at iterations that are multiples of `thin`.
    pub thin: u64,
    /// Thinning of the empirical measures fed to colder chains.
    pub xi_thin: u64,
    pub seed: u64,
    pub repetition: u64,
    /// Re-evaluate cached log-densities every this many iterations (0 = never).
    pub recompute_every: u64,
    pub keep: Keep,
}

impl SteepConfig {
    pub fn new(ladder: TemperatureLadder, seed: u64) -> Self {
        Self {
            ladder,
            s: 0.33,
            n_iter: 10_000,
            burn_in: 1000,
            thin: 10,
            xi_thin: 1,
            seed,
            repetition: 0,
            recompute_every: 100_000,
            keep: Keep::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::config(format!("s must lie in (0, 1), got {}", self.s)));
        }
        if self.thin == 0 || self.xi_thin == 0 {
            return Err(Error::config("thin and xi_thin must be >= 1"));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> u64 {
        self.burn_in + self.n_iter
    }
}

/// One transition of one chain, as passed to the observer.
#[derive(Debug)]
pub struct TraceEvent<'a, S> {
    pub chain: usize,
    /// 1-based iteration number.
    pub iteration: u64,
    pub temperature: f64,
    pub state: &'a S,
    /// Untempered log-density of `state`.
    pub log_pi: f64,
    pub outcome: StepOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub temperature: f64,
    pub counts: AcceptCounts,
    /// Number of states held by the chain's empirical measure at the end.
    pub stored: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutput<S> {
    /// Indexed from the coldest chain (0) to the hottest.
    pub chains: Vec<ChainReport>,
    pub kept: Vec<Vec<S>>,
    pub kept_log_pi: Vec<Vec<f64>>,
    pub final_states: Vec<S>,
    /// Iterations per chain.
    pub iterations: u64,
    /// Transitions summed over all chains that ran.
    pub total_steps: u64,
}

struct Recorder<'c, S> {
    cfg: &'c SteepConfig,
    kept: Vec<Vec<S>>,
    kept_log_pi: Vec<Vec<f64>>,
}

impl<'c, S: Clone> Recorder<'c, S> {
    fn new(cfg: &'c SteepConfig, n: usize) -> Self {
        Self {
            cfg,
            kept: vec![Vec::new(); n],
            kept_log_pi: vec![Vec::new(); n],
        }
    }

    fn record(&mut self, chain: usize, iteration: u64, c: &ChainState<S>) {
        let keep = match self.cfg.keep {
            Keep::None => false,
            Keep::Coldest => chain == 0,
            Keep::All => true,
        };
        if keep && iteration > self.cfg.burn_in && iteration % self.cfg.thin == 0 {
            self.kept[chain].push(c.current().clone());
            self.kept_log_pi[chain].push(c.log_pi());
        }
    }
}

fn check_cache<S: Clone, T: LogDensity<S> + ?Sized>(
    chains: &mut [ChainState<S>],
    target: &T,
) -> Result<()> {
    for (i, c) in chains.iter_mut().enumerate() {
        let drift = c.refresh(target)?;
        if cfg!(debug_assertions) && drift > 1e-8 {
            return Err(Error::Numerical(format!(
                "cached log-density of chain {i} drifted by {drift}"
            )));
        }
    }
    Ok(())
}

/// Step of a colder chain: with probability `s` a jump to a state drawn
/// from the next hotter chain's empirical measure (a local step while that
/// measure is still empty), otherwise a local step.
#[allow(clippy::too_many_arguments)]
fn sampling_step<S, T, L>(
    chain: &mut ChainState<S>,
    target: &T,
    local: &L,
    hotter: &EmpiricalMeasure<(S, f64)>,
    t_hot: f64,
    s: f64,
    rng: &mut RngStream,
) -> StepOutcome
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
{
    if rng.uniform() < s && !hotter.is_empty() {
        let (y, log_pi_y) = hotter.draw(rng).expect("non-empty").clone();
        tempered_jump_step(chain, y, log_pi_y, t_hot, rng)
    } else {
        mh_step(chain, target, local, rng)
    }
}

fn init_chains<S: Clone, T: LogDensity<S> + ?Sized>(
    target: &T,
    x0: &S,
    temps: &[f64],
) -> Result<Vec<ChainState<S>>> {
    temps
        .iter()
        .map(|&t| ChainState::new(target, x0.clone(), t))
        .collect()
}

fn finish<S: Clone>(
    chains: Vec<ChainState<S>>,
    xi: &[EmpiricalMeasure<(S, f64)>],
    rec: Recorder<'_, S>,
    iterations: u64,
) -> RunOutput<S> {
    let total_steps = iterations * chains.len() as u64;
    RunOutput {
        chains: chains
            .iter()
            .zip(xi)
            .map(|(c, m)| ChainReport {
                temperature: c.temperature(),
                counts: c.counts(),
                stored: m.len(),
            })
            .collect(),
        kept: rec.kept,
        kept_log_pi: rec.kept_log_pi,
        final_states: chains.into_iter().map(|c| c.current().clone()).collect(),
        iterations,
        total_steps,
    }
}

/// The sweep over an arbitrary increasing temperature list. Chain `k` uses
/// stream `k` of the repetition; the hottest chain is a Small-World chain
/// with `long_range`, every colder chain jumps from the next hotter one's
/// empirical measure. Within an iteration chains move hottest first.
#[allow(clippy::too_many_arguments)]
fn run_temperatures<S, T, L, G, F>(
    temps: &[f64],
    cfg: &SteepConfig,
    target: &T,
    x0: S,
    local: &L,
    long_range: &G,
    mut observer: F,
) -> Result<RunOutput<S>>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
    F: FnMut(&TraceEvent<'_, S>),
{
    cfg.validate()?;
    let h = temps.len() - 1;
    let mut chains = init_chains(target, &x0, temps)?;
    let mut rngs: Vec<RngStream> = (0..=h)
        .map(|k| RngStream::for_chain(cfg.seed, cfg.repetition, k as u64))
        .collect();
    let mut xi: Vec<EmpiricalMeasure<(S, f64)>> = (0..=h)
        .map(|_| EmpiricalMeasure::new(cfg.burn_in, cfg.xi_thin))
        .collect::<Result<_>>()?;
    let mut rec = Recorder::new(cfg, h + 1);
    let total = cfg.total_iterations();
    for iter in 1..=total {
        for i in (0..=h).rev() {
            let outcome = if i == h {
                small_world_step(&mut chains[h], target, local, long_range, cfg.s, &mut rngs[h])
            } else {
                sampling_step(
                    &mut chains[i],
                    target,
                    local,
                    &xi[i + 1],
                    temps[i + 1],
                    cfg.s,
                    &mut rngs[i],
                )
            };
            let c = &chains[i];
            if i > 0 {
                xi[i].push((c.current().clone(), c.log_pi()));
            }
            observer(&TraceEvent {
                chain: i,
                iteration: iter,
                temperature: temps[i],
                state: c.current(),
                log_pi: c.log_pi(),
                outcome,
            });
            rec.record(i, iter, c);
        }
        if cfg.recompute_every > 0 && iter % cfg.recompute_every == 0 {
            check_cache(&mut chains, target)?;
        }
    }
    Ok(finish(chains, &xi, rec, total))
}

/// Multi-chain tempered sampler over `cfg.ladder`.
pub fn steep_run<S, T, L, G, F>(
    cfg: &SteepConfig,
    target: &T,
    x0: S,
    local: &L,
    long_range: &G,
    observer: F,
) -> Result<RunOutput<S>>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
    F: FnMut(&TraceEvent<'_, S>),
{
    run_temperatures(cfg.ladder.temperatures(), cfg, target, x0, local, long_range, observer)
}

/// Exploring chain at `t = cfg.ladder.hottest()` plus one sampling chain at
/// temperature 1. Requires a two-rung ladder.
pub fn steep_two_chain_run<S, T, L, G, F>(
    cfg: &SteepConfig,
    target: &T,
    x0: S,
    local: &L,
    long_range: &G,
    mut observer: F,
) -> Result<RunOutput<S>>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
    F: FnMut(&TraceEvent<'_, S>),
{
    cfg.validate()?;
    if cfg.ladder.n_chains() != 2 {
        return Err(Error::config("the two-chain sampler needs a ladder of exactly [1, t]"));
    }
    let t = cfg.ladder.hottest();
    let mut explore = ChainState::new(target, x0.clone(), t)?;
    let mut sample = ChainState::new(target, x0, 1.0)?;
    let mut rng_explore = RngStream::for_chain(cfg.seed, cfg.repetition, 1);
    let mut rng_sample = RngStream::for_chain(cfg.seed, cfg.repetition, 0);
    let mut xi: EmpiricalMeasure<(S, f64)> = EmpiricalMeasure::new(cfg.burn_in, cfg.xi_thin)?;
    let mut rec = Recorder::new(cfg, 2);
    let total = cfg.total_iterations();
    for iter in 1..=total {
        let o = small_world_step(&mut explore, target, local, long_range, cfg.s, &mut rng_explore);
        xi.push((explore.current().clone(), explore.log_pi()));
        observer(&TraceEvent {
            chain: 1,
            iteration: iter,
            temperature: t,
            state: explore.current(),
            log_pi: explore.log_pi(),
            outcome: o,
        });
        rec.record(1, iter, &explore);

        let o = if rng_sample.uniform() < cfg.s && !xi.is_empty() {
            let (y, ly) = xi.draw(&mut rng_sample)?.clone();
            tempered_jump_step(&mut sample, y, ly, t, &mut rng_sample)
        } else {
            mh_step(&mut sample, target, local, &mut rng_sample)
        };
        observer(&TraceEvent {
            chain: 0,
            iteration: iter,
            temperature: 1.0,
            state: sample.current(),
            log_pi: sample.log_pi(),
            outcome: o,
        });
        rec.record(0, iter, &sample);

        if cfg.recompute_every > 0 && iter % cfg.recompute_every == 0 {
            let mut both = [sample, explore];
            check_cache(&mut both, target)?;
            [sample, explore] = both;
        }
    }
    let empty = EmpiricalMeasure::new(0, 1)?;
    Ok(finish(vec![sample, explore], &[empty, xi], rec, total))
}

/// Only the hottest chain of `cfg.ladder`, on the same stream it uses
/// inside [`steep_run`]. Colder chains never feed back into the hottest
/// one, so its trace here is identical to its trace in a full run.
pub fn exploring_run<S, T, L, G, F>(
    cfg: &SteepConfig,
    target: &T,
    x0: S,
    local: &L,
    long_range: &G,
    mut observer: F,
) -> Result<RunOutput<S>>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
    F: FnMut(&TraceEvent<'_, S>),
{
    cfg.validate()?;
    let h = cfg.ladder.h();
    let t = cfg.ladder.hottest();
    let mut chain = ChainState::new(target, x0, t)?;
    let mut rng = RngStream::for_chain(cfg.seed, cfg.repetition, h as u64);
    let mut xi: EmpiricalMeasure<(S, f64)> = EmpiricalMeasure::new(cfg.burn_in, cfg.xi_thin)?;
    let mut rec = Recorder::new(cfg, 1);
    let keep_all = cfg.keep == Keep::All;
    let total = cfg.total_iterations();
    for iter in 1..=total {
        let o = small_world_step(&mut chain, target, local, long_range, cfg.s, &mut rng);
        xi.push((chain.current().clone(), chain.log_pi()));
        observer(&TraceEvent {
            chain: h,
            iteration: iter,
            temperature: t,
            state: chain.current(),
            log_pi: chain.log_pi(),
            outcome: o,
        });
        if keep_all {
            rec.record(0, iter, &chain);
        }
        if cfg.recompute_every > 0 && iter % cfg.recompute_every == 0 {
            check_cache(std::slice::from_mut(&mut chain), target)?;
        }
    }
    Ok(finish(vec![chain], &[xi], rec, total))
}

#[derive(Clone, Debug)]
pub struct OptimizeOutput<S> {
    pub best: S,
    pub best_log_pi: f64,
    /// First iteration at which the coldest chain reached `best`.
    pub best_iteration: u64,
    pub temperatures: Vec<f64>,
    pub run: RunOutput<S>,
}

/// Runs the sampler on the ladder continued below 1 by `cold_steps` rungs
/// (`ratio^-1, ..., ratio^-cold_steps`) and returns the best state the
/// coldest chain ever visited. With `cold_steps = 0` the run is
/// [`steep_run`] itself.
pub fn optimize_run<S, T, L, G, F>(
    cfg: &SteepConfig,
    cold_steps: usize,
    target: &T,
    x0: S,
    local: &L,
    long_range: &G,
    mut observer: F,
) -> Result<OptimizeOutput<S>>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
    F: FnMut(&TraceEvent<'_, S>),
{
    let temps = cfg.ladder.extended_cold(cold_steps);
    let first_log_pi = target.log_density(&x0);
    let mut best = (x0.clone(), first_log_pi, 0u64);
    let run = run_temperatures(&temps, cfg, target, x0, local, long_range, |e| {
        if e.chain == 0 && e.log_pi > best.1 {
            best = (e.state.clone(), e.log_pi, e.iteration);
        }
        observer(e);
    })?;
    Ok(OptimizeOutput {
        best: best.0,
        best_log_pi: best.1,
        best_iteration: best.2,
        temperatures: temps,
        run,
    })
}
