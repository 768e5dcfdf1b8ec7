use super::chain::{accept_log, mh_step, swap_log_accept, AcceptCounts, ChainState};
use crate::proposals::Proposal;
use crate::target::LogDensity;
use crate::{Error, Result, RngStream};

/// Two-temperature replica exchange, used only as a point of comparison.
#[derive(Clone, Debug)]
pub struct TemperingConfig {
    pub t: f64,
    /// Probability that an iteration updates both chains by MH; otherwise
    /// the iteration attempts a swap.
    pub s: f64,
    pub n_iter: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub repetition: u64,
}

#[derive(Clone, Debug)]
pub struct TemperingOutput<S> {
    pub cold: Vec<S>,
    pub hot: Vec<S>,
    pub cold_counts: AcceptCounts,
    pub hot_counts: AcceptCounts,
    pub swap_acc: u64,
    pub swap_tot: u64,
}

/// Each iteration draws `u`; if `u < s` both chains take an independent MH
/// step with `kernel`, otherwise the states are exchanged with probability
/// `min(1, exp((1 - 1/t)(log_pi(x_h) - log_pi(x_c))))`, the ratio that
/// leaves `pi x pi_t` invariant. States after burn-in are kept every `thin`
/// iterations.
pub fn tempering_baseline_run<S, T, K>(
    cfg: &TemperingConfig,
    target: &T,
    x0: S,
    kernel: &K,
) -> Result<TemperingOutput<S>>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    K: Proposal<S> + ?Sized,
{
    if !(cfg.t >= 1.0 && cfg.t.is_finite()) {
        return Err(Error::config(format!("hot temperature must be >= 1, got {}", cfg.t)));
    }
    if !(cfg.s > 0.0 && cfg.s < 1.0) {
        return Err(Error::config(format!("s must lie in (0, 1), got {}", cfg.s)));
    }
    if cfg.thin == 0 {
        return Err(Error::config("thin must be >= 1"));
    }
    let mut cold = ChainState::new(target, x0.clone(), 1.0)?;
    let mut hot = ChainState::new(target, x0, cfg.t)?;
    let mut rng_cold = RngStream::for_chain(cfg.seed, cfg.repetition, 0);
    let mut rng_hot = RngStream::for_chain(cfg.seed, cfg.repetition, 1);
    let mut out = TemperingOutput {
        cold: Vec::new(),
        hot: Vec::new(),
        cold_counts: AcceptCounts::default(),
        hot_counts: AcceptCounts::default(),
        swap_acc: 0,
        swap_tot: 0,
    };
    for iter in 1..=cfg.burn_in + cfg.n_iter {
        if rng_cold.uniform() < cfg.s {
            mh_step(&mut cold, target, kernel, &mut rng_cold);
            mh_step(&mut hot, target, kernel, &mut rng_hot);
        } else {
            out.swap_tot += 1;
            let log_a = swap_log_accept(cold.log_pi(), hot.log_pi(), cfg.t);
            if accept_log(log_a, &mut rng_cold) {
                out.swap_acc += 1;
                let (xc, lc) = (cold.current().clone(), cold.log_pi());
                let (xh, lh) = (hot.current().clone(), hot.log_pi());
                cold.set_state(xh, lh);
                hot.set_state(xc, lc);
            }
        }
        if iter > cfg.burn_in && iter % cfg.thin == 0 {
            out.cold.push(cold.current().clone());
            out.hot.push(hot.current().clone());
        }
    }
    out.cold_counts = cold.counts();
    out.hot_counts = hot.counts();
    Ok(out)
}
