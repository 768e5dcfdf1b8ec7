use rand::RngCore;

use super::chain::{small_world_step, ChainState};
use super::steep::{steep_two_chain_run, SteepConfig};
use crate::proposals::Proposal;
use crate::target::LogDensity;
use crate::{Error, Result, RngStream};

const GEOMETRIC_TOL: f64 = 1e-9;

/// Increasing temperatures `1 = t_0 < t_1 < ... < t_H` with a constant ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct TemperatureLadder {
    temperatures: Vec<f64>,
}

impl TemperatureLadder {
    /// Checks `t_0 = 1`, `H >= 1`, and `t_{k+1}/t_k` constant within `1e-9`.
    pub fn new(temperatures: Vec<f64>) -> Result<Self> {
        if temperatures.len() < 2 {
            return Err(Error::config("a ladder needs at least two temperatures"));
        }
        if temperatures[0] != 1.0 {
            return Err(Error::config(format!(
                "ladder must start at temperature 1, got {}",
                temperatures[0]
            )));
        }
        if temperatures.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("ladder temperatures must be finite"));
        }
        let ratio = temperatures[1] / temperatures[0];
        if !(ratio > 1.0) {
            return Err(Error::config("ladder temperatures must increase"));
        }
        for w in temperatures.windows(2) {
            let r = w[1] / w[0];
            if (r - ratio).abs() > GEOMETRIC_TOL * ratio {
                return Err(Error::config(format!(
                    "ladder is not geometric: ratio {r} differs from {ratio}"
                )));
            }
        }
        Ok(Self { temperatures })
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    /// Index of the hottest chain.
    pub fn h(&self) -> usize {
        self.temperatures.len() - 1
    }

    pub fn n_chains(&self) -> usize {
        self.temperatures.len()
    }

    pub fn ratio(&self) -> f64 {
        self.temperatures[1] / self.temperatures[0]
    }

    pub fn hottest(&self) -> f64 {
        self.temperatures[self.h()]
    }

    /// `ratio^-C, ..., ratio^-1, 1, t_1, ..., t_H`: the ladder continued below 1.
    pub fn extended_cold(&self, c: usize) -> Vec<f64> {
        let tau = self.ratio();
        (1..=c)
            .rev()
            .map(|k| tau.powi(-(k as i32)))
            .chain(self.temperatures.iter().copied())
            .collect()
    }
}

/// `H = round(ln t_H / ln tau)` rungs (at least one). When `tau^H` misses
/// `t_H` by more than rounding error, the ratio is adjusted to `t_H^(1/H)`
/// so the ladder stays geometric and ends exactly at `t_H`.
pub fn geometric_ladder(t_hot: f64, tau: f64) -> Result<TemperatureLadder> {
    if !(t_hot > 1.0 && t_hot.is_finite()) {
        return Err(Error::config(format!("hottest temperature must exceed 1, got {t_hot}")));
    }
    if !(tau > 1.0 && tau.is_finite()) {
        return Err(Error::config(format!("temperature ratio must exceed 1, got {tau}")));
    }
    let h = ((t_hot.ln() / tau.ln()).round() as i32).max(1);
    let ratio = if (tau.powi(h) - t_hot).abs() <= GEOMETRIC_TOL * t_hot {
        tau
    } else {
        t_hot.powf(1.0 / h as f64)
    };
    let mut temps: Vec<f64> = (0..=h).map(|k| ratio.powi(k)).collect();
    temps[h as usize] = t_hot;
    TemperatureLadder::new(temps)
}

/// Settings for [`tune_ladder`].
#[derive(Clone, Debug)]
pub struct TuneOptions {
    pub floor: f64,
    pub pilot_steps: u64,
    pub s: f64,
    pub max_t: f64,
    /// Smallest ratio tried in the second search.
    pub min_tau: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            floor: 0.2,
            pilot_steps: 10_000,
            s: 0.33,
            max_t: 1e9,
            min_tau: 2.0,
        }
    }
}

/// Two doubling searches. First `t = 2, 4, 8, ...` until a pilot
/// Small-World run on `pi^(1/t)` accepts at least `floor` of its long-range
/// proposals. Then `tau = t, t/2, ...` (not below `min_tau`) until a pilot
/// two-chain run with temperatures `(t/tau, t)` accepts at least `floor` of
/// the colder chain's jumps; the first passing `tau` is kept. Each pilot
/// uses a fresh stream seeded from `rng`.
pub fn tune_ladder<S, T, L, G>(
    target: &T,
    x0: &S,
    local: &L,
    long_range: &G,
    opts: &TuneOptions,
    rng: &mut RngStream,
) -> Result<TemperatureLadder>
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
{
    if !(0.0..=1.0).contains(&opts.floor) {
        return Err(Error::config("acceptance floor must lie in [0, 1]"));
    }
    if opts.pilot_steps == 0 {
        return Err(Error::config("pilot runs need at least one step"));
    }
    let mut t = 2.0;
    loop {
        let mut pilot_rng = RngStream::new(rng.next_u64(), 0);
        let mut chain = ChainState::new(target, x0.clone(), t)?;
        for _ in 0..opts.pilot_steps {
            small_world_step(&mut chain, target, local, long_range, opts.s, &mut pilot_rng);
        }
        if chain.counts().long_rate() >= opts.floor {
            break;
        }
        t *= 2.0;
        if t > opts.max_t {
            return Err(Error::Numerical(format!(
                "long-range acceptance stayed below {} up to t = {}; rescale the target or widen the long-range kernel",
                opts.floor, opts.max_t
            )));
        }
    }
    let min_tau = opts.min_tau.max(1.0 + 1e-9);
    let mut tau = t;
    loop {
        let cfg = SteepConfig {
            ladder: TemperatureLadder::new(vec![1.0, tau])?,
            s: opts.s,
            n_iter: opts.pilot_steps,
            burn_in: opts.pilot_steps / 10,
            thin: 1,
            xi_thin: 1,
            seed: rng.next_u64(),
            repetition: 0,
            recompute_every: 0,
            keep: super::steep::Keep::None,
        };
        // the pilot runs at (t/tau, t); rescaling the target by 1/(t/tau)
        // maps it to the (1, tau) ladder the two-chain driver expects
        let scale = t / tau;
        let scaled = ScaledTarget { base: target, scale };
        let out = steep_two_chain_run(&cfg, &scaled, x0.clone(), local, long_range, |_| {})?;
        let next = tau / 2.0;
        if out.chains[0].counts.long_rate() >= opts.floor || next < min_tau {
            break;
        }
        tau = next;
    }
    geometric_ladder(t, tau)
}

struct ScaledTarget<'a, T: ?Sized> {
    base: &'a T,
    scale: f64,
}

impl<S, T: LogDensity<S> + ?Sized> LogDensity<S> for ScaledTarget<'_, T> {
    fn log_density(&self, x: &S) -> f64 {
        self.base.log_density(x) / self.scale
    }
    fn check_state(&self, x: &S) -> Result<()> {
        self.base.check_state(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposals::ContinuousKernel;
    use crate::target::{ContinuousState, IsotropicGaussian};

    #[test]
    fn default_ladders() {
        let l = geometric_ladder(7776.0, 6.0).unwrap();
        assert_eq!(l.temperatures(), &[1.0, 6.0, 36.0, 216.0, 1296.0, 7776.0]);
        assert_eq!(l.h(), 5);
        let l = geometric_ladder(1000.0, 10.0).unwrap();
        assert_eq!(l.temperatures(), &[1.0, 10.0, 100.0, 1000.0]);
        let l = geometric_ladder(3.7, 3.7).unwrap();
        assert_eq!(l.temperatures(), &[1.0, 3.7]);
    }

    #[test]
    fn off_grid_hottest_rescales_ratio() {
        let l = geometric_ladder(100.0, 6.0).unwrap();
        assert_eq!(l.h(), 3);
        assert_eq!(l.hottest(), 100.0);
        let r = l.ratio();
        for w in l.temperatures().windows(2) {
            assert!((w[1] / w[0] - r).abs() < 1e-9 * r);
        }
        // small t_H still gives one rung
        assert_eq!(geometric_ladder(1.5, 10.0).unwrap().h(), 1);
    }

    #[test]
    fn ladder_errors() {
        assert!(geometric_ladder(1.0, 6.0).is_err());
        assert!(geometric_ladder(10.0, 1.0).is_err());
        assert!(geometric_ladder(f64::INFINITY, 2.0).is_err());
        assert!(TemperatureLadder::new(vec![1.0]).is_err());
        assert!(TemperatureLadder::new(vec![2.0, 4.0]).is_err());
        assert!(TemperatureLadder::new(vec![1.0, 2.0, 5.0]).is_err());
        assert!(TemperatureLadder::new(vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn cold_extension() {
        let l = geometric_ladder(36.0, 6.0).unwrap();
        let e = l.extended_cold(2);
        let want = [1.0 / 36.0, 1.0 / 6.0, 1.0, 6.0, 36.0];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(l.extended_cold(0), l.temperatures());
    }

    fn gaussian_setup() -> (IsotropicGaussian, ContinuousKernel, ContinuousKernel) {
        (
            IsotropicGaussian {
                mean: vec![0.0, 0.0],
                variance: 1.0,
            },
            ContinuousKernel::ball(0.5).unwrap(),
            ContinuousKernel::cauchy(1.0).unwrap(),
        )
    }

    #[test]
    fn unimodal_gaussian_needs_little_heat() {
        let (t, local, long) = gaussian_setup();
        let mut rng = RngStream::new(21, 0);
        let l = tune_ladder(&t, &ContinuousState::zeros(2), &local, &long, &TuneOptions::default(), &mut rng)
            .unwrap();
        assert!(l.hottest() <= 4.0, "{:?}", l);
    }

    #[test]
    fn zero_floor_gives_minimal_ladder() {
        let (t, local, long) = gaussian_setup();
        let mut rng = RngStream::new(22, 0);
        let opts = TuneOptions {
            floor: 0.0,
            pilot_steps: 100,
            ..TuneOptions::default()
        };
        let l = tune_ladder(&t, &ContinuousState::zeros(2), &local, &long, &opts, &mut rng).unwrap();
        assert_eq!(l.temperatures(), &[1.0, 2.0]);
    }

    #[test]
    fn unreachable_floor_reports() {
        let (t, local, long) = gaussian_setup();
        let mut rng = RngStream::new(23, 0);
        let opts = TuneOptions {
            floor: 1.0,
            pilot_steps: 200,
            max_t: 64.0,
            ..TuneOptions::default()
        };
        let err = tune_ladder(&t, &ContinuousState::zeros(2), &local, &long, &opts, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("rescale")));
    }
}
