use crate::proposals::{MoveKind, Proposal};
use crate::target::{log_density_at, LogDensity};
use crate::{Error, Result, RngStream};

/// Attempt/accept counters split by move kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AcceptCounts {
    pub local_acc: u64,
    pub local_tot: u64,
    pub long_acc: u64,
    pub long_tot: u64,
}

impl AcceptCounts {
    pub fn record(&mut self, kind: MoveKind, accepted: bool) {
        let (acc, tot) = match kind {
            MoveKind::Local => (&mut self.local_acc, &mut self.local_tot),
            MoveKind::LongRange => (&mut self.long_acc, &mut self.long_tot),
        };
        *tot += 1;
        if accepted {
            *acc += 1;
        }
    }

    /// Local acceptance rate, 0 when nothing was attempted.
    pub fn local_rate(&self) -> f64 {
        ratio(self.local_acc, self.local_tot)
    }

    pub fn long_rate(&self) -> f64 {
        ratio(self.long_acc, self.long_tot)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Result of one transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
}

/// One chain at a fixed temperature. `log_pi` caches the untempered
/// log-density of `current`; the chain targets `exp(log_pi / temperature)`.
#[derive(Clone, Debug)]
pub struct ChainState<S> {
    current: S,
    log_pi: f64,
    temperature: f64,
    counts: AcceptCounts,
}

impl<S: Clone> ChainState<S> {
    pub fn new<T: LogDensity<S> + ?Sized>(target: &T, x0: S, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::config(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        let log_pi = log_density_at(target, &x0)?;
        Ok(Self {
            current: x0,
            log_pi,
            temperature,
            counts: AcceptCounts::default(),
        })
    }

    pub fn current(&self) -> &S {
        &self.current
    }

    /// Untempered log-density at the current state.
    pub fn log_pi(&self) -> f64 {
        self.log_pi
    }

    pub fn tempered_log_pi(&self) -> f64 {
        self.log_pi / self.temperature
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn counts(&self) -> AcceptCounts {
        self.counts
    }

    /// Re-evaluates the target at the current state and returns the absolute
    /// difference from the cached value (0 when both are `-inf`).
    pub fn refresh<T: LogDensity<S> + ?Sized>(&mut self, target: &T) -> Result<f64> {
        let fresh = log_density_at(target, &self.current)?;
        let drift = if fresh == self.log_pi {
            0.0
        } else {
            (fresh - self.log_pi).abs()
        };
        self.log_pi = fresh;
        Ok(drift)
    }

    /// Replaces the state without counting a move; `log_pi` must be the
    /// untempered log-density of `x`.
    pub fn set_state(&mut self, x: S, log_pi: f64) {
        self.move_to(x, log_pi);
    }

    fn move_to(&mut self, y: S, log_pi_y: f64) {
        self.current = y;
        self.log_pi = log_pi_y;
    }
}

/// Accept/reject on a log acceptance ratio. `-inf` against a `-inf`
/// current state is rejected; a finite proposal from a `-inf` state gives
/// `+inf` and is accepted. A uniform is consumed only when the outcome is
/// random.
pub fn accept_log(log_a: f64, rng: &mut RngStream) -> bool {
    if log_a.is_nan() {
        return false;
    }
    if log_a >= 0.0 {
        return true;
    }
    if log_a == f64::NEG_INFINITY {
        return false;
    }
    rng.uniform().ln() < log_a
}

/// `(log_pi_y - log_pi_x) / t`, with `-inf` handled so that no `inf - inf` appears.
fn tempered_delta(log_pi_x: f64, log_pi_y: f64, t: f64) -> f64 {
    if log_pi_y == f64::NEG_INFINITY || log_pi_y.is_nan() {
        f64::NEG_INFINITY
    } else if log_pi_x == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (log_pi_y - log_pi_x) / t
    }
}

/// One Metropolis-Hastings transition with `kernel` at the chain's temperature.
pub fn mh_step<S, T, K>(
    chain: &mut ChainState<S>,
    target: &T,
    kernel: &K,
    rng: &mut RngStream,
) -> StepOutcome
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    K: Proposal<S> + ?Sized,
{
    let y = kernel.propose(&chain.current, rng);
    let log_pi_y = target.log_density(&y);
    let mut log_a = tempered_delta(chain.log_pi, log_pi_y, chain.temperature);
    if !kernel.is_symmetric() && log_a.is_finite() {
        log_a += kernel.log_ratio(&chain.current, &y);
    }
    let accepted = accept_log(log_a, rng);
    if accepted {
        chain.move_to(y, log_pi_y);
    }
    let kind = kernel.kind();
    chain.counts.record(kind, accepted);
    StepOutcome { kind, accepted }
}

/// Mixture step: with probability `s` the long-range kernel, otherwise the
/// local one. For `s <= 0` or `s >= 1` no branch uniform is drawn, so the
/// trace equals that of a pure MH chain on the corresponding kernel.
pub fn small_world_step<S, T, L, G>(
    chain: &mut ChainState<S>,
    target: &T,
    local: &L,
    long_range: &G,
    s: f64,
    rng: &mut RngStream,
) -> StepOutcome
where
    S: Clone,
    T: LogDensity<S> + ?Sized,
    L: Proposal<S> + ?Sized,
    G: Proposal<S> + ?Sized,
{
    let long = if s <= 0.0 {
        false
    } else if s >= 1.0 {
        true
    } else {
        rng.uniform() < s
    };
    if long {
        mh_step(chain, target, long_range, rng)
    } else {
        mh_step(chain, target, local, rng)
    }
}

/// Log acceptance ratio for a state `y` drawn from the empirical measure of
/// a chain at temperature `t_hot` and proposed to a chain at `t_cold`:
/// `(1/t_cold - 1/t_hot) * (log_pi_y - log_pi_x)`.
pub fn tempered_jump_log_accept(log_pi_x: f64, log_pi_y: f64, t_cold: f64, t_hot: f64) -> f64 {
    let c = 1.0 / t_cold - 1.0 / t_hot;
    if c == 0.0 {
        return 0.0;
    }
    c * tempered_delta(log_pi_x, log_pi_y, 1.0)
}

/// Jump of `chain` to `y` (with untempered log-density `log_pi_y`) drawn from
/// the stored samples of a hotter chain at `t_hot`.
pub fn tempered_jump_step<S: Clone>(
    chain: &mut ChainState<S>,
    y: S,
    log_pi_y: f64,
    t_hot: f64,
    rng: &mut RngStream,
) -> StepOutcome {
    let log_a = tempered_jump_log_accept(chain.log_pi, log_pi_y, chain.temperature, t_hot);
    let accepted = accept_log(log_a, rng);
    if accepted {
        chain.move_to(y, log_pi_y);
    }
    chain.counts.record(MoveKind::LongRange, accepted);
    StepOutcome {
        kind: MoveKind::LongRange,
        accepted,
    }
}

/// Log acceptance of exchanging the states of a chain at temperature 1
/// (`log_pi_cold`) and one at `t` (`log_pi_hot`): `(1 - 1/t)(log_pi_hot - log_pi_cold)`.
pub fn swap_log_accept(log_pi_cold: f64, log_pi_hot: f64, t: f64) -> f64 {
    tempered_jump_log_accept(log_pi_cold, log_pi_hot, 1.0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proposals::{ContinuousKernel, LatticeStep};
    use crate::target::{
        ContinuousState, FnDensity, IsotropicGaussian, LatticeTarget, MixtureTarget, UniformBox,
    };

    fn gauss1() -> IsotropicGaussian {
        IsotropicGaussian {
            mean: vec![0.0],
            variance: 1.0,
        }
    }

    struct Fixed(f64, MoveKind);
    impl Proposal<ContinuousState> for Fixed {
        fn propose(&self, _x: &ContinuousState, _rng: &mut RngStream) -> ContinuousState {
            ContinuousState::from([self.0])
        }
        fn kind(&self) -> MoveKind {
            self.1
        }
    }

    #[test]
    fn uphill_always_accepted() {
        let t = gauss1();
        let mut rng = RngStream::new(1, 0);
        let mut c = ChainState::new(&t, ContinuousState::from([2.0]), 1.0).unwrap();
        let o = mh_step(&mut c, &t, &Fixed(0.5, MoveKind::Local), &mut rng);
        assert!(o.accepted);
        assert_eq!(c.current().coords(), &[0.5]);
        assert_eq!(c.log_pi(), t.log_density(&ContinuousState::from([0.5])));
    }

    #[test]
    fn zero_density_never_accepted() {
        let t = UniformBox {
            lo: vec![0.0],
            hi: vec![1.0],
        };
        let mut rng = RngStream::new(2, 0);
        let mut c = ChainState::new(&t, ContinuousState::from([0.5]), 1.0).unwrap();
        for _ in 0..1000 {
            assert!(!mh_step(&mut c, &t, &Fixed(3.0, MoveKind::Local), &mut rng).accepted);
        }
        assert_eq!(c.counts().local_tot, 1000);
        assert_eq!(c.counts().local_acc, 0);
    }

    #[test]
    fn minus_infinity_start_accepts_finite() {
        let t = UniformBox {
            lo: vec![0.0],
            hi: vec![1.0],
        };
        let mut rng = RngStream::new(3, 0);
        let mut c = ChainState::new(&t, ContinuousState::from([5.0]), 1.0).unwrap();
        assert_eq!(c.log_pi(), f64::NEG_INFINITY);
        // -inf to -inf stays put
        assert!(!mh_step(&mut c, &t, &Fixed(7.0, MoveKind::Local), &mut rng).accepted);
        assert!(mh_step(&mut c, &t, &Fixed(0.3, MoveKind::Local), &mut rng).accepted);
    }

    #[test]
    fn flat_target_accepts_everything() {
        let t = FnDensity(|_: &ContinuousState| 0.0);
        let k = ContinuousKernel::gaussian(3.0).unwrap();
        let mut rng = RngStream::new(4, 0);
        let mut c = ChainState::new(&t, ContinuousState::from([0.0, 0.0]), 1.0).unwrap();
        for _ in 0..10_000 {
            mh_step(&mut c, &t, &k, &mut rng);
        }
        assert_eq!(c.counts().local_rate(), 1.0);
    }

    #[test]
    fn long_range_fraction_is_binomial() {
        let t = gauss1();
        let local = ContinuousKernel::ball(0.5).unwrap();
        let long = ContinuousKernel::cauchy(1.0).unwrap();
        let mut rng = RngStream::new(5, 0);
        let mut c = ChainState::new(&t, ContinuousState::from([0.0]), 1.0).unwrap();
        let n = 100_000u64;
        let s = 0.33;
        for _ in 0..n {
            small_world_step(&mut c, &t, &local, &long, s, &mut rng);
        }
        let frac = c.counts().long_tot as f64 / n as f64;
        let tol = 3.0 * (s * (1.0 - s) / n as f64).sqrt();
        assert!((frac - s).abs() <= tol, "{frac}");
    }

    #[test]
    fn s_zero_reproduces_local_mh() {
        let t = MixtureTarget::default_needles();
        let local = ContinuousKernel::ball(0.1).unwrap();
        let long = ContinuousKernel::cauchy(1.0).unwrap();
        let mut r1 = RngStream::new(6, 0);
        let mut r2 = RngStream::new(6, 0);
        let x0 = ContinuousState::from([0.0, 0.0]);
        let mut a = ChainState::new(&t, x0.clone(), 1.0).unwrap();
        let mut b = ChainState::new(&t, x0, 1.0).unwrap();
        for _ in 0..5000 {
            small_world_step(&mut a, &t, &local, &long, 0.0, &mut r1);
            mh_step(&mut b, &t, &local, &mut r2);
            assert_eq!(a.current(), b.current());
        }
    }

    #[test]
    fn small_world_on_lattice_matches_stationary() {
        // five-state lattice, local +-1 and uniform long-range
        let lw = vec![0.0, -2.0, 1.0, -0.5, 0.3];
        let t = LatticeTarget::new(lw).unwrap();
        let pi = t.probabilities();
        let local = LatticeStep { max_step: 1 };
        let long = crate::proposals::LatticeUniform { n: 5 };
        let mut rng = RngStream::new(9, 0);
        let mut c = ChainState::new(&t, 0i64, 1.0).unwrap();
        let mut counts = [0u64; 5];
        let n = 400_000;
        for _ in 0..n {
            small_world_step(&mut c, &t, &local, &long, 0.3, &mut rng);
            counts[*c.current() as usize] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&pi)
            .map(|(c, p)| (*c as f64 / n as f64 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn jump_ratio_values() {
        assert_eq!(tempered_jump_log_accept(-3.0, -7.0, 4.0, 4.0), 0.0);
        let d = -2.5;
        assert!((tempered_jump_log_accept(0.0, d, 1.0, 6.0) - (1.0 - 1.0 / 6.0) * d).abs() < 1e-15);
        let v = tempered_jump_log_accept(0.0, -1.0, 1.0, 6.0);
        assert!((v + 5.0 / 6.0).abs() < 1e-15);
        // the four densities written out explicitly
        let (lx, ly) = (-1.3, -2.3);
        let explicit = (ly - lx) + (lx / 6.0 - ly / 6.0);
        assert!((explicit - tempered_jump_log_accept(lx, ly, 1.0, 6.0)).abs() < 1e-15);
        assert!((v.exp() - 0.4346).abs() < 1e-4);
    }

    #[test]
    fn swap_ratio_values() {
        assert_eq!(swap_log_accept(-4.0, -4.0, 10.0), 0.0);
        assert_eq!(swap_log_accept(-1.0, -9.0, 1.0), 0.0);
        // a hot chain sitting higher than the cold one is always swapped in
        assert!(swap_log_accept(-9.0, -1.0, 10.0) > 0.0);
    }

    #[test]
    fn refresh_reports_zero_for_consistent_cache() {
        let t = gauss1();
        let mut c = ChainState::new(&t, ContinuousState::from([1.0]), 2.0).unwrap();
        assert_eq!(c.refresh(&t).unwrap(), 0.0);
        assert!((c.tempered_log_pi() - c.log_pi() / 2.0).abs() == 0.0);
        assert!(ChainState::new(&t, ContinuousState::from([1.0]), 0.0).is_err());
        assert!(matches!(
            ChainState::new(&t, ContinuousState::from([1.0, 2.0]), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn counters_consistent(seed in any::<u64>(), s in 0.01f64..0.99, steps in 1usize..300) {
                let t = MixtureTarget::default_needles();
                let local = ContinuousKernel::ball(0.1).unwrap();
                let long = ContinuousKernel::cauchy(1.0).unwrap();
                let mut rng = RngStream::new(seed, 0);
                let mut c = ChainState::new(&t, ContinuousState::from([0.0, 0.0]), 3.0).unwrap();
                let mut prev = c.counts();
                for _ in 0..steps {
                    small_world_step(&mut c, &t, &local, &long, s, &mut rng);
                    let k = c.counts();
                    prop_assert!(k.local_acc <= k.local_tot && k.long_acc <= k.long_tot);
                    prop_assert!(k.local_tot >= prev.local_tot && k.long_tot >= prev.long_tot);
                    prop_assert!(k.local_acc >= prev.local_acc && k.long_acc >= prev.long_acc);
                    prev = k;
                    prop_assert_eq!(c.log_pi(), t.log_density(c.current()));
                }
                prop_assert_eq!(prev.local_tot + prev.long_tot, steps as u64);
            }

            #[test]
            fn tempering_order(lx in -50.0f64..0.0, ly in -50.0f64..0.0, t in 1.0f64..1e4) {
                // jump ratio has the sign of the untempered difference
                let v = tempered_jump_log_accept(lx, ly, 1.0, t);
                prop_assert!(v == 0.0 || v.signum() == (ly - lx).signum());
            }
        }
    }
}
