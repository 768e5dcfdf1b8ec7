use steep::proposals::{ContinuousKernel, LatticeStep, LatticeUniform, MoveKind};
use steep::samplers::{
    exploring_run, geometric_ladder, mh_step, optimize_run, small_world_step, steep_run,
    steep_two_chain_run, tune_ladder, ChainState, Keep, SteepConfig, TemperatureLadder,
    TraceEvent, TuneOptions,
};
use steep::target::{IsotropicGaussian, LatticeTarget, MixtureTarget, Rosenbrock};
use steep::{ContinuousState, LogDensity, RngStream};

type Event = (usize, u64, Vec<f64>, u64, bool, bool);

fn capture(log: &mut Vec<Event>) -> impl FnMut(&TraceEvent<'_, ContinuousState>) + '_ {
    |e| {
        log.push((
            e.chain,
            e.iteration,
            e.state.coords().to_vec(),
            e.log_pi.to_bits(),
            e.outcome.kind == MoveKind::LongRange,
            e.outcome.accepted,
        ))
    }
}

fn needles_kernels() -> (ContinuousKernel, ContinuousKernel) {
    (
        ContinuousKernel::ball(0.1).unwrap(),
        ContinuousKernel::cauchy(1.0).unwrap(),
    )
}

fn origin() -> ContinuousState {
    ContinuousState::from([0.0, 0.0])
}

fn small_cfg(ladder: TemperatureLadder, seed: u64) -> SteepConfig {
    SteepConfig {
        n_iter: 3000,
        burn_in: 200,
        ..SteepConfig::new(ladder, seed)
    }
}

#[test]
fn one_rung_ladder_is_the_two_chain_sampler() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let cfg = small_cfg(geometric_ladder(36.0, 36.0).unwrap(), 5);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let ra = steep_run(&cfg, &target, origin(), &local, &long, capture(&mut a)).unwrap();
    let rb = steep_two_chain_run(&cfg, &target, origin(), &local, &long, capture(&mut b)).unwrap();
    assert_eq!(a.len(), 2 * 3200);
    assert_eq!(a, b);
    assert_eq!(ra.chains, rb.chains);
    assert_eq!(ra.kept, rb.kept);
}

#[test]
fn hottest_chain_ignores_colder_ones() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let cfg = small_cfg(geometric_ladder(7776.0, 6.0).unwrap(), 9);
    let mut full = Vec::new();
    let mut alone = Vec::new();
    steep_run(&cfg, &target, origin(), &local, &long, capture(&mut full)).unwrap();
    exploring_run(&cfg, &target, origin(), &local, &long, capture(&mut alone)).unwrap();
    let hottest: Vec<Event> = full.into_iter().filter(|e| e.0 == 5).collect();
    assert_eq!(hottest.len(), 3200);
    assert_eq!(hottest, alone);
}

#[test]
fn runs_are_reproducible() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let cfg = small_cfg(geometric_ladder(7776.0, 6.0).unwrap(), 77);
    let mut a = Vec::new();
    let mut b = Vec::new();
    steep_run(&cfg, &target, origin(), &local, &long, capture(&mut a)).unwrap();
    steep_run(&cfg, &target, origin(), &local, &long, capture(&mut b)).unwrap();
    assert_eq!(a, b);
    let mut c = Vec::new();
    let other = SteepConfig { seed: 78, ..cfg };
    steep_run(&other, &target, origin(), &local, &long, capture(&mut c)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn sweep_order_is_hottest_first() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let cfg = SteepConfig {
        n_iter: 5,
        burn_in: 0,
        thin: 1,
        ..SteepConfig::new(geometric_ladder(216.0, 6.0).unwrap(), 1)
    };
    let mut log = Vec::new();
    steep_run(&cfg, &target, origin(), &local, &long, capture(&mut log)).unwrap();
    let order: Vec<(u64, usize)> = log.iter().map(|e| (e.1, e.0)).collect();
    let want: Vec<(u64, usize)> = (1..=5).flat_map(|i| [(i, 3), (i, 2), (i, 1), (i, 0)]).collect();
    assert_eq!(order, want);
}

#[test]
fn near_unit_temperature_accepts_jumps() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let cfg = SteepConfig {
        n_iter: 20_000,
        burn_in: 1000,
        ..SteepConfig::new(TemperatureLadder::new(vec![1.0, 1.0001]).unwrap(), 2)
    };
    let out = steep_two_chain_run(&cfg, &target, origin(), &local, &long, |_| {}).unwrap();
    let c = out.chains[0].counts;
    assert!(c.long_tot > 5000);
    assert!(c.long_rate() > 0.98, "{}", c.long_rate());
}

fn two_mode_lattice(n: i64) -> LatticeTarget {
    // two sharp peaks at a quarter and three quarters of the range
    let lw = (0..n)
        .map(|i| {
            let x = i as f64;
            let a = -((x - n as f64 * 0.25) / 2.0).powi(2);
            let b = -((x - n as f64 * 0.75) / 2.0).powi(2) + 0.7;
            a.max(b) + (1.0 + (-(a - b).abs()).exp()).ln()
        })
        .collect();
    LatticeTarget::new(lw).unwrap()
}

#[test]
fn two_chain_sampler_matches_lattice_distribution() {
    let n = 60;
    let target = two_mode_lattice(n);
    let pi = target.probabilities();
    let cfg = SteepConfig {
        n_iter: 1_000_000,
        burn_in: 1000,
        thin: 1,
        keep: Keep::None,
        ..SteepConfig::new(TemperatureLadder::new(vec![1.0, 8.0]).unwrap(), 31)
    };
    let mut counts = vec![0u64; n as usize];
    let out = steep_two_chain_run(
        &cfg,
        &target,
        0i64,
        &LatticeStep { max_step: 2 },
        &LatticeUniform { n },
        |e| {
            if e.chain == 0 && e.iteration > cfg.burn_in {
                counts[*e.state as usize] += 1;
            }
        },
    )
    .unwrap();
    let total: u64 = counts.iter().sum();
    let tv: f64 = counts
        .iter()
        .zip(&pi)
        .map(|(c, p)| (*c as f64 / total as f64 - p).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.03, "tv {tv}");
    assert!(out.chains[0].counts.long_rate() > 0.05);
}

#[test]
fn ball_only_chain_stays_in_first_mode() {
    let target = MixtureTarget::default_needles();
    let ball = ContinuousKernel::ball(0.1).unwrap();
    let far = ContinuousState::from([5.0, 5.0]);
    for seed in 0..3 {
        let mut rng = RngStream::new(seed, 0);
        let mut c = ChainState::new(&target, origin(), 1.0).unwrap();
        for _ in 0..1_000_000 {
            mh_step(&mut c, &target, &ball, &mut rng);
            assert!(c.current().distance(&far) >= 1.0);
        }
    }
}

#[test]
fn exploring_acceptance_grows_with_temperature() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let mut prev = -1.0;
    for t in [1.0, 6.0, 36.0, 216.0] {
        let mut rng = RngStream::new(4, 0);
        let mut c = ChainState::new(&target, origin(), t).unwrap();
        for _ in 0..200_000 {
            small_world_step(&mut c, &target, &local, &long, 0.33, &mut rng);
        }
        let rate = c.counts().long_rate();
        assert!(rate >= prev, "t={t}: {rate} < {prev}");
        prev = rate;
    }
}

#[test]
fn tuned_ladder_keeps_jump_acceptance_high() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let mut rng = RngStream::new(100, 0);
    let ladder = tune_ladder(&target, &origin(), &local, &long, &TuneOptions::default(), &mut rng).unwrap();
    let n = ladder.n_chains();
    let mut acc = vec![0u64; n];
    let mut tot = vec![0u64; n];
    for rep in 0..5 {
        let cfg = SteepConfig {
            repetition: rep,
            keep: Keep::None,
            ..SteepConfig::new(ladder.clone(), 100)
        };
        let out = steep_run(&cfg, &target, origin(), &local, &long, |_| {}).unwrap();
        for (i, c) in out.chains.iter().enumerate() {
            acc[i] += c.counts.long_acc;
            tot[i] += c.counts.long_tot;
        }
    }
    // every chain below the hottest samples by jumping into the next one up
    for i in 0..n - 1 {
        let rate = acc[i] as f64 / tot[i] as f64;
        assert!(rate >= 0.2, "{:?} chain {i}: {rate}", ladder.temperatures());
    }
}

fn exploring_long_rate(t: f64, seed: u64) -> f64 {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let mut rng = RngStream::new(seed, 0);
    let mut c = ChainState::new(&target, origin(), t).unwrap();
    for _ in 0..100_000 {
        small_world_step(&mut c, &target, &local, &long, 0.33, &mut rng);
    }
    c.counts().long_rate()
}

#[test]
fn tuned_needles_ladder() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let mut hottest = Vec::new();
    for seed in 0..20 {
        let mut rng = RngStream::new(seed, 0);
        let ladder = tune_ladder(&target, &origin(), &local, &long, &TuneOptions::default(), &mut rng).unwrap();
        let (th, tau) = (ladder.hottest(), ladder.ratio());
        assert!((3.0..=12.0).contains(&tau), "seed {seed}: tau = {tau}");
        hottest.push(th);
    }
    // the hottest temperature is where a long pilot crosses the floor; check
    // it against long exploring runs on either side of the selected range
    let lo = hottest.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = hottest.iter().cloned().fold(0.0, f64::max);
    assert!(exploring_long_rate(lo / 2.0, 1) < 0.2, "{hottest:?}");
    assert!(exploring_long_rate(hi, 2) >= 0.2, "{hottest:?}");
    assert!(lo >= 16.0 && hi <= 256.0, "{hottest:?}");
}

#[test]
fn optimizer_finds_a_needle() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let modes = [ContinuousState::from([0.0, 0.0]), ContinuousState::from([5.0, 5.0])];
    for seed in 0..3 {
        let cfg = SteepConfig {
            keep: Keep::None,
            ..SteepConfig::new(geometric_ladder(7776.0, 6.0).unwrap(), seed)
        };
        let start = ContinuousState::from([2.0, -3.0]);
        let out = optimize_run(&cfg, 3, &target, start, &local, &long, |_| {}).unwrap();
        assert_eq!(out.temperatures.len(), 9);
        let d = modes.iter().map(|m| m.distance(&out.best)).fold(f64::INFINITY, f64::min);
        assert!(d < 0.05, "seed {seed}: {d}");
        assert_eq!(out.best_log_pi, target.log_density(&out.best));
    }
}

#[test]
fn optimizer_on_unimodal_targets() {
    let g = IsotropicGaussian {
        mean: vec![1.5, -0.5],
        variance: 1.0,
    };
    let local = ContinuousKernel::ball(0.1).unwrap();
    let long = ContinuousKernel::cauchy(1.0).unwrap();
    let cfg = SteepConfig {
        keep: Keep::None,
        ..SteepConfig::new(geometric_ladder(100.0, 10.0).unwrap(), 3)
    };
    let out = optimize_run(&cfg, 3, &g, origin(), &local, &long, |_| {}).unwrap();
    assert!(out.best.distance(&ContinuousState::from([1.5, -0.5])) < 0.01);

    let r = Rosenbrock {
        a: 1.0,
        b: 10.0,
        shift: [2.0, -1.0],
    };
    let out = optimize_run(&cfg, 3, &r, origin(), &local, &long, |_| {}).unwrap();
    let opt = ContinuousState::from(r.argmax());
    assert!(out.best.distance(&opt) < 0.05, "{:?}", out.best);
}

#[test]
fn optimizer_without_cold_rungs_is_plain_run() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let cfg = small_cfg(geometric_ladder(216.0, 6.0).unwrap(), 8);
    let mut a = Vec::new();
    let mut b = Vec::new();
    steep_run(&cfg, &target, origin(), &local, &long, capture(&mut a)).unwrap();
    optimize_run(&cfg, 0, &target, origin(), &local, &long, capture(&mut b)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_validation() {
    let target = MixtureTarget::default_needles();
    let (local, long) = needles_kernels();
    let ladder = geometric_ladder(36.0, 6.0).unwrap();
    for s in [0.0, 1.0, -0.1, f64::NAN] {
        let cfg = SteepConfig { s, ..small_cfg(ladder.clone(), 1) };
        assert!(steep_run(&cfg, &target, origin(), &local, &long, |_| {}).is_err());
    }
    let cfg = SteepConfig { thin: 0, ..small_cfg(ladder.clone(), 1) };
    assert!(steep_run(&cfg, &target, origin(), &local, &long, |_| {}).is_err());
    // the two-chain driver needs exactly two temperatures
    let cfg = small_cfg(ladder, 1);
    assert!(steep_two_chain_run(&cfg, &target, origin(), &local, &long, |_| {}).is_err());
    let bad = ContinuousState::from([0.0]);
    let cfg = small_cfg(geometric_ladder(6.0, 6.0).unwrap(), 1);
    assert!(steep_run(&cfg, &target, bad, &local, &long, |_| {}).is_err());
}
