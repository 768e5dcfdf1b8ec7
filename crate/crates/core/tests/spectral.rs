use nalgebra::DMatrix;
use proptest::prelude::*;
use steep::spectral::*;
use steep::target::{Exponential, LaplaceMixture};
use steep::RngStream;

#[test]
fn random_inequality_suites_are_clean() {
    let r = run_inequality_suites(100, 2024).unwrap();
    println!("{r:#?}");
    assert_eq!(r.cheeger.instances, 100);
    assert!(r.clean(), "{r:#?}");
}

#[test]
fn needle_scan_slopes() {
    let (target, cfg) = ScalingConfig::needle_pair();
    let rep = temperature_scaling_experiment(&target, &cfg, &ScalingConfig::needle_pair_mode).unwrap();
    for r in &rep.rows {
        println!("{r:?}");
    }
    println!("slopes {:?} {:?}", rep.slope_ec, rep.slope_sc);
    // proposing from the target itself saturates the sampling gap at t = 1
    assert!(rep.rows[0].saturated_sc);
    assert!(rep.rows.iter().skip(1).all(|r| !r.saturated_sc && !r.saturated_ec));
    let max_sc = rep.rows.iter().map(|r| r.gap_sc).fold(0.0, f64::max);
    assert_eq!(rep.rows[0].gap_sc, max_sc);
    assert!(rep.ec_band_pass, "{:?}", rep.slope_ec);
    assert!(rep.sc_band_pass, "{:?}", rep.slope_sc);
    assert!(rep.sc_monotone);
    assert!(rep.passes());
}

#[test]
fn sampling_gap_order_at_t6() {
    let (target, mut cfg) = ScalingConfig::needle_pair();
    cfg.temperatures = vec![2.0, 6.0, 16.0];
    let rep = temperature_scaling_experiment(&target, &cfg, &ScalingConfig::needle_pair_mode).unwrap();
    let (g2, g6, g16) = (rep.rows[0].gap_sc, rep.rows[1].gap_sc, rep.rows[2].gap_sc);
    // lower envelope c t^-2 through t = 2; upper envelope c' t^-1 through the
    // largest swept temperature, where gap * t has levelled off
    assert!(g6 >= g2 * 4.0 / 36.0, "{g6}");
    assert!(g6 <= g16 * 16.0 / 6.0, "{g6}");
}

#[test]
fn needle_grid_decomposition_holds() {
    let (target, cfg) = ScalingConfig::needle_pair();
    let d = discretize_target(&target, &cfg.grid, 4.0).unwrap();
    let ql = local_walk_matrix(&cfg.grid, &d.cells, cfg.local_radius).unwrap();
    let qu = uniform_proposal_matrix(&cfg.grid, &d.cells);
    let p = assemble_small_world_matrix(&d.pi, &ql, &qu, cfg.s).unwrap();
    let part = Partition::new(
        d.cells
            .iter()
            .map(|&c| ScalingConfig::needle_pair_mode(&cfg.grid.center(c)))
            .collect(),
    )
    .unwrap();
    let r = sdt_check(&p.lazy(), &part).unwrap();
    println!("lhs {} rhs {} ratio {}", r.lhs, r.rhs, r.lhs / r.rhs);
    assert!(r.holds);
}

#[test]
fn symmetric_modes_give_symmetric_component() {
    let t = LaplaceMixture::new(vec![(0.5, vec![-5.0], 0.5), (0.5, vec![5.0], 0.5)]).unwrap();
    let g = GridSpec::line(-10.0, 10.0, 40).unwrap();
    let d = discretize_target(&t, &g, 3.0).unwrap();
    let ql = local_walk_matrix(&g, &d.cells, 1).unwrap();
    let qu = uniform_proposal_matrix(&g, &d.cells);
    let p = assemble_small_world_matrix(&d.pi, &ql, &qu, 0.33).unwrap();
    let part = Partition::new(d.cells.iter().map(|&c| usize::from(g.center(c)[0] > 0.0)).collect()).unwrap();
    let pc = component_chain(&p, &part).unwrap();
    assert!((pc.get(0, 1) - pc.get(1, 0)).abs() < 1e-15);
    assert!(pc.is_reversible());
}

#[test]
fn exponential_grid_beats_ball_bound() {
    // Exp(1) on 20 cells of width 0.5; a ball of radius 1 covers two cells each side
    let g = GridSpec::line(0.0, 10.0, 20).unwrap();
    let d = discretize_target(&Exponential { rate: 1.0 }, &g, 1.0).unwrap();
    let q = local_walk_matrix(&g, &d.cells, 2).unwrap();
    let p = assemble_mh_matrix(&d.pi, &q).unwrap();
    let h = conductance(&p, CutMode::Exact).unwrap();
    // mean distance from the barycentre of Exp(1): E|X - 1| = 2/e
    let bound = local_conductance_lower_bound(1.0, 1.0, 1, 2.0 / std::f64::consts::E).unwrap();
    assert!(h.exact);
    assert!(h.value >= bound, "{} < {bound}", h.value);
}

#[test]
fn exponential_peak_ratio_equality() {
    let f = |x: f64| if x < 0.0 { f64::NEG_INFINITY } else { -x };
    for t in [2.0, 4.0, 8.0] {
        let r = peak_ratio_check(&f, 0.0, f64::INFINITY, 0.0, t).unwrap();
        assert!((r.ratio - 1.0 / t).abs() <= 1e-6, "t = {t}: {}", r.ratio);
    }
    let g = |x: f64| -0.5 * x * x;
    let r = peak_ratio_check(&g, f64::NEG_INFINITY, f64::INFINITY, 0.0, 4.0).unwrap();
    assert!((r.ratio - 0.5).abs() < 1e-9 && r.ratio >= 0.25);
    let r = peak_ratio_check(&g, f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0).unwrap();
    assert!((r.ratio - 1.0).abs() < 1e-12);
}

#[test]
fn piecewise_normalisations_stay_comparable() {
    // Laplace pieces: I_1/I_2 = (w1/w2)^(1/t) (b1/b2)^(1-1/t), so each ratio to
    // the mean stays between the values at the two ends of that interpolation
    let (w1, b1, w2, b2) = (0.2, 0.3, 0.8, 2.0);
    let l1 = move |x: f64| -(x + 40.0).abs() / b1 - (2.0 * b1).ln();
    let l2 = move |x: f64| -(x - 40.0).abs() / b2 - (2.0 * b2).ln();
    let inf = f64::INFINITY;
    let pieces = [
        Peak { weight: w1, log_density: &l1, lo: -inf, hi: inf, mode: -40.0 },
        Peak { weight: w2, log_density: &l2, lo: -inf, hi: inf, mode: 40.0 },
    ];
    let ts: Vec<f64> = (0..=20).map(|k| 100f64.powf(k as f64 / 20.0)).collect();
    let rep = normalization_ratio_check(&pieces, &ts).unwrap();
    let first = |r: f64| 2.0 * r / (1.0 + r);
    let (ra, rb) = (w1 / w2, b1 / b2);
    let lo = first(ra.min(rb));
    let hi = 2.0 - lo;
    assert!(rep.min >= lo - 1e-9 && rep.max <= hi + 1e-9, "{rep:?}");
    assert!(rep.min > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembled_chains_are_valid(seed in any::<u64>(), n in 2usize..9, s in 0.0f64..=1.0) {
        let mut rng = RngStream::new(seed, 1);
        let raw: Vec<f64> = (0..n).map(|k| 1.0 + ((seed >> (k % 60)) & 7) as f64).collect();
        let z: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let q1 = random_proposal_matrix(n, 0.0, &mut rng).unwrap();
        let q2 = random_proposal_matrix(n, 0.3, &mut rng).unwrap();
        let p = assemble_small_world_matrix(&pi, &q1, &q2, s).unwrap();
        prop_assert!(p.is_reversible());
        prop_assert!(p.detailed_balance_error() <= 1e-12);
        let hot: Vec<f64> = pi.iter().map(|v| v.sqrt()).collect();
        let zh: f64 = hot.iter().sum();
        let hot: Vec<f64> = hot.iter().map(|v| v / zh).collect();
        let ideal = assemble_idealized_sampling_matrix(&pi, &hot, &q1, s).unwrap();
        prop_assert!(ideal.is_reversible());
        // pi is stationary: FiniteChain::new would have refused otherwise
        prop_assert_eq!(ideal.pi().len(), n);
    }

    #[test]
    fn restriction_and_components_stay_reversible(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = RngStream::new(seed, 2);
        let fc = random_lazy_reversible_chain(n, &mut rng).unwrap();
        let part = random_partition(n, 2, &mut rng).unwrap();
        let pc = component_chain(&fc, &part).unwrap();
        prop_assert!(pc.is_reversible());
        let masses: Vec<f64> = part.blocks().iter().map(|b| b.iter().map(|&x| fc.pi()[x]).sum()).collect();
        for (a, b) in pc.pi().iter().zip(&masses) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for block in part.blocks() {
            prop_assert!(restricted_chain(&fc, &block).unwrap().is_reversible());
        }
        let ident = FiniteChain::new(DMatrix::identity(n, n), fc.pi().to_vec()).unwrap();
        prop_assert!(spectral_gap(&ident).unwrap() < 1e-12);
    }
}
