//! Randomised instance suites for the exact inequalities.

use rand::Rng;

use super::bounds::{cheeger_check, doeblin_bounds, mixture_bound_check, sdt_check, BOUND_SLACK};
use super::finite::{component_chain, FiniteChain, STOCHASTIC_TOL};
use super::grid::{assemble_mh_matrix, assemble_small_world_matrix};
use super::random::{random_lazy_reversible_chain, random_partition, random_proposal_matrix};
use crate::{Result, RngStream};

/// Instances checked and how many broke the inequality. `worst_margin` is the
/// smallest `bound side - other side` seen; negative only on a violation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteTally {
    pub instances: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl SuiteTally {
    fn record(&mut self, margin: f64, holds: bool) {
        if self.instances == 0 || margin < self.worst_margin {
            self.worst_margin = margin;
        }
        self.instances += 1;
        if !holds {
            self.violations += 1;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteReport {
    pub cheeger: SuiteTally,
    pub sdt: SuiteTally,
    pub mixture: SuiteTally,
    pub detailed_balance: SuiteTally,
    pub row_stochastic: SuiteTally,
    /// Minorisation over all entries of the component chain.
    pub doeblin_all: SuiteTally,
    /// Minorisation over off-diagonal entries only; reported, not a theorem.
    pub doeblin_off_diagonal: SuiteTally,
}

impl SuiteReport {
    /// True when every asserted inequality held on every instance.
    pub fn clean(&self) -> bool {
        [
            &self.cheeger,
            &self.sdt,
            &self.mixture,
            &self.detailed_balance,
            &self.row_stochastic,
            &self.doeblin_all,
        ]
        .iter()
        .all(|t| t.violations == 0 && t.instances > 0)
    }
}

fn structural(fc: &FiniteChain, report: &mut SuiteReport) {
    let db = fc.detailed_balance_error();
    report
        .detailed_balance
        .record(BOUND_SLACK - db, db <= BOUND_SLACK);
    let n = fc.n();
    let mut worst = 0.0f64;
    let mut negative = false;
    for i in 0..n {
        let row = fc.matrix().row(i);
        worst = worst.max((row.sum() - 1.0).abs());
        negative |= row.iter().any(|v| *v < 0.0);
    }
    report
        .row_stochastic
        .record(STOCHASTIC_TOL - worst, worst <= STOCHASTIC_TOL && !negative);
}

/// Runs `instances` random cases of each suite from `seed`:
///
/// * Cheeger sandwich and state decomposition on lazy reversible chains
///   (2 to 12 states, 2 to 4 blocks),
/// * the mixture bound on Metropolis-Hastings kernels built from two random
///   lazy proposals and a random stationary vector,
/// * structural checks (detailed balance, stochastic rows) on every assembled
///   matrix, including the component chains, whose minorisation bounds are
///   also tallied.
pub fn run_inequality_suites(instances: usize, seed: u64) -> Result<SuiteReport> {
    let mut rng = RngStream::new(seed, 0);
    let mut report = SuiteReport::default();
    for _ in 0..instances {
        let n = rng.random_range(2..=12);
        let fc = random_lazy_reversible_chain(n, &mut rng)?;
        structural(&fc, &mut report);
        let ch = cheeger_check(&fc)?;
        report
            .cheeger
            .record((ch.gap - ch.lower).min(ch.upper - ch.gap), ch.holds);

        let m = rng.random_range(2..=n.min(4));
        let part = random_partition(n, m, &mut rng)?;
        let sdt = sdt_check(&fc, &part)?;
        report.sdt.record(sdt.lhs - sdt.rhs, sdt.holds);
        let pc = component_chain(&fc, &part)?;
        structural(&pc, &mut report);
        let db = doeblin_bounds(&pc)?;
        report
            .doeblin_all
            .record(db.gap - db.all_entries, db.all_entries_holds);
        report
            .doeblin_off_diagonal
            .record(db.gap - db.off_diagonal, db.off_diagonal_holds);

        let k = rng.random_range(2..=10);
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3) + 1e-3).collect();
        let z: f64 = raw.iter().sum();
        let pi: Vec<f64> = raw.iter().map(|v| v / z).collect();
        let q1 = random_proposal_matrix(k, 0.5, &mut rng)?;
        let q2 = random_proposal_matrix(k, 0.5, &mut rng)?;
        let s = rng.random::<f64>();
        let mix = mixture_bound_check(&pi, &q1, &q2, s)?;
        report.mixture.record(mix.gap - mix.bound, mix.holds);
        structural(&assemble_mh_matrix(&pi, &q1)?, &mut report);
        structural(&assemble_small_world_matrix(&pi, &q1, &q2, s)?, &mut report);
    }
    Ok(report)
}
