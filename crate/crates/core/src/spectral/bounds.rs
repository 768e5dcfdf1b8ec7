use nalgebra::DMatrix;

use super::finite::{
    component_chain, conductance, restricted_chain, spectral_gap, CutMode, FiniteChain, Partition,
};
use super::grid::assemble_mh_matrix;
use crate::{Error, Result};

/// Slack allowed when checking an inequality between computed quantities.
pub const BOUND_SLACK: f64 = 1e-9;

/// `h^2 / 2 <= Gap <= 2 h`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheegerCheck {
    pub h: f64,
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Gap here is `1 - max |lambda|`, so the lower bound is only guaranteed for
/// chains whose spectrum is nonnegative (lazy chains); a periodic chain has
/// positive conductance and zero gap.
pub fn cheeger_check(fc: &FiniteChain) -> Result<CheegerCheck> {
    let h = conductance(fc, CutMode::Exact)?.value;
    let gap = spectral_gap(fc)?;
    let lower = h * h / 2.0;
    let upper = 2.0 * h;
    Ok(CheegerCheck {
        h,
        gap,
        lower,
        upper,
        holds: lower <= gap + BOUND_SLACK && gap <= upper + BOUND_SLACK,
    })
}

/// `Gap(P) >= 1/2 Gap(P_c) min_i Gap(P_{A_i})`.
#[derive(Clone, Debug, PartialEq)]
pub struct SdtCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub component_gap: f64,
    pub min_restricted_gap: f64,
    pub holds: bool,
}

pub fn sdt_check(fc: &FiniteChain, part: &Partition) -> Result<SdtCheck> {
    let lhs = spectral_gap(fc)?;
    let component_gap = spectral_gap(&component_chain(fc, part)?)?;
    let mut min_restricted_gap = f64::INFINITY;
    for block in part.blocks() {
        min_restricted_gap = min_restricted_gap.min(spectral_gap(&restricted_chain(fc, &block)?)?);
    }
    let rhs = 0.5 * component_gap * min_restricted_gap;
    Ok(SdtCheck {
        lhs,
        rhs,
        component_gap,
        min_restricted_gap,
        holds: lhs + BOUND_SLACK >= rhs,
    })
}

/// `Gap((1-s) P_1 + s P_2) >= 1/2 max((1-s)^2 h_1^2, s^2 h_2^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureCheck {
    pub gap: f64,
    pub h_first: f64,
    pub h_second: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Builds `P_1 = MH(pi, q_first)`, `P_2 = MH(pi, q_second)` and their mixture,
/// and compares the mixture's gap with the conductance bound.
pub fn mixture_bound_check(
    pi: &[f64],
    q_first: &DMatrix<f64>,
    q_second: &DMatrix<f64>,
    s: f64,
) -> Result<MixtureCheck> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::config(format!("mixture weight must lie in [0, 1], got {s}")));
    }
    let p1 = assemble_mh_matrix(pi, q_first)?;
    let p2 = assemble_mh_matrix(pi, q_second)?;
    let mixed = p1.matrix() * (1.0 - s) + p2.matrix() * s;
    let p = FiniteChain::new(mixed, p1.pi().to_vec())?;
    let gap = spectral_gap(&p)?;
    let h_first = conductance(&p1, CutMode::Exact)?.value;
    let h_second = conductance(&p2, CutMode::Exact)?.value;
    let a = (1.0 - s) * h_first;
    let b = s * h_second;
    let bound = 0.5 * (a * a).max(b * b);
    Ok(MixtureCheck {
        gap,
        h_first,
        h_second,
        bound,
        holds: gap + BOUND_SLACK >= bound,
    })
}

/// Minorisation lower bounds on the gap of a small chain: `m` times the
/// smallest entry over all of `P`, and `m` times the smallest off-diagonal
/// entry. Only the first is a theorem for general chains.
#[derive(Clone, Debug, PartialEq)]
pub struct DoeblinBounds {
    pub gap: f64,
    pub all_entries: f64,
    pub off_diagonal: f64,
    pub all_entries_holds: bool,
    pub off_diagonal_holds: bool,
}

pub fn doeblin_bounds(pc: &FiniteChain) -> Result<DoeblinBounds> {
    let m = pc.n();
    let gap = spectral_gap(pc)?;
    let p = pc.matrix();
    let all_min = p.iter().copied().fold(f64::INFINITY, f64::min);
    let off_min = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| p[(i, j)])
        .fold(f64::INFINITY, f64::min);
    let all_entries = m as f64 * all_min;
    // a one-state chain has no off-diagonal entries
    let off_diagonal = if off_min.is_finite() { m as f64 * off_min } else { 0.0 };
    Ok(DoeblinBounds {
        gap,
        all_entries,
        off_diagonal,
        all_entries_holds: gap + BOUND_SLACK >= all_entries,
        off_diagonal_holds: gap + BOUND_SLACK >= off_diagonal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_state_checks() {
        let p = 0.3;
        let c = FiniteChain::new(
            DMatrix::from_row_slice(2, 2, &[1.0 - p, p, p, 1.0 - p]),
            vec![0.5, 0.5],
        )
        .unwrap();
        let ch = cheeger_check(&c).unwrap();
        assert_abs_diff_eq!(ch.h, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(ch.gap, 0.6, epsilon = 1e-12);
        assert!(ch.holds);
        let d = doeblin_bounds(&c).unwrap();
        assert_abs_diff_eq!(d.all_entries, 0.6, epsilon = 1e-15);
        assert!(d.all_entries_holds && d.off_diagonal_holds);
    }

    #[test]
    fn periodic_chain_breaks_the_lower_bound() {
        let c = FiniteChain::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), vec![0.5, 0.5]).unwrap();
        let ch = cheeger_check(&c).unwrap();
        assert_eq!(ch.h, 1.0);
        assert_abs_diff_eq!(ch.gap, 0.0, epsilon = 1e-12);
        assert!(!ch.holds);
        assert!(cheeger_check(&c.lazy()).unwrap().holds);
        // off-diagonal minorisation overshoots the gap here
        let d = doeblin_bounds(&c).unwrap();
        assert!(d.all_entries_holds);
        assert!(!d.off_diagonal_holds);
    }

    #[test]
    fn trivial_partition_sdt() {
        let c = FiniteChain::new(
            DMatrix::from_row_slice(3, 3, &[0.6, 0.3, 0.1, 0.3, 0.4, 0.3, 0.1, 0.3, 0.6]),
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let r = sdt_check(&c, &Partition::new(vec![0, 0, 0]).unwrap()).unwrap();
        assert_eq!(r.component_gap, 1.0);
        assert_abs_diff_eq!(r.rhs, 0.5 * r.lhs, epsilon = 1e-15);
        assert!(r.holds);
    }
}
