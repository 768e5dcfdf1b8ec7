//! How tempering reshapes a single log-concave peak, checked by quadrature.

use crate::target::log_sum_exp;
use crate::{Error, Result};

const SIMPSON_TOL: f64 = 1e-13;
const SIMPSON_DEPTH: u32 = 48;
/// Tails are cut where the scaled integrand drops below `exp(-TAIL_LOG)`.
const TAIL_LOG: f64 = 46.0;

/// `f_t(mode) / f(mode)` for `f_t ∝ f^(1/t)`, against the lower bound `t^-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakRatio {
    pub t: f64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Option<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if !delta.is_finite() {
            return None;
        }
        if delta.abs() <= 15.0 * tol {
            return Some(left + right + delta / 15.0);
        }
        if depth == 0 {
            return None;
        }
        Some(
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
        )
    }
    if b <= a {
        return Ok(0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, SIMPSON_TOL, SIMPSON_DEPTH).ok_or_else(|| {
        Error::Numerical(format!(
            "quadrature did not converge on [{a}, {b}] (tolerance {SIMPSON_TOL}, depth {SIMPSON_DEPTH})"
        ))
    })
}

/// Walks outward from `mode` until the scaled log-integrand is negligible,
/// stopping at the support edge.
fn tail_edge<F: Fn(f64) -> f64>(g: &F, mode: f64, edge: f64, direction: f64) -> Result<f64> {
    let mut w = 1.0;
    for _ in 0..200 {
        let x = mode + direction * w;
        if (direction > 0.0 && x >= edge) || (direction < 0.0 && x <= edge) {
            return Ok(edge);
        }
        if g(x) < -TAIL_LOG {
            return Ok(x);
        }
        w *= 2.0;
    }
    Err(Error::Numerical(format!(
        "integrand still above exp(-{TAIL_LOG}) at distance {w} from the mode; not normalisable?"
    )))
}

/// `ln ∫ exp((log_f(x) - log_f(mode)) / t) dx` over `[lo, hi]`, split at the mode.
fn log_scaled_integral(log_f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, mode: f64, t: f64) -> Result<f64> {
    let peak = log_f(mode);
    if !peak.is_finite() {
        return Err(Error::Numerical(format!("log-density at the mode {mode} is {peak}")));
    }
    let g = |x: f64| {
        let v = (log_f(x) - peak) / t;
        if v.is_nan() { f64::NEG_INFINITY } else { v }
    };
    let a = tail_edge(&g, mode, lo, -1.0)?;
    let b = tail_edge(&g, mode, hi, 1.0)?;
    let h = |x: f64| g(x).exp();
    let total = adaptive_simpson(&h, a, mode)? + adaptive_simpson(&h, mode, b)?;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical(format!("integral over [{a}, {b}] is {total}")));
    }
    Ok(total.ln())
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::config(format!("temperature must be at least 1, got {t}")));
    }
    Ok(())
}

/// Normalised peak height after tempering, relative to before, for a 1-d
/// density `exp(log_f)` on `[lo, hi]` (either end may be infinite) with its
/// maximum at `mode`.
pub fn peak_ratio_check(
    log_f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    mode: f64,
    t: f64,
) -> Result<PeakRatio> {
    check_t(t)?;
    if !(lo <= mode && mode <= hi) {
        return Err(Error::config(format!("mode {mode} outside [{lo}, {hi}]")));
    }
    // f_t(m)/f(m) = ∫ f / f(m) ÷ ∫ f^(1/t) / f(m)^(1/t)
    let ratio = (log_scaled_integral(log_f, lo, hi, mode, 1.0)? - log_scaled_integral(log_f, lo, hi, mode, t)?).exp();
    let bound = 1.0 / t;
    Ok(PeakRatio {
        t,
        ratio,
        bound,
        holds: ratio >= bound * (1.0 - 1e-6),
    })
}

/// One piece of a piecewise density: `weight * exp(log_density)` on `[lo, hi]`.
pub struct Peak<'a> {
    pub weight: f64,
    pub log_density: &'a dyn Fn(f64) -> f64,
    pub lo: f64,
    pub hi: f64,
    pub mode: f64,
}

/// Per-piece normalisers `I_i(t) = w_i^(1/t) ∫ pi_i^(1/t)` compared with
/// their mean: `ratios[k][i] = I_i(t_k) / mean_j I_j(t_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationReport {
    pub temperatures: Vec<f64>,
    pub ratios: Vec<Vec<f64>>,
    pub min: f64,
    pub max: f64,
}

pub fn normalization_ratio_check(pieces: &[Peak<'_>], temperatures: &[f64]) -> Result<NormalizationReport> {
    if pieces.is_empty() || temperatures.is_empty() {
        return Err(Error::config("need at least one piece and one temperature"));
    }
    let mut ratios = Vec::with_capacity(temperatures.len());
    let (mut min, mut max) = (f64::INFINITY, 0.0f64);
    for &t in temperatures {
        check_t(t)?;
        let mut logs = Vec::with_capacity(pieces.len());
        for p in pieces {
            if !(p.weight > 0.0) {
                return Err(Error::config("piece weights must be positive"));
            }
            let peak = (p.log_density)(p.mode);
            let li = log_scaled_integral(p.log_density, p.lo, p.hi, p.mode, t)?;
            logs.push((p.weight.ln() + peak) / t + li);
        }
        let log_mean = log_sum_exp(&logs) - (pieces.len() as f64).ln();
        let row: Vec<f64> = logs.iter().map(|l| (l - log_mean).exp()).collect();
        for &r in &row {
            min = min.min(r);
            max = max.max(r);
        }
        ratios.push(row);
    }
    Ok(NormalizationReport {
        temperatures: temperatures.to_vec(),
        ratios,
        min,
        max,
    })
}

/// `delta e^(-alpha delta) / (1024 sqrt(d) M)`: a conductance floor for the
/// ball-proposal MH chain on an `alpha`-smooth log-concave density whose mean
/// distance from its barycentre is `m_pi`.
pub fn local_conductance_lower_bound(alpha: f64, delta: f64, d: usize, m_pi: f64) -> Result<f64> {
    if !(alpha > 0.0 && delta > 0.0 && d > 0 && m_pi > 0.0) {
        return Err(Error::config("bound inputs must all be positive"));
    }
    Ok(delta * (-alpha * delta).exp() / (1024.0 * (d as f64).sqrt() * m_pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exp1(x: f64) -> f64 {
        if x < 0.0 { f64::NEG_INFINITY } else { -x }
    }

    #[test]
    fn exponential_ratio_is_exactly_one_over_t() {
        for t in [1.0, 2.0, 4.0, 8.0] {
            let r = peak_ratio_check(&exp1, 0.0, f64::INFINITY, 0.0, t).unwrap();
            assert_abs_diff_eq!(r.ratio, 1.0 / t, epsilon = 1e-9);
            assert!(r.holds);
        }
    }

    #[test]
    fn gaussian_ratio_is_root_t() {
        let g = |x: f64| -0.5 * x * x;
        for t in [2.0, 4.0, 9.0] {
            let r = peak_ratio_check(&g, f64::NEG_INFINITY, f64::INFINITY, 0.0, t).unwrap();
            assert_abs_diff_eq!(r.ratio, t.powf(-0.5), epsilon = 1e-9);
            assert!(r.ratio >= r.bound);
        }
    }

    #[test]
    fn unnormalisable_input_is_reported() {
        let flat = |_: f64| 0.0;
        assert!(matches!(
            peak_ratio_check(&flat, f64::NEG_INFINITY, f64::INFINITY, 0.0, 2.0),
            Err(Error::Numerical(_))
        ));
        assert!(peak_ratio_check(&exp1, 0.0, 1.0, 2.0, 2.0).is_err());
        assert!(peak_ratio_check(&exp1, 0.0, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn laplace_pieces_match_closed_form() {
        // I_i(t) = w_i^(1/t) (2 b_i)^(1 - 1/t) t for a Laplace piece of scale b_i
        let (w1, b1, w2, b2) = (0.3, 0.25, 0.7, 1.5);
        let l1 = move |x: f64| -(x + 20.0).abs() / b1 - (2.0 * b1).ln();
        let l2 = move |x: f64| -(x - 20.0).abs() / b2 - (2.0 * b2).ln();
        let pieces = [
            Peak { weight: w1, log_density: &l1, lo: f64::NEG_INFINITY, hi: f64::INFINITY, mode: -20.0 },
            Peak { weight: w2, log_density: &l2, lo: f64::NEG_INFINITY, hi: f64::INFINITY, mode: 20.0 },
        ];
        let ts = [1.0, 2.0, 5.0, 10.0];
        let rep = normalization_ratio_check(&pieces, &ts).unwrap();
        for (k, &t) in ts.iter().enumerate() {
            let i1 = w1.powf(1.0 / t) * (2.0 * b1).powf(1.0 - 1.0 / t) * t;
            let i2 = w2.powf(1.0 / t) * (2.0 * b2).powf(1.0 - 1.0 / t) * t;
            let mean = 0.5 * (i1 + i2);
            assert_abs_diff_eq!(rep.ratios[k][0], i1 / mean, epsilon = 1e-8);
            assert_abs_diff_eq!(rep.ratios[k][1], i2 / mean, epsilon = 1e-8);
        }
    }

    #[test]
    fn ball_bound_arithmetic() {
        let v = local_conductance_lower_bound(1.0, 1.0, 1, 1.0).unwrap();
        assert_abs_diff_eq!(v, (-1.0f64).exp() / 1024.0, epsilon = 1e-18);
        assert_abs_diff_eq!(v, 3.5926e-4, epsilon = 1e-8);
        // delta = 1/alpha maximises delta e^(-alpha delta)
        for alpha in [0.5, 1.0, 3.0] {
            let best = local_conductance_lower_bound(alpha, 1.0 / alpha, 2, 1.0).unwrap();
            for k in 1..200 {
                let delta = k as f64 * 0.05 / alpha;
                assert!(local_conductance_lower_bound(alpha, delta, 2, 1.0).unwrap() <= best + 1e-18);
            }
            assert_abs_diff_eq!(best * 1024.0 * 2f64.sqrt(), 1.0 / (alpha * std::f64::consts::E), epsilon = 1e-12);
        }
        assert!(local_conductance_lower_bound(0.0, 1.0, 1, 1.0).is_err());
    }
}
