use crate::{Error, Result};

/// `min_{1 <= k < n} k/(n-k) + rho^k`: the polynomial convergence bound with
/// unit constants.
pub fn convergence_rate_diagnostic(n: u64, rho: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::config(format!("n must be >= 2, got {n}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::config(format!("rho must lie in (0, 1), got {rho}")));
    }
    let nf = n as f64;
    let mut best = f64::INFINITY;
    let mut geo = 1.0;
    for k in 1..n {
        geo *= rho;
        let kf = k as f64;
        let first = kf / (nf - kf);
        // the first term only grows with k
        if first >= best {
            break;
        }
        best = best.min(first + geo);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_k() {
        assert_eq!(convergence_rate_diagnostic(2, 0.5).unwrap(), 1.5);
        assert!(convergence_rate_diagnostic(1, 0.5).is_err());
        assert!(convergence_rate_diagnostic(10, 1.0).is_err());
    }

    /// Exhaustive minimum without the early exit.
    fn brute(n: u64, rho: f64) -> f64 {
        (1..n)
            .map(|k| k as f64 / (n - k) as f64 + rho.powi(k as i32))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matches_exhaustive_minimum() {
        for &rho in &[0.1, 0.5, 0.9, 0.99] {
            for n in [2u64, 3, 10, 57, 1000, 5000] {
                let a = convergence_rate_diagnostic(n, rho).unwrap();
                let b = brute(n, rho);
                assert!((a - b).abs() <= 1e-12 * b.max(1.0), "n={n} rho={rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn decreasing_in_n() {
        for &rho in &[0.3, 0.8, 0.95] {
            let mut prev = f64::INFINITY;
            for e in 1..=6 {
                for m in [1u64, 2, 5] {
                    let n = m * 10u64.pow(e);
                    let b = convergence_rate_diagnostic(n, rho).unwrap();
                    assert!(b <= prev, "rho={rho} n={n}");
                    prev = b;
                }
            }
        }
    }

    #[test]
    fn scaled_bound_stabilises() {
        // B(n) n / ln n approaches 1/(-ln rho)
        for &rho in &[0.5, 0.9] {
            let r = |n: u64| convergence_rate_diagnostic(n, rho).unwrap() * n as f64 / (n as f64).ln();
            let (a, b) = (r(100_000), r(1_000_000));
            assert!((a - b).abs() / b < 0.1, "rho={rho}: {a} vs {b}");
            let limit = 1.0 / -rho.ln();
            assert!((b - limit).abs() / limit < 0.25, "rho={rho}: {b} vs {limit}");
        }
    }
}
