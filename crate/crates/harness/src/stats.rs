use serde::{Deserialize, Serialize};

/// Location and spread of per-repetition values. Every field is 0 for an
/// empty input; `sd` uses the `n - 1` denominator and is 0 for one value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub p5: f64,
    pub p95: f64,
    pub values: Vec<f64>,
}

/// Linear interpolation between order statistics at `(n - 1) q`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => 0.0,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn spread(values: &[f64]) -> Spread {
    let n = values.len();
    if n == 0 {
        return Spread::default();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Spread {
        mean,
        median: quantile(&sorted, 0.5),
        sd,
        p5: quantile(&sorted, 0.05),
        p95: quantile(&sorted, 0.95),
        values: values.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let s = spread(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.p5 - 1.15).abs() < 1e-12);
        assert!((s.p95 - 3.85).abs() < 1e-12);
        assert_eq!(s.values, vec![4.0, 1.0, 3.0, 2.0]);
    }

    #[test]
    fn degenerate_inputs_have_no_nan() {
        assert_eq!(spread(&[]), Spread::default());
        let one = spread(&[0.7]);
        assert_eq!((one.mean, one.median, one.sd, one.p5, one.p95), (0.7, 0.7, 0.0, 0.7, 0.7));
    }
}
