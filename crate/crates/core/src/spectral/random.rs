//! Random finite instances for the inequality suites.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use super::finite::{FiniteChain, Partition};
use crate::{Error, Result, RngStream};

/// A lazy reversible chain from random symmetric edge weights.
///
/// Edges are present with a random density; a path through all states is
/// always added with a small weight so the chain is irreducible. Weights are
/// skewed (cubed uniforms) so the stationary vector is uneven.
pub fn random_lazy_reversible_chain(n: usize, rng: &mut RngStream) -> Result<FiniteChain> {
    if n == 0 {
        return Err(Error::config("chain needs at least one state"));
    }
    let density = rng.random_range(0.2..1.0);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                let u: f64 = rng.random();
                w[(i, j)] = u * u * u;
                w[(j, i)] = w[(i, j)];
            }
        }
        if i + 1 < n {
            let bump = 1e-3 * rng.random::<f64>() + 1e-4;
            w[(i, i + 1)] += bump;
            w[(i + 1, i)] += bump;
        }
    }
    if n == 1 {
        w[(0, 0)] = 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).sum()).collect();
    let total: f64 = deg.iter().sum();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j {
                p[(i, j)] = 0.5 * w[(i, j)] / deg[i];
                off += p[(i, j)];
            }
        }
        p[(i, i)] = 1.0 - off;
    }
    FiniteChain::new(p, deg.iter().map(|d| d / total).collect())
}

/// A random partition of `0..n` into exactly `m` nonempty blocks.
pub fn random_partition(n: usize, m: usize, rng: &mut RngStream) -> Result<Partition> {
    if m == 0 || m > n {
        return Err(Error::config(format!("cannot split {n} states into {m} blocks")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut labels = vec![0; n];
    for (k, &x) in order.iter().enumerate() {
        labels[x] = if k < m { k } else { rng.random_range(0..m) };
    }
    Partition::new(labels)
}

/// A row-stochastic matrix with symmetric support and holding probability at
/// least `hold` on the diagonal.
pub fn random_proposal_matrix(n: usize, hold: f64, rng: &mut RngStream) -> Result<DMatrix<f64>> {
    if n == 0 || !(0.0..=1.0).contains(&hold) {
        return Err(Error::config("proposal needs n >= 1 and a holding probability in [0, 1]"));
    }
    let density = rng.random_range(0.2..1.0);
    let mut support = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let on = rng.random::<f64>() < density || j == i + 1;
            support[i][j] = on;
            support[j][i] = on;
        }
    }
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        let raw: Vec<f64> = (0..n)
            .map(|j| if support[i][j] { rng.random::<f64>() + 0.01 } else { 0.0 })
            .collect();
        let z: f64 = raw.iter().sum();
        let mut off = 0.0;
        if z > 0.0 {
            for j in 0..n {
                q[(i, j)] = (1.0 - hold) * raw[j] / z;
                off += q[(i, j)];
            }
        }
        q[(i, i)] = (1.0 - off).max(0.0);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_chains_are_valid() {
        let mut rng = RngStream::new(5, 0);
        for n in [1usize, 2, 5, 12] {
            let c = random_lazy_reversible_chain(n, &mut rng).unwrap();
            assert!(c.is_reversible());
            for i in 0..n {
                assert!(c.get(i, i) >= 0.5 - 1e-15);
            }
            let p = random_partition(n, n.min(3), &mut rng).unwrap();
            assert_eq!(p.m(), n.min(3));
            let q = random_proposal_matrix(n, 0.5, &mut rng).unwrap();
            for i in 0..n {
                assert!((q.row(i).sum() - 1.0).abs() < 1e-12);
                assert!(q[(i, i)] >= 0.5 - 1e-15);
            }
        }
        assert!(random_partition(3, 4, &mut rng).is_err());
    }
}
