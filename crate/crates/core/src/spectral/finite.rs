use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Tolerance for row sums, stationarity and detailed balance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest state count for which [`conductance`] enumerates every subset.
pub const EXACT_CONDUCTANCE_MAX: usize = 22;

/// A row-stochastic matrix with a stationary probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteChain {
    p: DMatrix<f64>,
    pi: Vec<f64>,
    reversible: bool,
}

impl FiniteChain {
    /// Validates the matrix and vector; reversibility is detected, not assumed.
    pub fn new(p: DMatrix<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = pi.len();
        if n == 0 {
            return Err(Error::config("a chain needs at least one state"));
        }
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::config(format!(
                "matrix is {}x{} but the stationary vector has length {n}",
                p.nrows(),
                p.ncols()
            )));
        }
        if pi.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::config("stationary vector needs finite nonnegative entries"));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::config(format!("stationary vector sums to {total}")));
        }
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let v = p[(i, j)];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::config(format!("entry ({i}, {j}) = {v} is not a probability")));
                }
                row += v;
            }
            if (row - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::config(format!("row {i} sums to {row}")));
            }
        }
        for j in 0..n {
            let flow: f64 = (0..n).map(|i| pi[i] * p[(i, j)]).sum();
            if (flow - pi[j]).abs() > STOCHASTIC_TOL {
                return Err(Error::config(format!(
                    "vector is not stationary at state {j}: (pi P)_j = {flow}, pi_j = {}",
                    pi[j]
                )));
            }
        }
        let mut chain = Self {
            p,
            pi,
            reversible: false,
        };
        chain.reversible = chain.detailed_balance_error() <= STOCHASTIC_TOL;
        Ok(chain)
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    /// `max_ij |pi_i P_ij - pi_j P_ji|`.
    pub fn detailed_balance_error(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = (self.pi[i] * self.p[(i, j)] - self.pi[j] * self.p[(j, i)]).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `(I + P) / 2`.
    pub fn lazy(&self) -> FiniteChain {
        let n = self.n();
        let p = (DMatrix::identity(n, n) + &self.p) * 0.5;
        FiniteChain {
            p,
            pi: self.pi.clone(),
            reversible: self.reversible,
        }
    }

    /// Stationary flow `pi_x P(x, y)`.
    fn flow(&self, x: usize, y: usize) -> f64 {
        self.pi[x] * self.p[(x, y)]
    }
}

/// An assignment of states to blocks `0..m`, every block nonempty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    m: usize,
}

impl Partition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::config("partition of an empty state space"));
        }
        let m = labels.iter().max().map_or(0, |&l| l + 1);
        let mut seen = vec![false; m];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(b) = seen.iter().position(|s| !s) {
            return Err(Error::config(format!("partition block {b} is empty")));
        }
        Ok(Self { labels, m })
    }

    /// From explicit blocks that must cover `0..n` exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::config(format!("partition block {b} is empty")));
            }
            for &x in block {
                if x >= n {
                    return Err(Error::config(format!("state {x} out of range 0..{n}")));
                }
                if labels[x] != usize::MAX {
                    return Err(Error::config(format!("state {x} appears in two blocks")));
                }
                labels[x] = b;
            }
        }
        if let Some(x) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::config(format!("state {x} is not assigned to a block")));
        }
        Ok(Self {
            labels,
            m: blocks.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn label(&self, x: usize) -> usize {
        self.labels[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.m];
        for (x, &l) in self.labels.iter().enumerate() {
            out[l].push(x);
        }
        out
    }
}

/// How [`conductance`] chooses the cuts it minimises over.
#[derive(Clone, Copy, Debug)]
pub enum CutMode<'a> {
    /// Every subset; only for `n <= EXACT_CONDUCTANCE_MAX`.
    Exact,
    /// Only the supplied sets. The result is an upper bound on the true value.
    Family(&'a [Vec<usize>]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conductance {
    pub value: f64,
    /// False when only a cut family was searched.
    pub exact: bool,
    /// A minimising set.
    pub set: Vec<usize>,
}

const HALF_MASS_SLACK: f64 = 1e-12;

/// `min flow(S) / pi(S)` over sets with `0 < pi(S) <= 1/2`, where
/// `flow(S) = sum_{x in S, y not in S} pi_x P(x, y)`.
pub fn conductance(fc: &FiniteChain, mode: CutMode<'_>) -> Result<Conductance> {
    match mode {
        CutMode::Exact => exact_conductance(fc),
        CutMode::Family(cuts) => family_conductance(fc, cuts),
    }
}

fn exact_conductance(fc: &FiniteChain) -> Result<Conductance> {
    let n = fc.n();
    if n > EXACT_CONDUCTANCE_MAX {
        return Err(Error::TooLarge {
            what: "state space for exact conductance",
            size: n,
            cap: EXACT_CONDUCTANCE_MAX,
        });
    }
    let f = DMatrix::from_fn(n, n, |i, j| fc.flow(i, j));
    let mut in_set = vec![false; n];
    let (mut mass, mut flow) = (0.0f64, 0.0f64);
    let mut best = f64::INFINITY;
    let mut best_mask = 0u32;
    // walk all subsets in Gray-code order, toggling one state per step
    for g in 1u32..(1u32 << n) {
        let k = g.trailing_zeros() as usize;
        let mut out_k = 0.0;
        let mut in_k = 0.0;
        for y in 0..n {
            if y == k {
                continue;
            }
            if in_set[y] {
                in_k += f[(y, k)];
            } else {
                out_k += f[(k, y)];
            }
        }
        if in_set[k] {
            in_set[k] = false;
            mass -= fc.pi[k];
            flow -= out_k - in_k;
        } else {
            in_set[k] = true;
            mass += fc.pi[k];
            flow += out_k - in_k;
        }
        if mass > 0.0 && mass <= 0.5 + HALF_MASS_SLACK {
            let r = flow.max(0.0) / mass;
            if r < best {
                best = r;
                best_mask = g ^ (g >> 1);
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::Numerical("no set has mass in (0, 1/2]".into()));
    }
    let set = (0..n).filter(|&i| best_mask & (1 << i) != 0).collect();
    Ok(Conductance {
        value: best,
        exact: true,
        set,
    })
}

fn family_conductance(fc: &FiniteChain, cuts: &[Vec<usize>]) -> Result<Conductance> {
    let n = fc.n();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cut in cuts {
        let mut member = vec![false; n];
        for &x in cut {
            if x >= n {
                return Err(Error::config(format!("cut state {x} out of range 0..{n}")));
            }
            member[x] = true;
        }
        let mut mass: f64 = (0..n).filter(|&x| member[x]).map(|x| fc.pi[x]).sum();
        // a set heavier than 1/2 is scored through its complement
        if mass > 0.5 + HALF_MASS_SLACK {
            member.iter_mut().for_each(|m| *m = !*m);
            mass = 1.0 - mass;
        }
        if !(mass > 0.0) {
            continue;
        }
        let mut flow = 0.0;
        for x in (0..n).filter(|&x| member[x]) {
            for y in (0..n).filter(|&y| !member[y]) {
                flow += fc.flow(x, y);
            }
        }
        let r = flow / mass;
        if best.as_ref().is_none_or(|(b, _)| r < *b) {
            best = Some((r, (0..n).filter(|&x| member[x]).collect()));
        }
    }
    let (value, set) = best.ok_or_else(|| Error::config("cut family has no set of positive mass"))?;
    Ok(Conductance {
        value,
        exact: false,
        set,
    })
}

/// `D^(1/2) P D^(-1/2)`, symmetric for a reversible chain.
fn symmetrized(fc: &FiniteChain) -> Result<DMatrix<f64>> {
    if !fc.reversible {
        return Err(Error::NotReversible);
    }
    if fc.pi.iter().any(|&v| v <= 0.0) {
        return Err(Error::config("spectral analysis needs a strictly positive stationary vector"));
    }
    let n = fc.n();
    let sq: Vec<f64> = fc.pi.iter().map(|v| v.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| sq[i] * fc.p[(i, j)] / sq[j]);
    Ok((&a + a.transpose()) * 0.5)
}

/// Eigenvalues in decreasing order.
pub fn spectrum(fc: &FiniteChain) -> Result<Vec<f64>> {
    let a = symmetrized(fc)?;
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// `1 - max |lambda|` over the spectrum with the eigenvalue 1 of the constant
/// functions removed. Negative eigenvalues count. A one-state chain has gap 1.
pub fn spectral_gap(fc: &FiniteChain) -> Result<f64> {
    let mut a = symmetrized(fc)?;
    let n = fc.n();
    let sq: Vec<f64> = fc.pi.iter().map(|v| v.sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] -= sq[i] * sq[j];
        }
    }
    let ev = SymmetricEigen::new(a).eigenvalues;
    let norm = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((1.0 - norm).max(0.0))
}

/// `1 - lambda_2`, ignoring the negative end of the spectrum.
pub fn relaxation_gap(fc: &FiniteChain) -> Result<f64> {
    let ev = spectrum(fc)?;
    Ok(ev.get(1).map_or(1.0, |l2| 1.0 - l2))
}

/// Inter-block chain: `P_c(a, c) = (1 / (2 pi(A_a))) sum_{x in A_a} pi_x P(x, A_c)`
/// off the diagonal, residual on it. Stationary vector `(pi(A_1), ..., pi(A_m))`.
pub fn component_chain(fc: &FiniteChain, part: &Partition) -> Result<FiniteChain> {
    if !fc.reversible {
        return Err(Error::NotReversible);
    }
    if part.n() != fc.n() {
        return Err(Error::config(format!(
            "partition covers {} states, chain has {}",
            part.n(),
            fc.n()
        )));
    }
    let m = part.m();
    let mut mass = vec![0.0; m];
    let mut block_flow = DMatrix::zeros(m, m);
    for x in 0..fc.n() {
        let a = part.label(x);
        mass[a] += fc.pi[x];
        for y in 0..fc.n() {
            let c = part.label(y);
            if a != c {
                block_flow[(a, c)] += fc.flow(x, y);
            }
        }
    }
    if let Some(a) = mass.iter().position(|&v| v <= 0.0) {
        return Err(Error::config(format!("partition block {a} has zero stationary mass")));
    }
    // average the two directions so detailed balance is exact in floating point
    let sym = (&block_flow + block_flow.transpose()) * 0.5;
    let mut pc = DMatrix::zeros(m, m);
    for a in 0..m {
        let mut off = 0.0;
        for c in 0..m {
            if a != c {
                let v = sym[(a, c)] / (2.0 * mass[a]);
                pc[(a, c)] = v;
                off += v;
            }
        }
        pc[(a, a)] = (1.0 - off).max(0.0);
    }
    let total: f64 = mass.iter().sum();
    FiniteChain::new(pc, mass.iter().map(|v| v / total).collect())
}

/// The chain restricted to `block`: moves that would leave are turned into holds.
pub fn restricted_chain(fc: &FiniteChain, block: &[usize]) -> Result<FiniteChain> {
    if block.is_empty() {
        return Err(Error::config("restriction to an empty block"));
    }
    let n = fc.n();
    let mut seen = vec![false; n];
    for &x in block {
        if x >= n {
            return Err(Error::config(format!("state {x} out of range 0..{n}")));
        }
        if seen[x] {
            return Err(Error::config(format!("state {x} repeated in block")));
        }
        seen[x] = true;
    }
    let k = block.len();
    let mut p = DMatrix::zeros(k, k);
    for (a, &x) in block.iter().enumerate() {
        let mut off = 0.0;
        for (b, &y) in block.iter().enumerate() {
            if a != b {
                p[(a, b)] = fc.p[(x, y)];
                off += fc.p[(x, y)];
            }
        }
        p[(a, a)] = (1.0 - off).max(0.0);
    }
    let mass: f64 = block.iter().map(|&x| fc.pi[x]).sum();
    if !(mass > 0.0) {
        return Err(Error::config("block has zero stationary mass"));
    }
    FiniteChain::new(p, block.iter().map(|&x| fc.pi[x] / mass).collect())
}
