//! Proposal kernels.
//!
//! A kernel draws `y ~ k(x, .)` and reports `log k(y, x) - log k(x, y)`, the
//! Hastings correction. Every kernel shipped here is symmetric, so the
//! correction is identically zero; the hook exists for user kernels.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Geometric, StandardNormal};

use crate::empirical::EmpiricalMeasure;
use crate::phylo::TreeTopology;
use crate::target::ContinuousState;
use crate::{Error, Result, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Local,
    LongRange,
}

impl MoveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveKind::Local => "local",
            MoveKind::LongRange => "long",
        }
    }
}

pub trait Proposal<S>: Sync {
    fn propose(&self, x: &S, rng: &mut RngStream) -> S;

    /// `log k(y, x) - log k(x, y)`.
    fn log_ratio(&self, _x: &S, _y: &S) -> f64 {
        0.0
    }

    fn kind(&self) -> MoveKind;

    fn is_symmetric(&self) -> bool {
        true
    }
}

impl<S, P: Proposal<S> + ?Sized> Proposal<S> for &P {
    fn propose(&self, x: &S, rng: &mut RngStream) -> S {
        (**self).propose(x, rng)
    }
    fn log_ratio(&self, x: &S, y: &S) -> f64 {
        (**self).log_ratio(x, y)
    }
    fn kind(&self) -> MoveKind {
        (**self).kind()
    }
    fn is_symmetric(&self) -> bool {
        (**self).is_symmetric()
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Uniform draw from the d-ball of radius `radius` around `x`.
pub fn ball_propose(x: &ContinuousState, radius: f64, rng: &mut RngStream) -> ContinuousState {
    let d = x.dim();
    let mut dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = radius * rng.uniform().powf(1.0 / d as f64);
    // a zero direction vector has probability zero; fall back to staying put
    let scale = if norm > 0.0 { r / norm } else { 0.0 };
    for (v, xi) in dir.iter_mut().zip(x.iter()) {
        *v = xi + *v * scale;
    }
    ContinuousState::from_vec_unchecked(dir)
}

/// `y = x + sigma z` with `z` standard normal.
pub fn gaussian_propose(x: &ContinuousState, sigma: f64, rng: &mut RngStream) -> ContinuousState {
    let y = x
        .iter()
        .map(|xi| xi + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    ContinuousState::from_vec_unchecked(y)
}

/// `y = x + gamma c` with independent standard Cauchy coordinates.
pub fn cauchy_propose(x: &ContinuousState, gamma: f64, rng: &mut RngStream) -> ContinuousState {
    let c = Cauchy::new(0.0, gamma).expect("validated scale");
    let y: Vec<f64> = x
        .iter()
        .map(|xi| {
            // tan() can overflow to +-inf for u within 1e-17 of 1/2; redraw
            loop {
                let v = xi + c.sample(rng);
                if v.is_finite() {
                    break v;
                }
            }
        })
        .collect();
    ContinuousState::from_vec_unchecked(y)
}

/// Independent draw from the stored samples; the acceptance step supplies the
/// tempered correction, so this kernel carries no Hastings ratio of its own.
pub fn empirical_propose<S: Clone>(m: &EmpiricalMeasure<S>, rng: &mut RngStream) -> Result<S> {
    m.draw(rng).cloned()
}

/// Kernels over `R^d`, configured by name.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContinuousKernel {
    Ball { radius: f64 },
    Gaussian { sigma: f64 },
    Cauchy { gamma: f64 },
}

impl ContinuousKernel {
    pub fn ball(radius: f64) -> Result<Self> {
        Ok(Self::Ball {
            radius: positive("ball radius", radius)?,
        })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Ok(Self::Gaussian {
            sigma: positive("gaussian scale", sigma)?,
        })
    }

    pub fn cauchy(gamma: f64) -> Result<Self> {
        Ok(Self::Cauchy {
            gamma: positive("cauchy scale", gamma)?,
        })
    }

    /// Mean displacement `E|y - x|` where it has a closed form.
    pub fn mean_displacement(&self, d: usize) -> f64 {
        match *self {
            // radius of a uniform point in the d-ball has density d r^(d-1)
            ContinuousKernel::Ball { radius } => radius * d as f64 / (d as f64 + 1.0),
            ContinuousKernel::Gaussian { sigma } => {
                // E|z| for a chi variable with d degrees of freedom
                let d = d as f64;
                sigma * std::f64::consts::SQRT_2 * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
            }
            ContinuousKernel::Cauchy { .. } => f64::INFINITY,
        }
    }
}

impl Proposal<ContinuousState> for ContinuousKernel {
    fn propose(&self, x: &ContinuousState, rng: &mut RngStream) -> ContinuousState {
        match *self {
            ContinuousKernel::Ball { radius } => ball_propose(x, radius, rng),
            ContinuousKernel::Gaussian { sigma } => gaussian_propose(x, sigma, rng),
            ContinuousKernel::Cauchy { gamma } => cauchy_propose(x, gamma, rng),
        }
    }

    fn kind(&self) -> MoveKind {
        match self {
            ContinuousKernel::Cauchy { .. } => MoveKind::LongRange,
            _ => MoveKind::Local,
        }
    }
}

// Lanczos approximation, adequate for the displacement helper above.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = C[0];
        let t = x + G + 0.5;
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Symmetric random walk on the integers: `x +- k`, `k` uniform in `1..=max_step`.
#[derive(Clone, Copy, Debug)]
pub struct LatticeStep {
    pub max_step: i64,
}

impl Proposal<i64> for LatticeStep {
    fn propose(&self, x: &i64, rng: &mut RngStream) -> i64 {
        let k = rng.random_range(1..=self.max_step);
        if rng.random::<bool>() {
            x + k
        } else {
            x - k
        }
    }
    fn kind(&self) -> MoveKind {
        MoveKind::Local
    }
}

/// Independent uniform draw from `0..n`.
#[derive(Clone, Copy, Debug)]
pub struct LatticeUniform {
    pub n: i64,
}

impl Proposal<i64> for LatticeUniform {
    fn propose(&self, _x: &i64, rng: &mut RngStream) -> i64 {
        rng.random_range(0..self.n)
    }
    fn kind(&self) -> MoveKind {
        MoveKind::LongRange
    }
}

/// One nearest-neighbour interchange: a uniform internal edge, then one of
/// its two alternative configurations. Every binary tree on `n` taxa has
/// exactly `2(n - 3)` such neighbours, so the kernel is symmetric.
#[derive(Clone, Copy, Debug, Default)]
pub struct Nni;

pub fn nni_propose(tree: &TreeTopology, rng: &mut RngStream) -> Result<TreeTopology> {
    if tree.n_taxa() < 4 {
        return Err(Error::config("NNI needs at least 4 taxa"));
    }
    Ok(random_nni(tree, rng))
}

fn random_nni(tree: &TreeTopology, rng: &mut RngStream) -> TreeTopology {
    let edges = tree.internal_edges();
    let e = edges[rng.random_range(0..edges.len())];
    let which = rng.random_range(0..2);
    tree.nni(e, which)
}

impl Proposal<TreeTopology> for Nni {
    fn propose(&self, x: &TreeTopology, rng: &mut RngStream) -> TreeTopology {
        random_nni(x, rng)
    }
    fn kind(&self) -> MoveKind {
        MoveKind::Local
    }
}

/// `K` successive uniform NNI moves with `K = min_moves + Geometric(p)`.
///
/// Reversing the sequence of single moves has the same probability as the
/// forward sequence, so the compound kernel is symmetric as well.
#[derive(Clone, Copy, Debug)]
pub struct CompoundNni {
    min_moves: usize,
    geometric: Geometric,
}

impl CompoundNni {
    pub fn new(min_moves: usize, p: f64) -> Result<Self> {
        if min_moves == 0 {
            return Err(Error::config("compound NNI needs at least one move"));
        }
        let geometric = Geometric::new(p)
            .map_err(|e| Error::config(format!("compound NNI geometric p = {p}: {e}")))?;
        Ok(Self { min_moves, geometric })
    }

    pub fn draw_moves(&self, rng: &mut RngStream) -> usize {
        self.min_moves + self.geometric.sample(rng) as usize
    }
}

impl Default for CompoundNni {
    fn default() -> Self {
        Self::new(2, 0.5).expect("valid constants")
    }
}

pub fn compound_nni_propose(
    tree: &TreeTopology,
    kernel: &CompoundNni,
    rng: &mut RngStream,
) -> Result<TreeTopology> {
    if tree.n_taxa() < 4 {
        return Err(Error::config("NNI needs at least 4 taxa"));
    }
    Ok(kernel.propose(tree, rng))
}

impl Proposal<TreeTopology> for CompoundNni {
    fn propose(&self, x: &TreeTopology, rng: &mut RngStream) -> TreeTopology {
        let k = self.draw_moves(rng);
        let mut y = random_nni(x, rng);
        for _ in 1..k {
            y = random_nni(&y, rng);
        }
        y
    }
    fn kind(&self) -> MoveKind {
        MoveKind::LongRange
    }
}
