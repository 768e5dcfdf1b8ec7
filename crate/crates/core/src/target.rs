//! State spaces and target densities.
//!
//! All densities are handled as natural-log values up to an additive constant.
//! `f64::NEG_INFINITY` is the log-density of a zero-probability state and is a
//! legitimate return value; NaN never is.

use std::f64::consts::PI;
use std::ops::Deref;

use crate::{Error, Result};

/// A point of `R^d` with finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousState(Vec<f64>);

impl ContinuousState {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::config("continuous state needs d >= 1"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Numerical(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Self(coords))
    }

    /// Builds a state without the finiteness check. Callers guarantee the invariant.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty() && coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn distance(&self, other: &ContinuousState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Deref for ContinuousState {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<[f64; 1]> for ContinuousState {
    fn from(v: [f64; 1]) -> Self {
        Self::new(v.to_vec()).expect("finite literal")
    }
}

impl From<[f64; 2]> for ContinuousState {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v.to_vec()).expect("finite literal")
    }
}

/// An unnormalised log-density over states of type `S`.
pub trait LogDensity<S>: Sync {
    /// Log-density at `x`. Must be pure and never NaN.
    fn log_density(&self, x: &S) -> f64;

    /// Verifies that `x` belongs to this target's state space.
    fn check_state(&self, _x: &S) -> Result<()> {
        Ok(())
    }
}

impl<S, T: LogDensity<S> + ?Sized> LogDensity<S> for &T {
    fn log_density(&self, x: &S) -> f64 {
        (**self).log_density(x)
    }
    fn check_state(&self, x: &S) -> Result<()> {
        (**self).check_state(x)
    }
}

/// Checked evaluation: rejects states from the wrong space and NaN results.
pub fn log_density_at<S, T: LogDensity<S> + ?Sized>(target: &T, x: &S) -> Result<f64> {
    target.check_state(x)?;
    let v = target.log_density(x);
    if v.is_nan() {
        return Err(Error::Numerical("log-density evaluated to NaN".into()));
    }
    Ok(v)
}

fn check_dim(expected: usize, x: &ContinuousState) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.dim(),
        });
    }
    Ok(())
}

/// Numerically stable `log(sum(exp(v)))`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `pi_t(x) ∝ pi(x)^(1/t)`.
#[derive(Clone, Debug)]
pub struct Tempered<T> {
    base: T,
    temperature: f64,
}

impl<T> Tempered<T> {
    pub fn new(base: T, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::config(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        Ok(Self { base, temperature })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn base(&self) -> &T {
        &self.base
    }
}

/// Log of the tempered density given the base log-density.
#[inline]
pub fn tempered_log_density(log_pi: f64, temperature: f64) -> f64 {
    if temperature == 1.0 {
        log_pi
    } else {
        log_pi / temperature
    }
}

impl<S, T: LogDensity<S>> LogDensity<S> for Tempered<T> {
    fn log_density(&self, x: &S) -> f64 {
        tempered_log_density(self.base.log_density(x), self.temperature)
    }
    fn check_state(&self, x: &S) -> Result<()> {
        self.base.check_state(x)
    }
}

/// One axis-aligned Gaussian component of a [`MixtureTarget`].
#[derive(Clone, Debug)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance matrix.
    pub variance: Vec<f64>,
}

impl GaussianComponent {
    fn log_density(&self, x: &[f64]) -> f64 {
        let mut acc = self.weight.ln();
        for ((xi, mi), vi) in x.iter().zip(&self.mean).zip(&self.variance) {
            let z = xi - mi;
            acc -= 0.5 * ((2.0 * PI * vi).ln() + z * z / vi);
        }
        acc
    }
}

/// Weighted sum of diagonal-covariance Gaussians, evaluated with log-sum-exp.
#[derive(Clone, Debug)]
pub struct MixtureTarget {
    components: Vec<GaussianComponent>,
    dim: usize,
}

impl MixtureTarget {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::config("mixture needs at least one component"))?;
        let dim = first.mean.len();
        if dim == 0 {
            return Err(Error::config("mixture components need d >= 1"));
        }
        for (i, c) in components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::config(format!("component {i}: weight must be > 0")));
            }
            if c.mean.len() != dim || c.variance.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: c.mean.len().min(c.variance.len()),
                });
            }
            if c.variance.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::config(format!("component {i}: variances must be > 0")));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::config(format!("component {i}: mean must be finite")));
            }
        }
        Ok(Self { components, dim })
    }

    /// Two isotropic 2-d needles, `0.5 N((0,0), var I) + 0.5 N(mu2, var I)`.
    pub fn needles(mu2: [f64; 2], variance: f64) -> Result<Self> {
        Self::new(vec![
            GaussianComponent {
                weight: 0.5,
                mean: vec![0.0, 0.0],
                variance: vec![variance; 2],
            },
            GaussianComponent {
                weight: 0.5,
                mean: mu2.to_vec(),
                variance: vec![variance; 2],
            },
        ])
    }

    /// The needles target with `mu2 = (5, 5)` and covariance `0.01 I`.
    pub fn default_needles() -> Self {
        Self::needles([5.0, 5.0], 0.01).expect("valid constants")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// Index of the component with the largest weighted density at `x`.
    /// This is the natural partition `A_i` of the mixture.
    pub fn component_of(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, c) in self.components.iter().enumerate() {
            let v = c.log_density(x);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    }

    /// Mixture density by plain summation (no log-sum-exp); used to cross-check.
    pub fn density_direct(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|c| c.log_density(x).exp())
            .sum()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut buf = [0.0f64; 8];
        if self.components.len() <= buf.len() {
            for (slot, c) in buf.iter_mut().zip(&self.components) {
                *slot = c.log_density(x);
            }
            log_sum_exp(&buf[..self.components.len()])
        } else {
            let v: Vec<f64> = self.components.iter().map(|c| c.log_density(x)).collect();
            log_sum_exp(&v)
        }
    }
}

impl LogDensity<ContinuousState> for MixtureTarget {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        self.eval(x)
    }
    fn check_state(&self, x: &ContinuousState) -> Result<()> {
        check_dim(self.dim, x)
    }
}

/// Mixture of product-Laplace (double exponential) peaks,
/// `sum_i w_i prod_k exp(-|x_k - c_ik| / b_i) / (2 b_i)`.
///
/// Each peak is log-concave and `1/b_i`-smooth, the extremal case for how
/// tempering rescales a peak's normalised height.
#[derive(Clone, Debug)]
pub struct LaplaceMixture {
    peaks: Vec<(f64, Vec<f64>, f64)>,
    dim: usize,
}

impl LaplaceMixture {
    pub fn new(peaks: Vec<(f64, Vec<f64>, f64)>) -> Result<Self> {
        let dim = peaks
            .first()
            .map(|p| p.1.len())
            .ok_or_else(|| Error::config("mixture needs at least one peak"))?;
        if dim == 0 {
            return Err(Error::config("peaks need d >= 1"));
        }
        for (w, c, b) in &peaks {
            if !(*w > 0.0) || !(*b > 0.0) || c.len() != dim {
                return Err(Error::config("peaks need positive weight and scale and a common dimension"));
            }
        }
        Ok(Self { peaks, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .peaks
            .iter()
            .map(|(w, c, b)| {
                let l1: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).abs()).sum();
                w.ln() - l1 / b - self.dim as f64 * (2.0 * b).ln()
            })
            .collect();
        log_sum_exp(&terms)
    }
}

impl LogDensity<ContinuousState> for LaplaceMixture {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        self.eval(x)
    }
    fn check_state(&self, x: &ContinuousState) -> Result<()> {
        check_dim(self.dim, x)
    }
}

/// Standard Gaussian with a shifted mean and common variance.
#[derive(Clone, Debug)]
pub struct IsotropicGaussian {
    pub mean: Vec<f64>,
    pub variance: f64,
}

impl LogDensity<ContinuousState> for IsotropicGaussian {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        let d = self.mean.len() as f64;
        let sq: f64 = x.iter().zip(&self.mean).map(|(a, m)| (a - m) * (a - m)).sum();
        -0.5 * d * (2.0 * PI * self.variance).ln() - 0.5 * sq / self.variance
    }
    fn check_state(&self, x: &ContinuousState) -> Result<()> {
        check_dim(self.mean.len(), x)
    }
}

/// `log pi(x, y) = -[(a - u)^2 + b (v - u^2)^2]` with `(u, v) = (x, y) - shift`.
/// The unique maximiser is `shift + (a, a^2)`.
#[derive(Clone, Debug)]
pub struct Rosenbrock {
    pub a: f64,
    pub b: f64,
    pub shift: [f64; 2],
}

impl Rosenbrock {
    pub fn argmax(&self) -> [f64; 2] {
        [self.shift[0] + self.a, self.shift[1] + self.a * self.a]
    }
}

impl LogDensity<ContinuousState> for Rosenbrock {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        let u = x[0] - self.shift[0];
        let v = x[1] - self.shift[1];
        -((self.a - u).powi(2) + self.b * (v - u * u).powi(2))
    }
    fn check_state(&self, x: &ContinuousState) -> Result<()> {
        check_dim(2, x)
    }
}

/// Uniform density on an axis-aligned box; `-inf` outside.
#[derive(Clone, Debug)]
pub struct UniformBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LogDensity<ContinuousState> for UniformBox {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        let inside = x
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *l <= *v && *v <= *h);
        if inside {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
    fn check_state(&self, x: &ContinuousState) -> Result<()> {
        check_dim(self.lo.len(), x)
    }
}

/// `Exp(rate)` on `[0, inf)` in one dimension.
#[derive(Clone, Debug)]
pub struct Exponential {
    pub rate: f64,
}

impl LogDensity<ContinuousState> for Exponential {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        if x[0] < 0.0 {
            f64::NEG_INFINITY
        } else {
            self.rate.ln() - self.rate * x[0]
        }
    }
    fn check_state(&self, x: &ContinuousState) -> Result<()> {
        check_dim(1, x)
    }
}

/// A target on the integer lattice `0..n` given by per-site log-weights;
/// indices outside the range have log-density `-inf`.
#[derive(Clone, Debug)]
pub struct LatticeTarget {
    log_weights: Vec<f64>,
}

impl LatticeTarget {
    pub fn new(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::config("lattice target needs at least one site"));
        }
        if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::Numerical("lattice log-weights must not be NaN or +inf".into()));
        }
        Ok(Self { log_weights })
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalised probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        let z = log_sum_exp(&self.log_weights);
        self.log_weights.iter().map(|w| (w - z).exp()).collect()
    }
}

impl LogDensity<i64> for LatticeTarget {
    fn log_density(&self, x: &i64) -> f64 {
        if *x < 0 || *x as usize >= self.log_weights.len() {
            f64::NEG_INFINITY
        } else {
            self.log_weights[*x as usize]
        }
    }
}

/// Adapter turning a closure into a target.
pub struct FnDensity<F>(pub F);

impl<S, F: Fn(&S) -> f64 + Sync> LogDensity<S> for FnDensity<F> {
    fn log_density(&self, x: &S) -> f64 {
        (self.0)(x)
    }
}
