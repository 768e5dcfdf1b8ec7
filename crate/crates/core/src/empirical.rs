//! The empirical measure of a chain: every post-burn-in, thinned state it has
//! pushed, each carrying mass `1/n`.

use std::io::{Read, Write};

use rand::Rng;

use crate::target::ContinuousState;
use crate::{Error, Result, RngStream};

const DUMP_MAGIC: &[u8; 8] = b"STEEPXI\0";
const DUMP_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct EmpiricalMeasure<S> {
    samples: Vec<S>,
    burn_in: u64,
    thin: u64,
    pushes: u64,
}

impl<S> EmpiricalMeasure<S> {
    pub fn new(burn_in: u64, thin: u64) -> Result<Self> {
        if thin == 0 {
            return Err(Error::config("thin must be >= 1"));
        }
        Ok(Self {
            samples: Vec::new(),
            burn_in,
            thin,
            pushes: 0,
        })
    }

    /// Offers the state of iteration `pushes + 1`. It is stored only once the
    /// iteration counter exceeds `burn_in` and is a multiple of `thin`.
    /// Returns whether the state was stored.
    pub fn push(&mut self, x: S) -> bool {
        self.pushes += 1;
        if self.pushes <= self.burn_in || self.pushes % self.thin != 0 {
            return false;
        }
        self.samples.push(x);
        true
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of push calls so far, stored or not.
    pub fn iterations(&self) -> u64 {
        self.pushes
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn thin(&self) -> u64 {
        self.thin
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    /// A stored sample chosen uniformly at random.
    pub fn draw(&self, rng: &mut RngStream) -> Result<&S> {
        if self.samples.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(&self.samples[rng.random_range(0..self.samples.len())])
    }
}

/// Upper bound on `||xi_n - xi_{n-1}||_V` after one push:
/// `(V(x_new) + xi_{n-1}(V)) / n`. For an empty `prev` this is `V(x_new)`,
/// the exact norm of the first point mass.
pub fn measure_drift<S>(
    prev: &EmpiricalMeasure<S>,
    next: &EmpiricalMeasure<S>,
    v: impl Fn(&S) -> f64,
) -> Result<f64> {
    if next.len() != prev.len() + 1 {
        return Err(Error::config(format!(
            "next must hold exactly one more sample than prev ({} vs {})",
            next.len(),
            prev.len()
        )));
    }
    let x_new = next.samples.last().expect("non-empty");
    let n = next.len() as f64;
    if prev.is_empty() {
        return Ok(v(x_new));
    }
    let mean = prev.samples.iter().map(&v).sum::<f64>() / prev.len() as f64;
    Ok((v(x_new) + mean) / n)
}

/// Running version of [`measure_drift`] that avoids re-summing `V` over the store.
#[derive(Clone, Debug, Default)]
pub struct DriftTracker {
    n: u64,
    sum_v: f64,
}

impl DriftTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a stored sample with `V(x) = v_new` and returns the drift bound.
    pub fn record(&mut self, v_new: f64) -> f64 {
        let drift = if self.n == 0 {
            v_new
        } else {
            (v_new + self.sum_v / self.n as f64) / (self.n + 1) as f64
        };
        self.n += 1;
        self.sum_v += v_new;
        drift
    }
}

impl EmpiricalMeasure<ContinuousState> {
    /// Writes `magic, version:u32, dim:u64, count:u64, coords:f64...`, all little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.samples.first().map_or(0, |s| s.dim());
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(dim as u64).to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        for s in &self.samples {
            for c in s.iter() {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads a dump produced by [`write_to`](Self::write_to) into a fresh
    /// measure with no burn-in and unit thinning.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Parse("not an empirical-measure dump".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != DUMP_VERSION {
            return Err(Error::Parse(format!("unsupported dump version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let dim = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8) as usize;
        if count > 0 && dim == 0 {
            return Err(Error::Parse("dump has samples but dimension 0".into()));
        }
        let mut m = Self::new(0, 1)?;
        m.samples.reserve(count);
        for _ in 0..count {
            let mut coords = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut b8)?;
                coords.push(f64::from_le_bytes(b8));
            }
            m.samples.push(ContinuousState::new(coords)?);
        }
        m.pushes = count as u64;
        Ok(m)
    }
}
