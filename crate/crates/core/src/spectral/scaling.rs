//! How the inter-mode gaps of the exploring and sampling chains move with temperature.

use super::finite::{component_chain, conductance, spectral_gap, CutMode, Partition};
use super::grid::{
    assemble_idealized_sampling_matrix, assemble_small_world_matrix, cauchy_proposal_matrix,
    discretize_target, local_walk_matrix, uniform_proposal_matrix, GridDistribution, GridSpec,
};
use crate::target::{ContinuousState, LaplaceMixture, LogDensity};
use crate::{Error, Result};

/// Slope band for the exploring component gap in one dimension; scaled by `d`.
pub const EXPLORING_SLOPE_BAND: (f64, f64) = (0.5, 1.5);
/// Slope band for the sampling component gap in one dimension: `[-2d - 0.2, -d + 0.2]`.
pub const SAMPLING_SLOPE_BAND: (f64, f64) = (-2.2, -0.8);
/// A gap this close to its ceiling is treated as saturated and left out of fits.
pub const SATURATION_TOL: f64 = 1e-3;

/// Long-range kernel of the exploring chain on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LongRangeGrid {
    Uniform,
    Cauchy(f64),
}

#[derive(Clone, Debug)]
pub struct ScalingConfig {
    pub grid: GridSpec,
    pub temperatures: Vec<f64>,
    pub s: f64,
    pub local_radius: usize,
    pub long_range: LongRangeGrid,
}

impl ScalingConfig {
    /// Two equal Laplace peaks of scale 0.25 at -50 and 50, on 401 cells of
    /// width 0.5 centred on the peaks, swept over `t = 1, 2, 4, 8, 16`.
    pub fn needle_pair() -> (LaplaceMixture, Self) {
        let target = LaplaceMixture::new(vec![(0.5, vec![-50.0], 0.25), (0.5, vec![50.0], 0.25)])
            .expect("valid peaks");
        let cfg = Self {
            grid: GridSpec::line(-100.25, 100.25, 401).expect("valid grid"),
            temperatures: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            s: 0.33,
            local_radius: 2,
            long_range: LongRangeGrid::Uniform,
        };
        (target, cfg)
    }

    /// Mode labelling used with [`ScalingConfig::needle_pair`]: the sign of the coordinate.
    pub fn needle_pair_mode(x: &ContinuousState) -> usize {
        usize::from(x[0] >= 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub t: f64,
    pub gap_ec: f64,
    pub gap_sc: f64,
    pub h_ec: f64,
    pub h_sc: f64,
    pub saturated_ec: bool,
    pub saturated_sc: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub dim: usize,
    pub ceiling: f64,
    pub rows: Vec<ScalingRow>,
    pub slope_ec: Option<f64>,
    pub slope_sc: Option<f64>,
    pub ec_band: (f64, f64),
    pub sc_band: (f64, f64),
    pub ec_band_pass: bool,
    pub sc_band_pass: bool,
    /// The sampling gap never increases along the sweep.
    pub sc_monotone: bool,
}

impl ScalingReport {
    pub fn passes(&self) -> bool {
        self.ec_band_pass && self.sc_band_pass && self.sc_monotone
    }
}

/// Gap of the component chain when the long-range branch accepts every
/// independent proposal: `P_c = (1 - s/2) I + (s/2) 1 q^T` has gap `s/2`
/// whatever the block masses `q`.
pub fn component_ceiling(s: f64) -> f64 {
    s / 2.0
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two distinct `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

fn partition_of(grid: &GridSpec, dist: &GridDistribution, mode_of: &dyn Fn(&ContinuousState) -> usize) -> Result<Partition> {
    Partition::new(dist.cells.iter().map(|&c| mode_of(&grid.center(c))).collect())
}

fn fitted(rows: &[ScalingRow], gap: fn(&ScalingRow) -> f64, saturated: fn(&ScalingRow) -> bool) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !saturated(r) && gap(r) > 0.0)
        .map(|r| (r.t.ln(), gap(r).ln()))
        .unzip();
    ols_slope(&x, &y)
}

/// For each temperature `t`: the exploring chain is the Small-World matrix on
/// `pi^(1/t)`; the sampling chain targets `pi` and draws long-range proposals
/// from `pi^(1/t)`. Both are reduced to component chains over the mode
/// partition given by `mode_of`, and their gaps and conductances are tabulated.
pub fn temperature_scaling_experiment<T>(
    target: &T,
    cfg: &ScalingConfig,
    mode_of: &dyn Fn(&ContinuousState) -> usize,
) -> Result<ScalingReport>
where
    T: LogDensity<ContinuousState> + ?Sized,
{
    if cfg.temperatures.is_empty() || cfg.temperatures.iter().any(|t| !(*t >= 1.0)) {
        return Err(Error::config("temperatures must be at least 1"));
    }
    if cfg.temperatures.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("temperatures must increase"));
    }
    let cold = discretize_target(target, &cfg.grid, 1.0)?;
    let cold_part = partition_of(&cfg.grid, &cold, mode_of)?;
    let q_cold = local_walk_matrix(&cfg.grid, &cold.cells, cfg.local_radius)?;
    let ceiling = component_ceiling(cfg.s);
    let mut rows = Vec::with_capacity(cfg.temperatures.len());
    for &t in &cfg.temperatures {
        let hot = discretize_target(target, &cfg.grid, t)?;
        let part = partition_of(&cfg.grid, &hot, mode_of)?;
        let q_local = local_walk_matrix(&cfg.grid, &hot.cells, cfg.local_radius)?;
        let q_long = match cfg.long_range {
            LongRangeGrid::Uniform => uniform_proposal_matrix(&cfg.grid, &hot.cells),
            LongRangeGrid::Cauchy(g) => cauchy_proposal_matrix(&cfg.grid, &hot.cells, g)?,
        };
        let exploring = assemble_small_world_matrix(&hot.pi, &q_local, &q_long, cfg.s)?;
        let ec = component_chain(&exploring, &part)?;
        let sampling =
            assemble_idealized_sampling_matrix(&cold.pi, &hot.on_cells(&cold.cells), &q_cold, cfg.s)?;
        let sc = component_chain(&sampling, &cold_part)?;
        let gap_ec = spectral_gap(&ec)?;
        let gap_sc = spectral_gap(&sc)?;
        rows.push(ScalingRow {
            t,
            gap_ec,
            gap_sc,
            h_ec: conductance(&ec, CutMode::Exact)?.value,
            h_sc: conductance(&sc, CutMode::Exact)?.value,
            saturated_ec: ceiling - gap_ec <= SATURATION_TOL,
            saturated_sc: ceiling - gap_sc <= SATURATION_TOL,
        });
    }
    let d = cfg.grid.dim() as f64;
    let ec_band = (EXPLORING_SLOPE_BAND.0 * d, EXPLORING_SLOPE_BAND.1 * d);
    let sc_band = (-2.0 * d - 0.2, -d + 0.2);
    let slope_ec = fitted(&rows, |r| r.gap_ec, |r| r.saturated_ec);
    let slope_sc = fitted(&rows, |r| r.gap_sc, |r| r.saturated_sc);
    let within = |s: Option<f64>, b: (f64, f64)| s.is_some_and(|v| b.0 <= v && v <= b.1);
    let sc_monotone = rows.windows(2).all(|w| w[1].gap_sc <= w[0].gap_sc + 1e-12);
    Ok(ScalingReport {
        dim: cfg.grid.dim(),
        ceiling,
        ec_band_pass: within(slope_ec, ec_band),
        sc_band_pass: within(slope_sc, sc_band),
        rows,
        slope_ec,
        slope_sc,
        ec_band,
        sc_band,
        sc_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn slope_of_a_line() {
        assert_abs_diff_eq!(ols_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(ols_slope(&[1.0], &[1.0]), None);
        assert_eq!(ols_slope(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn sampling_band_matches_one_dimension() {
        let d = 1.0;
        assert_eq!((-2.0 * d - 0.2, -d + 0.2), SAMPLING_SLOPE_BAND);
    }

    #[test]
    fn config_checks() {
        let (t, mut cfg) = ScalingConfig::needle_pair();
        cfg.temperatures = vec![2.0, 1.0];
        assert!(temperature_scaling_experiment(&t, &cfg, &ScalingConfig::needle_pair_mode).is_err());
        cfg.temperatures = vec![0.5];
        assert!(temperature_scaling_experiment(&t, &cfg, &ScalingConfig::needle_pair_mode).is_err());
    }
}
