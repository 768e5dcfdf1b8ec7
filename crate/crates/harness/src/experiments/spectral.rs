use serde::Serialize;
use steep::spectral::{
    assemble_small_world_matrix, cauchy_proposal_matrix, conductance, discretize_target, local_walk_matrix,
    peak_ratio_check, run_inequality_suites, temperature_scaling_experiment, uniform_proposal_matrix, Axis,
    CutMode, GridSpec, LongRangeGrid, ScalingConfig, SuiteTally,
};
use steep::ContinuousState;

use super::write_json;
use crate::config::{write_file, Experiment, GridLongRange, RunConfig};
use crate::error::{HarnessError, Result};
use crate::summary::SUMMARY_FILE;

pub const SCAN_FILE: &str = "scan.csv";
/// Tolerance on the tempered peak height of `Exp(1)` against `1/t`.
pub const PEAK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub t: f64,
    pub gap_exploring: f64,
    pub gap_sampling: f64,
    pub conductance_exploring: f64,
    pub conductance_sampling: f64,
    pub saturated_exploring: bool,
    pub saturated_sampling: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteLine {
    pub instances: usize,
    pub violations: usize,
    pub worst_margin: f64,
}

impl From<&SuiteTally> for SuiteLine {
    fn from(t: &SuiteTally) -> Self {
        Self {
            instances: t.instances,
            violations: t.violations,
            worst_margin: t.worst_margin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuitesReport {
    pub cheeger: SuiteLine,
    pub decomposition: SuiteLine,
    pub mixture: SuiteLine,
    pub detailed_balance: SuiteLine,
    pub row_stochastic: SuiteLine,
    pub minorisation: SuiteLine,
    /// Reported only; not a bound that must hold.
    pub minorisation_off_diagonal: SuiteLine,
    pub clean: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeakRow {
    pub t: f64,
    /// Normalised height ratio of the tempered `Exp(1)` density at 0.
    pub exponential: f64,
    pub exponential_error: f64,
    /// Same ratio for a standard Gaussian, against `t^-1/2`.
    pub gaussian: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    pub dim: usize,
    pub cells: usize,
    pub s: f64,
    pub ceiling: f64,
    pub rows: Vec<ScanRow>,
    pub slope_exploring: Option<f64>,
    pub slope_sampling: Option<f64>,
    pub band_exploring: (f64, f64),
    pub band_sampling: (f64, f64),
    pub exploring_in_band: bool,
    pub sampling_in_band: bool,
    pub sampling_monotone: bool,
    pub suites: SuitesReport,
    pub peaks: Vec<PeakRow>,
    /// Exact conductance of the full exploring chain, when requested.
    pub full_conductance: Option<f64>,
    pub passes: bool,
}

impl ScanReport {
    pub fn failures(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if !self.exploring_in_band {
            f.push("exploring slope outside its band");
        }
        if !self.sampling_in_band {
            f.push("sampling slope outside its band");
        }
        if !self.sampling_monotone {
            f.push("sampling gap not monotone");
        }
        if !self.suites.clean {
            f.push("inequality suite violation");
        }
        if !self.peaks.iter().all(|p| p.holds) {
            f.push("peak-height check failed");
        }
        f
    }
}

/// Index of the nearest mode; ties go to the later mode, so two modes at
/// `-c` and `c` split the line at `x >= 0`.
fn nearest(modes: &[Vec<f64>], x: &ContinuousState) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, m) in modes.iter().enumerate() {
        let d: f64 = x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
        if d <= best.1 {
            best = (i, d);
        }
    }
    best.0
}

pub fn run_spectral_scan(cfg: &RunConfig) -> Result<ScanReport> {
    if cfg.experiment != Experiment::SpectralScan {
        return Err(HarnessError::config("run_spectral_scan needs a spectral-scan config"));
    }
    cfg.validate()?;
    let spec = cfg.scan.as_ref().expect("validated");
    let target = cfg.target.continuous()?;
    let modes = target.optima();
    let grid = GridSpec::new(
        spec.grid
            .iter()
            .map(|a| Axis { lo: a.lo, hi: a.hi, count: a.count })
            .collect(),
    )?;
    let long_range = match spec.long_range {
        GridLongRange::Uniform => LongRangeGrid::Uniform,
        GridLongRange::Cauchy { gamma } => LongRangeGrid::Cauchy(gamma),
    };
    cfg.write_resolved()?;

    let full_conductance = if spec.full_conductance {
        let t = spec.temperatures.first().copied().unwrap_or(1.0);
        let hot = discretize_target(&target, &grid, t)?;
        let q_local = local_walk_matrix(&grid, &hot.cells, spec.local_radius)?;
        let q_long = match long_range {
            LongRangeGrid::Uniform => uniform_proposal_matrix(&grid, &hot.cells),
            LongRangeGrid::Cauchy(g) => cauchy_proposal_matrix(&grid, &hot.cells, g)?,
        };
        let chain = assemble_small_world_matrix(&hot.pi, &q_local, &q_long, cfg.s)?;
        Some(conductance(&chain, CutMode::Exact)?.value)
    } else {
        None
    };

    let scaling = ScalingConfig {
        grid: grid.clone(),
        temperatures: spec.temperatures.clone(),
        s: cfg.s,
        local_radius: spec.local_radius,
        long_range,
    };
    let r = temperature_scaling_experiment(&target, &scaling, &|x| nearest(&modes, x))?;
    let suites = run_inequality_suites(spec.suite_instances, cfg.seed())?;
    let suites = SuitesReport {
        cheeger: (&suites.cheeger).into(),
        decomposition: (&suites.sdt).into(),
        mixture: (&suites.mixture).into(),
        detailed_balance: (&suites.detailed_balance).into(),
        row_stochastic: (&suites.row_stochastic).into(),
        minorisation: (&suites.doeblin_all).into(),
        minorisation_off_diagonal: (&suites.doeblin_off_diagonal).into(),
        clean: suites.clean(),
    };

    let exp1 = |x: f64| if x < 0.0 { f64::NEG_INFINITY } else { -x };
    let gauss = |x: f64| -0.5 * x * x;
    let mut peaks = Vec::new();
    for &t in &spec.peak_temperatures {
        let e = peak_ratio_check(&exp1, 0.0, f64::INFINITY, 0.0, t)?;
        let g = peak_ratio_check(&gauss, f64::NEG_INFINITY, f64::INFINITY, 0.0, t)?;
        let err = (e.ratio - e.bound).abs();
        peaks.push(PeakRow {
            t,
            exponential: e.ratio,
            exponential_error: err,
            gaussian: g.ratio,
            bound: e.bound,
            holds: err <= PEAK_TOL && g.ratio >= g.bound && (g.ratio - t.powf(-0.5)).abs() <= PEAK_TOL,
        });
    }

    let rows: Vec<ScanRow> = r
        .rows
        .iter()
        .map(|row| ScanRow {
            t: row.t,
            gap_exploring: row.gap_ec,
            gap_sampling: row.gap_sc,
            conductance_exploring: row.h_ec,
            conductance_sampling: row.h_sc,
            saturated_exploring: row.saturated_ec,
            saturated_sampling: row.saturated_sc,
        })
        .collect();
    let mut report = ScanReport {
        dim: r.dim,
        cells: grid.n(),
        s: cfg.s,
        ceiling: r.ceiling,
        rows,
        slope_exploring: r.slope_ec,
        slope_sampling: r.slope_sc,
        band_exploring: r.ec_band,
        band_sampling: r.sc_band,
        exploring_in_band: r.ec_band_pass,
        sampling_in_band: r.sc_band_pass,
        sampling_monotone: r.sc_monotone,
        suites,
        peaks,
        full_conductance,
        passes: false,
    };
    report.passes = report.failures().is_empty();

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Numerical(format!("writing {SCAN_FILE}: {e}"));
    w.write_record([
        "t",
        "gap_exploring",
        "gap_sampling",
        "conductance_exploring",
        "conductance_sampling",
        "saturated_exploring",
        "saturated_sampling",
    ])
    .map_err(csv_err)?;
    for row in &report.rows {
        w.write_record([
            row.t.to_string(),
            row.gap_exploring.to_string(),
            row.gap_sampling.to_string(),
            row.conductance_exploring.to_string(),
            row.conductance_sampling.to_string(),
            u8::from(row.saturated_exploring).to_string(),
            u8::from(row.saturated_sampling).to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().expect("in-memory writer");
    write_file(&cfg.out.join(SCAN_FILE), &bytes)?;
    write_json(&cfg.out, SUMMARY_FILE, &report)?;
    Ok(report)
}
