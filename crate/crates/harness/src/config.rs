//! Run configuration: experiment defaults, a JSON file layered on top, then
//! command-line overrides. The merged result is validated before anything
//! runs and written next to the results.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use steep::phylo::{TreeTopology, TREE_A_NEWICK};
use steep::proposals::{CompoundNni, ContinuousKernel};
use steep::samplers::{geometric_ladder, TemperatureLadder};
use steep::target::{GaussianComponent, IsotropicGaussian, LaplaceMixture, MixtureTarget, Rosenbrock};
use steep::{ContinuousState, LogDensity};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Needles,
    Phylo,
    SpectralScan,
    Optimize,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Needles => "needles",
            Self::Phylo => "phylo",
            Self::SpectralScan => "spectral-scan",
            Self::Optimize => "optimize",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Temperatures as an explicit list starting at 1, a geometric ladder
/// `(t_hot, tau)`, or a pilot-tuned ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderSpec {
    Explicit(Vec<f64>),
    Geometric { t_hot: f64, tau: f64 },
    Auto,
}

impl LadderSpec {
    /// The ladder itself; `None` for `Auto`, which needs a pilot run.
    pub fn fixed(&self) -> Result<Option<TemperatureLadder>> {
        Ok(match self {
            Self::Explicit(t) => Some(TemperatureLadder::new(t.clone())?),
            Self::Geometric { t_hot, tau } => Some(geometric_ladder(*t_hot, *tau)?),
            Self::Auto => None,
        })
    }
}

/// `auto`, `t_H,tau`, or a comma-separated list whose first entry is 1.
impl FromStr for LadderSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("ladder entry {v:?}: {e}")))
            .collect::<std::result::Result<Vec<f64>, String>>()?;
        match values.as_slice() {
            [] | [_] => Err(format!("ladder {s:?}: expected auto, t_H,tau or a list starting at 1")),
            [first, ..] if *first == 1.0 => Ok(Self::Explicit(values)),
            [t_hot, tau] => Ok(Self::Geometric { t_hot: *t_hot, tau: *tau }),
            _ => Err(format!("ladder {s:?}: an explicit list must start at 1")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    Ball { radius: f64 },
    Gaussian { sigma: f64 },
    Cauchy { gamma: f64 },
    Nni,
    CompoundNni { min_moves: usize, p: f64 },
}

impl KernelSpec {
    pub fn continuous(&self) -> Result<ContinuousKernel> {
        Ok(match *self {
            Self::Ball { radius } => ContinuousKernel::ball(radius)?,
            Self::Gaussian { sigma } => ContinuousKernel::gaussian(sigma)?,
            Self::Cauchy { gamma } => ContinuousKernel::cauchy(gamma)?,
            _ => return Err(HarnessError::config(format!("{self:?} is not a kernel on R^d"))),
        })
    }

    fn is_tree_kernel(&self) -> bool {
        matches!(self, Self::Nni | Self::CompoundNni { .. })
    }

    pub fn compound(&self) -> Result<Option<CompoundNni>> {
        match *self {
            Self::Nni => Ok(None),
            Self::CompoundNni { min_moves, p } => Ok(Some(CompoundNni::new(min_moves, p)?)),
            _ => Err(HarnessError::config(format!("{self:?} is not a tree kernel"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplacePeak {
    pub weight: f64,
    pub center: Vec<f64>,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhyloData {
    /// Alignment file; when absent the alignment is simulated from `tree`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fasta: Option<PathBuf>,
    /// Generating tree, also the first of the two modes.
    pub tree: String,
    /// Sites simulated before the swapped copy is appended.
    pub sites: usize,
    /// The two taxa (1-based) whose rows are exchanged in the copy; the
    /// second mode is `tree` with these labels exchanged.
    pub swap: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    /// `0.5 N(0, var I) + 0.5 N(mu2, var I)` in the plane.
    Needles { mu2: [f64; 2], variance: f64 },
    Gaussian { mean: Vec<f64>, variance: f64 },
    Rosenbrock { a: f64, b: f64, shift: [f64; 2] },
    Laplace { peaks: Vec<LaplacePeak> },
    Phylo(PhyloData),
}

/// A continuous target built from a [`TargetSpec`], with its known optima.
#[derive(Clone, Debug)]
pub enum ContinuousTarget {
    Mixture(MixtureTarget),
    Gaussian(IsotropicGaussian),
    Rosenbrock(Rosenbrock),
    /// The mixture and its peak centres.
    Laplace(LaplaceMixture, Vec<Vec<f64>>),
}

impl ContinuousTarget {
    pub fn dim(&self) -> usize {
        match self {
            Self::Mixture(m) => m.dim(),
            Self::Gaussian(g) => g.mean.len(),
            Self::Rosenbrock(_) => 2,
            Self::Laplace(l, _) => l.dim(),
        }
    }

    /// Modes (mixture means, peak centres) or the unique maximiser.
    pub fn optima(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Mixture(m) => m.components().iter().map(|c| c.mean.clone()).collect(),
            Self::Gaussian(g) => vec![g.mean.clone()],
            Self::Rosenbrock(r) => vec![r.argmax().to_vec()],
            Self::Laplace(_, centers) => centers.clone(),
        }
    }
}

impl LogDensity<ContinuousState> for ContinuousTarget {
    fn log_density(&self, x: &ContinuousState) -> f64 {
        match self {
            Self::Mixture(t) => t.log_density(x),
            Self::Gaussian(t) => t.log_density(x),
            Self::Rosenbrock(t) => t.log_density(x),
            Self::Laplace(t, _) => t.log_density(x),
        }
    }
    fn check_state(&self, x: &ContinuousState) -> steep::Result<()> {
        match self {
            Self::Mixture(t) => t.check_state(x),
            Self::Gaussian(t) => t.check_state(x),
            Self::Rosenbrock(t) => t.check_state(x),
            Self::Laplace(t, _) => t.check_state(x),
        }
    }
}

impl TargetSpec {
    pub fn continuous(&self) -> Result<ContinuousTarget> {
        Ok(match self {
            Self::Needles { mu2, variance } => ContinuousTarget::Mixture(MixtureTarget::needles(*mu2, *variance)?),
            Self::Gaussian { mean, variance } => {
                // validated through the mixture constructor
                MixtureTarget::new(vec![GaussianComponent {
                    weight: 1.0,
                    mean: mean.clone(),
                    variance: vec![*variance; mean.len()],
                }])?;
                ContinuousTarget::Gaussian(IsotropicGaussian {
                    mean: mean.clone(),
                    variance: *variance,
                })
            }
            Self::Rosenbrock { a, b, shift } => {
                if !(a.is_finite() && *b > 0.0 && shift.iter().all(|v| v.is_finite())) {
                    return Err(HarnessError::config("rosenbrock needs finite a and shift and b > 0"));
                }
                ContinuousTarget::Rosenbrock(Rosenbrock { a: *a, b: *b, shift: *shift })
            }
            Self::Laplace { peaks } => ContinuousTarget::Laplace(
                LaplaceMixture::new(peaks.iter().map(|p| (p.weight, p.center.clone(), p.scale)).collect())?,
                peaks.iter().map(|p| p.center.clone()).collect(),
            ),
            Self::Phylo(_) => return Err(HarnessError::config("a tree target has no continuous state")),
        })
    }

    pub fn modes(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.continuous()?.optima())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    /// Post-burn-in iterations that are multiples of `thin`, every chain.
    Kept,
    /// As `Kept`, coldest chain only.
    Coldest,
    /// Every transition of every chain.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeedlesSpec {
    /// Radius of the region around the first mean whose occupancy is reported.
    pub region_radius: f64,
    /// Steps of the plain local-kernel chain run for comparison (0 = skip).
    pub baseline_steps: u64,
    /// The comparison chain counts visits within this distance of the second mean.
    pub far_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub taxa: usize,
    pub sites: usize,
    pub swap: [usize; 2],
    pub sweeps: u64,
    pub burn_in: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhyloSpec {
    /// Starting tree; the target tree when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
    /// Steps of the plain NNI chain run for comparison (0 = skip).
    pub baseline_steps: u64,
    /// Compare the cold chain with the exhaustive posterior of the main instance.
    pub exact_posterior: bool,
    /// A smaller instance sampled long enough to compare with its exhaustive posterior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridLongRange {
    Uniform,
    Cauchy { gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub grid: Vec<AxisSpec>,
    pub temperatures: Vec<f64>,
    pub local_radius: usize,
    pub long_range: GridLongRange,
    /// Random instances per inequality suite.
    pub suite_instances: usize,
    /// Temperatures for the tempered peak-height checks.
    pub peak_temperatures: Vec<f64>,
    /// Also ask for the exact conductance of the full exploring chain at the
    /// first temperature; only feasible on tiny grids.
    pub full_conductance: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSpec {
    /// Rungs added below temperature 1.
    pub cold_steps: usize,
    /// Radius of the ball around the best state used for the first-entry time.
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub reps: u64,
    /// Iterations after burn-in.
    pub n_iter: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub s: f64,
    pub ladder: LadderSpec,
    pub target: TargetSpec,
    pub local: KernelSpec,
    pub long_range: KernelSpec,
    /// Starting point for continuous targets; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub trace: TraceLevel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub needles: Option<NeedlesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phylo: Option<PhyloSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSpec>,
}

/// Values given on the command line; each replaces the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub reps: Option<u64>,
    pub iters: Option<u64>,
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
    pub ladder: Option<LadderSpec>,
    pub s: Option<f64>,
}

/// Sections merged key by key; every other key is replaced whole.
const MERGED_SECTIONS: [&str; 4] = ["needles", "phylo", "scan", "optimize"];

impl RunConfig {
    /// Default settings for each experiment, without a seed.
    pub fn defaults(experiment: Experiment) -> Self {
        let needles_target = TargetSpec::Needles { mu2: [5.0, 5.0], variance: 0.01 };
        let base = Self {
            experiment,
            seed: None,
            out: PathBuf::from("runs").join(experiment.name()),
            reps: 100,
            n_iter: 10_000,
            burn_in: 1000,
            thin: 10,
            s: 0.33,
            ladder: LadderSpec::Geometric { t_hot: 7776.0, tau: 6.0 },
            target: needles_target,
            local: KernelSpec::Ball { radius: 0.1 },
            long_range: KernelSpec::Cauchy { gamma: 1.0 },
            x0: Some(vec![0.0, 0.0]),
            trace: TraceLevel::Kept,
            needles: None,
            phylo: None,
            scan: None,
            optimize: None,
        };
        match experiment {
            Experiment::Needles => Self {
                needles: Some(NeedlesSpec {
                    region_radius: 0.05,
                    baseline_steps: 1_000_000,
                    far_radius: 1.0,
                }),
                ..base
            },
            Experiment::Phylo => Self {
                reps: 1,
                n_iter: 45_000,
                burn_in: 5000,
                ladder: LadderSpec::Geometric { t_hot: 1000.0, tau: 10.0 },
                target: TargetSpec::Phylo(PhyloData {
                    fasta: None,
                    tree: TREE_A_NEWICK.to_string(),
                    sites: 1000,
                    swap: [2, 7],
                }),
                local: KernelSpec::Nni,
                long_range: KernelSpec::CompoundNni { min_moves: 2, p: 0.5 },
                x0: None,
                phylo: Some(PhyloSpec {
                    start: None,
                    baseline_steps: 1_000_000,
                    exact_posterior: true,
                    oracle: Some(OracleSpec {
                        taxa: 6,
                        sites: 25,
                        swap: [2, 5],
                        sweeps: 1_000_000,
                        burn_in: 10_000,
                    }),
                }),
                ..base
            },
            Experiment::SpectralScan => Self {
                reps: 1,
                n_iter: 0,
                burn_in: 0,
                thin: 1,
                target: TargetSpec::Laplace {
                    peaks: vec![
                        LaplacePeak { weight: 0.5, center: vec![-50.0], scale: 0.25 },
                        LaplacePeak { weight: 0.5, center: vec![50.0], scale: 0.25 },
                    ],
                },
                x0: None,
                scan: Some(ScanSpec {
                    grid: vec![AxisSpec { lo: -100.25, hi: 100.25, count: 401 }],
                    temperatures: vec![1.0, 2.0, 4.0, 8.0, 16.0],
                    local_radius: 2,
                    long_range: GridLongRange::Uniform,
                    suite_instances: 100,
                    peak_temperatures: vec![2.0, 4.0, 8.0],
                    full_conductance: false,
                }),
                ..base
            },
            Experiment::Optimize => Self {
                reps: 10,
                x0: Some(vec![2.5, 2.5]),
                optimize: Some(OptimizeSpec { cold_steps: 3, epsilon: 0.05 }),
                ..base
            },
        }
    }

    /// Defaults, then the file at `path` (if any), then `overrides`; validated.
    pub fn resolve(experiment: Experiment, path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults(experiment)).expect("defaults serialise");
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))?;
            merge(&mut value, file, experiment)?;
        }
        let mut cfg: Self = serde_json::from_value(value).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = Some(v);
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.reps {
            self.reps = v;
        }
        if let Some(v) = o.iters {
            self.n_iter = v;
        }
        if let Some(v) = o.burn_in {
            self.burn_in = v;
        }
        if let Some(v) = o.thin {
            self.thin = v;
        }
        if let Some(v) = &o.ladder {
            self.ladder = v.clone();
        }
        if let Some(v) = o.s {
            self.s = v;
        }
    }

    /// The seed; only `None` before validation.
    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.seed.is_none() {
            return bad("a seed is required: pass --seed or set \"seed\" in the config file".into());
        }
        if self.reps == 0 || self.reps > u32::MAX as u64 {
            return bad(format!("reps must lie in 1..=2^32-1, got {}", self.reps));
        }
        if self.thin == 0 {
            return bad("thin must be >= 1".into());
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("s must lie in (0, 1), got {}", self.s));
        }
        self.ladder.fixed()?;
        let section = |present: bool, name: &str| {
            if present {
                Ok(())
            } else {
                Err(HarnessError::config(format!("{} needs a \"{name}\" section", self.experiment)))
            }
        };
        match self.experiment {
            Experiment::Needles | Experiment::Optimize => {
                let target = self.target.continuous()?;
                self.local.continuous()?;
                self.long_range.continuous()?;
                let x0 = self.start_point(&target)?;
                steep::log_density_at(&target, &x0)?;
                if self.experiment == Experiment::Needles {
                    section(self.needles.is_some(), "needles")?;
                    if !matches!(self.target, TargetSpec::Needles { .. }) {
                        return bad("needles runs need a needles target".into());
                    }
                    let n = self.needles.as_ref().expect("checked");
                    if !(n.region_radius > 0.0 && n.far_radius > 0.0) {
                        return bad("region_radius and far_radius must be positive".into());
                    }
                } else {
                    section(self.optimize.is_some(), "optimize")?;
                    let o = self.optimize.as_ref().expect("checked");
                    if !(o.epsilon > 0.0) {
                        return bad("epsilon must be positive".into());
                    }
                    if matches!(self.ladder, LadderSpec::Auto) {
                        return bad("optimize needs a fixed ladder to extend below 1".into());
                    }
                }
            }
            Experiment::Phylo => {
                section(self.phylo.is_some(), "phylo")?;
                let TargetSpec::Phylo(data) = &self.target else {
                    return bad("phylo runs need a phylo target".into());
                };
                if !(self.local.is_tree_kernel() && self.long_range.is_tree_kernel()) {
                    return bad("phylo runs need nni / compound_nni kernels".into());
                }
                self.long_range.compound()?;
                let tree = TreeTopology::from_newick(&data.tree)?;
                let n = tree.n_taxa();
                let [i, j] = data.swap;
                if i == 0 || j == 0 || i > n || j > n || i == j {
                    return bad(format!("swap taxa {:?} must be two distinct labels in 1..={n}", data.swap));
                }
                if data.fasta.is_none() && data.sites == 0 {
                    return bad("sites must be >= 1".into());
                }
                let p = self.phylo.as_ref().expect("checked");
                if let Some(start) = &p.start {
                    if TreeTopology::from_newick(start)?.n_taxa() != n {
                        return bad("start tree and target tree differ in taxa".into());
                    }
                }
                if let Some(o) = &p.oracle {
                    if !(4..=steep::phylo::MAX_ENUMERATION_TAXA).contains(&o.taxa) || o.sites == 0 {
                        return bad("oracle needs 4..=8 taxa and at least one site".into());
                    }
                    let [a, b] = o.swap;
                    if a == 0 || b == 0 || a > o.taxa || b > o.taxa || a == b {
                        return bad(format!("oracle swap {:?} outside 1..={}", o.swap, o.taxa));
                    }
                }
            }
            Experiment::SpectralScan => {
                section(self.scan.is_some(), "scan")?;
                let scan = self.scan.as_ref().expect("checked");
                self.target.continuous()?;
                if self.target.modes()?.len() < 2 {
                    return bad("the scan needs a target with at least two modes".into());
                }
                if scan.grid.len() != self.target.continuous()?.dim() {
                    return bad("grid and target dimensions differ".into());
                }
                if scan.suite_instances == 0 {
                    return bad("suite_instances must be >= 1".into());
                }
                if let GridLongRange::Cauchy { gamma } = scan.long_range {
                    if !(gamma > 0.0) {
                        return bad("grid cauchy scale must be positive".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// `x0`, or the origin of the target's space.
    pub fn start_point(&self, target: &ContinuousTarget) -> Result<ContinuousState> {
        let x = match &self.x0 {
            Some(v) => ContinuousState::new(v.clone())?,
            None => ContinuousState::zeros(target.dim()),
        };
        if x.dim() != target.dim() {
            return Err(HarnessError::config(format!(
                "x0 has {} coordinates, target has {}",
                x.dim(),
                target.dim()
            )));
        }
        Ok(x)
    }

    /// Writes `config.json` and `seed.txt` into the output directory.
    pub fn write_resolved(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| HarnessError::io(&self.out, e))?;
        let json = serde_json::to_string_pretty(self).expect("config serialises");
        write_file(&self.out.join("config.json"), format!("{json}\n").as_bytes())?;
        write_file(&self.out.join("seed.txt"), format!("{}\n", self.seed()).as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::config(format!("{}: {e}", path.display())))
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn merge(base: &mut Value, file: Value, experiment: Experiment) -> Result<()> {
    let Value::Object(file) = file else {
        return Err(HarnessError::config("config file must hold a JSON object"));
    };
    let base = base.as_object_mut().expect("defaults are an object");
    for (key, v) in file {
        if key == "experiment" && v != Value::String(experiment.name().into()) {
            return Err(HarnessError::config(format!(
                "config file is for experiment {v}, not {experiment}"
            )));
        }
        match (base.get_mut(&key), v) {
            (Some(Value::Object(old)), Value::Object(new)) if MERGED_SECTIONS.contains(&key.as_str()) => {
                old.extend(new);
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
    Ok(())
}

/// `newick` with leaf labels `i` and `j` exchanged.
pub fn swap_labels(newick: &str, i: usize, j: usize) -> String {
    let (a, b) = (i.to_string(), j.to_string());
    let mut out = String::with_capacity(newick.len());
    let mut token = String::new();
    let flush = |token: &mut String, out: &mut String| {
        let t = token.trim();
        if t == a {
            out.push_str(&b);
        } else if t == b {
            out.push_str(&a);
        } else {
            out.push_str(token);
        }
        token.clear();
    };
    let mut in_length = false;
    for c in newick.chars() {
        match c {
            '(' | ')' | ',' | ';' => {
                if in_length {
                    out.push_str(&token);
                    token.clear();
                } else {
                    flush(&mut token, &mut out);
                }
                in_length = false;
                out.push(c);
            }
            ':' => {
                flush(&mut token, &mut out);
                in_length = true;
                out.push(c);
            }
            _ => token.push(c),
        }
    }
    if in_length {
        out.push_str(&token);
    } else {
        flush(&mut token, &mut out);
    }
    out
}

/// `(((1,2),3),...,n)`: the caterpillar on `n` taxa.
pub fn caterpillar(n: usize) -> String {
    let mut s = "(1,2)".to_string();
    for k in 3..=n {
        s = format!("({s},{k})");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use steep::phylo::TREE_B_NEWICK;

    #[test]
    fn ladder_strings() {
        assert_eq!("auto".parse::<LadderSpec>().unwrap(), LadderSpec::Auto);
        assert_eq!(
            "7776,6".parse::<LadderSpec>().unwrap(),
            LadderSpec::Geometric { t_hot: 7776.0, tau: 6.0 }
        );
        assert_eq!("1,6".parse::<LadderSpec>().unwrap(), LadderSpec::Explicit(vec![1.0, 6.0]));
        assert_eq!(
            "1, 4, 16".parse::<LadderSpec>().unwrap(),
            LadderSpec::Explicit(vec![1.0, 4.0, 16.0])
        );
        assert!("4,16,64".parse::<LadderSpec>().is_err());
        assert!("5".parse::<LadderSpec>().is_err());
        assert!("1,x".parse::<LadderSpec>().is_err());
    }

    #[test]
    fn swapping_labels_of_tree_a_gives_tree_b() {
        let b = swap_labels(TREE_A_NEWICK, 2, 7);
        assert_eq!(
            TreeTopology::from_newick(&b).unwrap().canonical(),
            TreeTopology::from_newick(TREE_B_NEWICK).unwrap().canonical()
        );
        assert_eq!(swap_labels("(1:0.12,12:1,2);", 1, 2), "(2:0.12,12:1,1);");
    }

    #[test]
    fn caterpillar_shape() {
        assert_eq!(caterpillar(4), "(((1,2),3),4)");
        assert_eq!(TreeTopology::from_newick(&caterpillar(6)).unwrap().n_taxa(), 6);
    }

    #[test]
    fn seed_is_required() {
        let err = RunConfig::resolve(Experiment::Needles, None, &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let cfg = RunConfig::resolve(
            Experiment::Needles,
            None,
            &Overrides { seed: Some(3), ..Default::default() },
        )
        .unwrap();
        assert_eq!(cfg.seed(), 3);
    }

    #[test]
    fn file_then_flags() {
        let dir = std::env::temp_dir().join(format!("steep-config-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        fs::write(&path, r#"{"seed": 9, "reps": 4, "needles": {"region_radius": 0.1}}"#).unwrap();
        let cfg = RunConfig::resolve(
            Experiment::Needles,
            Some(&path),
            &Overrides { reps: Some(2), ..Default::default() },
        )
        .unwrap();
        assert_eq!(cfg.seed(), 9);
        assert_eq!(cfg.reps, 2);
        let n = cfg.needles.unwrap();
        assert_eq!(n.region_radius, 0.1);
        assert_eq!(n.far_radius, 1.0);

        fs::write(&path, r#"{"seed": 9, "bogus": 1}"#).unwrap();
        assert!(RunConfig::resolve(Experiment::Needles, Some(&path), &Overrides::default()).is_err());
        fs::write(&path, r#"{"seed": 9, "experiment": "phylo"}"#).unwrap();
        assert!(RunConfig::resolve(Experiment::Needles, Some(&path), &Overrides::default()).is_err());
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn invalid_values_are_rejected_before_running() {
        let seeded = Overrides { seed: Some(1), ..Default::default() };
        for o in [
            Overrides { s: Some(1.0), ..seeded.clone() },
            Overrides { thin: Some(0), ..seeded.clone() },
            Overrides { reps: Some(0), ..seeded.clone() },
            Overrides { ladder: Some(LadderSpec::Explicit(vec![2.0, 4.0])), ..seeded.clone() },
        ] {
            assert_eq!(RunConfig::resolve(Experiment::Needles, None, &o).unwrap_err().exit_code(), 2);
        }
        for e in [Experiment::Needles, Experiment::Phylo, Experiment::SpectralScan, Experiment::Optimize] {
            RunConfig::resolve(e, None, &seeded).unwrap();
        }
    }
}
