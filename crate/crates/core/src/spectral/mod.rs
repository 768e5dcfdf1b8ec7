//! Exact analysis of finite Markov chains.
//!
//! Targets are discretised onto grids, Metropolis-Hastings and Small-World
//! kernels are assembled as dense matrices, and conductance, spectral gaps and
//! the component/restricted decomposition are computed exactly.

mod bounds;
mod finite;
mod grid;
mod peaks;
mod random;
mod scaling;
mod suites;

pub use bounds::{
    cheeger_check, doeblin_bounds, mixture_bound_check, sdt_check, CheegerCheck, DoeblinBounds,
    MixtureCheck, SdtCheck, BOUND_SLACK,
};
pub use finite::{
    component_chain, conductance, relaxation_gap, restricted_chain, spectral_gap, spectrum,
    Conductance, CutMode, FiniteChain, Partition, EXACT_CONDUCTANCE_MAX, STOCHASTIC_TOL,
};
pub use grid::{
    assemble_idealized_sampling_matrix, assemble_mh_matrix, assemble_small_world_matrix,
    cauchy_proposal_matrix, discretize_target, independence_proposal_matrix, local_walk_matrix,
    uniform_proposal_matrix, Axis, GridDistribution, GridSpec, MAX_GRID_STATES,
};
pub use peaks::{
    local_conductance_lower_bound, normalization_ratio_check, peak_ratio_check, NormalizationReport,
    Peak, PeakRatio,
};
pub use random::{random_lazy_reversible_chain, random_partition, random_proposal_matrix};
pub use scaling::{
    component_ceiling, ols_slope, temperature_scaling_experiment, LongRangeGrid, ScalingConfig,
    ScalingReport, ScalingRow, EXPLORING_SLOPE_BAND, SAMPLING_SLOPE_BAND, SATURATION_TOL,
};
pub use suites::{run_inequality_suites, SuiteReport, SuiteTally};
