//! Tempered Small-World MCMC with empirical-ensemble long-range proposals.
//!
//! The crate is organised around a handful of pieces:
//!
//! * [`target`]: state spaces, log-densities and the tempering wrapper.
//! * [`rng`]: the seeded, stream-addressable generator every sampler draws from.
//! * [`proposals`]: local and long-range kernels for vectors, grid indices and trees.
//! * [`empirical`]: the append-only sample store that hotter chains feed to colder ones.
//! * [`samplers`]: Metropolis-Hastings, Small-World, replica-swap baseline, the
//!   multi-chain tempered sampler, its optimiser mode and ladder construction.
//! * [`spectral`]: exact analysis of finite reversible chains (conductance,
//!   spectral gap, component/restricted chains, the temperature-scaling sweep).
//! * [`phylo`]: unrooted tree topologies, Jukes-Cantor pruning likelihood and an
//!   exhaustive topology oracle.

pub mod empirical;
pub mod error;
pub mod phylo;
pub mod proposals;
pub mod rng;
pub mod samplers;
pub mod spectral;
pub mod target;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use target::{log_density_at, ContinuousState, LogDensity, Tempered};
