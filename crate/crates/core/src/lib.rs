//! Approximate profile maximum likelihood.
//!
//! Given the profile of a sample (how many symbols appeared once, twice, ...),
//! find a discrete distribution that nearly maximizes the probability of
//! observing that profile, then evaluate symmetric properties on it.

pub mod allocation;
pub mod config;
pub mod distribution;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod oracle;
pub mod profile;
pub mod properties;
pub mod rounding;
pub mod sampling;
pub mod solver;

pub use config::{RunConfig, SolverConfig};
pub use distribution::{DistributionReport, Level, PseudoDistribution};
pub use error::{PmlError, Result};
pub use grid::{build_grid, round_distribution, scale_grid, Grid};
pub use profile::{Profile, ProfileEntry};
