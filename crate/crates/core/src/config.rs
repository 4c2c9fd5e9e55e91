//! Run-time knobs shared by the library and the command line.

use serde::{Deserialize, Serialize};

use crate::error::{PmlError, Result};

/// Stopping rules for the convex solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute duality-gap tolerance. The solver also accepts the looser
    /// target `0.01 * min(k, levels) * ln n`, whichever is larger.
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Kept for reproducible runs; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-4,
            max_iters: 5000,
            seed: 0,
        }
    }
}

/// Parameters of a full estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Grid resolution exponent: consecutive levels differ by `1 + n^-alpha`.
    pub alpha: f64,
    pub solver: SolverConfig,
    /// Re-solve over the winning scale's support levels before discretizing.
    pub resolve_levels: bool,
    /// Upper bound on the number of scales tried.
    pub max_scales: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(PmlError::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.solver.gap_tol > 0.0 && self.solver.gap_tol.is_finite()) {
            return Err(PmlError::InvalidParameter(format!(
                "gap tolerance must be positive, got {}",
                self.solver.gap_tol
            )));
        }
        if self.solver.max_iters == 0 || self.max_scales == 0 {
            return Err(PmlError::InvalidParameter("iteration and scale limits must be positive".into()));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0 / 3.0,
            solver: SolverConfig::default(),
            resolve_levels: false,
            max_scales: 200,
        }
    }
}
