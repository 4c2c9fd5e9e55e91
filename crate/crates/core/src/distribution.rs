//! Pseudo-distributions: multisets of probability levels with total mass at most 1.

use serde::{Deserialize, Serialize};

use crate::error::{PmlError, Result};

/// `count` symbols, each with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub p: f64,
    pub count: u64,
}

/// Levels sorted by increasing probability, merged, all positive.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudoDistribution {
    levels: Vec<Level>,
}

impl PseudoDistribution {
    /// Sorts, merges equal probabilities and drops zero counts.
    pub fn new(levels: impl IntoIterator<Item = Level>) -> Result<Self> {
        let mut v: Vec<Level> = levels.into_iter().filter(|l| l.count > 0).collect();
        for l in &v {
            if !(l.p.is_finite() && l.p > 0.0) {
                return Err(PmlError::DomainError(format!(
                    "level probabilities must be positive and finite, got {}",
                    l.p
                )));
            }
        }
        v.sort_by(|a, b| a.p.total_cmp(&b.p));
        let mut merged: Vec<Level> = Vec::with_capacity(v.len());
        for l in v {
            match merged.last_mut() {
                Some(last) if last.p == l.p => last.count += l.count,
                _ => merged.push(l),
            }
        }
        Ok(Self { levels: merged })
    }

    /// Distribution from explicit per-symbol probabilities.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| Level { p, count: 1 }))
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn total_mass(&self) -> f64 {
        self.levels.iter().map(|l| l.p * l.count as f64).sum()
    }

    /// Number of symbols with positive probability.
    pub fn support(&self) -> u64 {
        self.levels.iter().map(|l| l.count).sum()
    }

    /// Rescaled copy with unit mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.total_mass();
        if !(m > 0.0) {
            return Err(PmlError::DomainError("distribution has zero mass".into()));
        }
        Self::new(self.levels.iter().map(|l| Level {
            p: l.p / m,
            count: l.count,
        }))
    }

    /// One probability per symbol, in increasing order.
    pub fn expand(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat_n(l.p, l.count as usize))
            .collect()
    }

    pub fn report(&self, scale: Option<f64>, log_objective: Option<f64>) -> DistributionReport {
        DistributionReport {
            levels: self.levels.clone(),
            total_mass: self.total_mass(),
            scale,
            log_objective,
        }
    }
}

/// Serialized form of an estimated distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub levels: Vec<Level>,
    pub total_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub log_objective: Option<f64>,
}

impl DistributionReport {
    pub fn distribution(&self) -> Result<PseudoDistribution> {
        PseudoDistribution::new(self.levels.iter().copied())
    }
}
