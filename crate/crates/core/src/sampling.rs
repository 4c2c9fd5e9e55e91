//! Synthetic distribution families and seeded sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{PmlError, Result};
use crate::profile::Profile;

/// Families used for benchmarking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uniform { k: usize },
    /// `p_i` proportional to `i^-s` for `i = 1..=k`.
    Zipf { k: usize, s: f64 },
}

impl Family {
    pub fn probs(&self) -> Result<Vec<f64>> {
        match *self {
            Self::Uniform { k } if k > 0 => Ok(vec![1.0 / k as f64; k]),
            Self::Zipf { k, s } if k > 0 && s.is_finite() && s >= 0.0 => {
                let w: Vec<f64> = (1..=k).map(|i| (i as f64).powf(-s)).collect();
                let z: f64 = w.iter().sum();
                Ok(w.into_iter().map(|v| v / z).collect())
            }
            _ => Err(PmlError::InvalidParameter(format!("bad family {self:?}"))),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Uniform { k } => format!("uniform(k={k})"),
            Self::Zipf { k, s } => format!("zipf(k={k},s={s})"),
        }
    }
}

/// Per-symbol counts of `n` draws from `probs`. Xoshiro256++ is seeded from
/// `seed` through SplitMix64, so equal seeds give equal samples everywhere.
pub fn sample_counts(probs: &[f64], n: u64, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| PmlError::InvalidParameter(format!("sampling weights: {e}")))?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Profile of `n` draws from `probs`.
pub fn sample_profile(probs: &[f64], n: u64, seed: u64) -> Result<Profile> {
    Profile::from_frequencies(sample_counts(probs, n, seed)?)
}
