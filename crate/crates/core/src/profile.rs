//! Frequency-of-frequency summaries of a sample.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{PmlError, Result};

/// One profile entry: `count` distinct symbols were each seen `freq` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub freq: u64,
    pub count: u64,
}

/// A validated profile. Entries are sorted by strictly increasing frequency
/// and `n` equals the sum of `freq * count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct Profile {
    n: u64,
    entries: Vec<ProfileEntry>,
}

#[derive(Deserialize)]
struct RawProfile {
    n: u64,
    entries: Vec<ProfileEntry>,
}

impl TryFrom<RawProfile> for Profile {
    type Error = PmlError;

    fn try_from(raw: RawProfile) -> Result<Self> {
        let p = Profile::from_entries(raw.entries)?;
        if p.n != raw.n {
            return Err(PmlError::InvalidEntry(format!(
                "declared n = {} but entries account for {} samples",
                raw.n, p.n
            )));
        }
        Ok(p)
    }
}

impl Profile {
    /// Builds a profile from (frequency, count) entries in any order.
    pub fn from_entries(mut entries: Vec<ProfileEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(PmlError::EmptyInput);
        }
        for e in &entries {
            if e.freq == 0 || e.count == 0 {
                return Err(PmlError::InvalidEntry(format!(
                    "freq and count must be positive, got freq={} count={}",
                    e.freq, e.count
                )));
            }
        }
        entries.sort_by_key(|e| e.freq);
        for w in entries.windows(2) {
            if w[0].freq == w[1].freq {
                return Err(PmlError::DuplicateFrequency(w[0].freq));
            }
        }
        let mut n: u64 = 0;
        for e in &entries {
            n = e
                .freq
                .checked_mul(e.count)
                .and_then(|x| x.checked_add(n))
                .ok_or_else(|| PmlError::InvalidEntry("sample size overflows u64".into()))?;
        }
        Ok(Self { n, entries })
    }

    /// Convenience constructor from `(freq, count)` pairs.
    pub fn from_pairs(pairs: &[(u64, u64)]) -> Result<Self> {
        Self::from_entries(
            pairs
                .iter()
                .map(|&(freq, count)| ProfileEntry { freq, count })
                .collect(),
        )
    }

    /// Profile of a sequence of observed symbols.
    pub fn from_samples<T, I>(samples: I) -> Result<Self>
    where
        T: Eq + Hash,
        I: IntoIterator<Item = T>,
    {
        let mut counts: HashMap<T, u64> = HashMap::new();
        for s in samples {
            *counts.entry(s).or_insert(0) += 1;
        }
        Self::from_frequencies(counts.into_values())
    }

    /// Profile of per-symbol occurrence counts. Zero counts are ignored.
    pub fn from_frequencies<I: IntoIterator<Item = u64>>(freqs: I) -> Result<Self> {
        let mut by_freq: HashMap<u64, u64> = HashMap::new();
        for f in freqs.into_iter().filter(|&f| f > 0) {
            *by_freq.entry(f).or_insert(0) += 1;
        }
        Self::from_entries(
            by_freq
                .into_iter()
                .map(|(freq, count)| ProfileEntry { freq, count })
                .collect(),
        )
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }

    /// Number of distinct nonzero frequencies.
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// Number of distinct observed symbols.
    pub fn distinct(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn freqs(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.freq).collect()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.count).collect()
    }

    /// `ln(n! / prod_j (m_j!)^{phi_j})`.
    pub fn log_c_phi(&self) -> f64 {
        let denom: f64 = self
            .entries
            .iter()
            .map(|e| e.count as f64 * ln_factorial(e.freq))
            .sum();
        ln_factorial(self.n) - denom
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("profile serialization cannot fail")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
