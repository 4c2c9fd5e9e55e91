//! Exact profile probabilities and exact discrete PML for tiny inputs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::distribution::{Level, PseudoDistribution};
use crate::error::{PmlError, Result};
use crate::grid::Grid;
use crate::profile::Profile;

/// Largest number of sequences enumerated directly.
const SEQUENCE_LIMIT: u64 = 100_000;

/// Limits on the exhaustive computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub max_domain: usize,
    pub max_n: u64,
    /// Cap on recursion states or candidate distributions.
    pub max_states: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_domain: 5,
            max_n: 8,
            max_states: 10_000_000,
        }
    }
}

fn sorted_freqs(profile: &Profile) -> Vec<u64> {
    let mut v: Vec<u64> = profile
        .entries()
        .iter()
        .flat_map(|e| std::iter::repeat_n(e.freq, e.count as usize))
        .collect();
    v.sort_unstable();
    v
}

/// Sums the probability of every length-`n` sequence over the symbols whose
/// profile equals `profile`.
pub fn profile_prob_by_sequences(probs: &[f64], profile: &Profile) -> f64 {
    let n = profile.n() as usize;
    let d = probs.len();
    let target = sorted_freqs(profile);
    if d == 0 {
        return 0.0;
    }
    let mut seq = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut counts = vec![0u64; d];
        let mut p = 1.0;
        for &x in &seq {
            counts[x] += 1;
            p *= probs[x];
        }
        let mut nz: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
        nz.sort_unstable();
        if nz == target {
            total += p;
        }
        // Odometer increment.
        let mut pos = 0;
        loop {
            if pos == n {
                return total;
            }
            seq[pos] += 1;
            if seq[pos] < d {
                break;
            }
            seq[pos] = 0;
            pos += 1;
        }
    }
}

/// Same quantity by assigning frequencies to symbols one at a time:
/// `C_phi * sum over assignments of prod_x p_x^{f_x}`.
pub fn profile_prob_by_counts(probs: &[f64], profile: &Profile) -> f64 {
    fn go(
        x: usize,
        rem: &mut Vec<u64>,
        probs: &[f64],
        freqs: &[u64],
        memo: &mut HashMap<(usize, Vec<u64>), f64>,
    ) -> f64 {
        if rem.iter().all(|&r| r == 0) {
            return 1.0;
        }
        let left: u64 = rem.iter().sum();
        if x == probs.len() || ((probs.len() - x) as u64) < left {
            return 0.0;
        }
        let key = (x, rem.clone());
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        let mut total = go(x + 1, rem, probs, freqs, memo);
        for j in 0..freqs.len() {
            if rem[j] > 0 {
                rem[j] -= 1;
                total += probs[x].powi(freqs[j] as i32) * go(x + 1, rem, probs, freqs, memo);
                rem[j] += 1;
            }
        }
        memo.insert(key, total);
        total
    }
    let freqs = profile.freqs();
    let mut rem = profile.counts();
    let mut memo = HashMap::new();
    profile.log_c_phi().exp() * go(0, &mut rem, probs, &freqs, &mut memo)
}

/// Exact `P(p, phi)` for a distribution given by its symbol probabilities.
///
/// Sequences are enumerated when there are few enough of them, and the
/// result is cross-checked against the frequency-assignment recursion.
pub fn exact_profile_prob(probs: &[f64], profile: &Profile, budget: &OracleBudget) -> Result<f64> {
    if probs.len() > budget.max_domain {
        return Err(PmlError::BudgetExceeded(format!(
            "domain of {} symbols exceeds {}",
            probs.len(),
            budget.max_domain
        )));
    }
    if profile.n() > budget.max_n {
        return Err(PmlError::BudgetExceeded(format!(
            "sample size {} exceeds {}",
            profile.n(),
            budget.max_n
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
        return Err(PmlError::DomainError("probabilities must be nonnegative".into()));
    }
    let states: f64 = profile.counts().iter().map(|&c| (c + 1) as f64).product::<f64>()
        * (probs.len() + 1) as f64;
    if states > budget.max_states as f64 {
        return Err(PmlError::BudgetExceeded(format!(
            "{states} recursion states exceed {}",
            budget.max_states
        )));
    }
    let by_counts = profile_prob_by_counts(probs, profile);
    let seqs = (probs.len() as f64).powi(profile.n() as i32);
    if seqs <= SEQUENCE_LIMIT as f64 {
        let by_seq = profile_prob_by_sequences(probs, profile);
        if (by_seq - by_counts).abs() > 1e-9 * by_seq.max(by_counts).max(1e-300) {
            return Err(PmlError::DomainError(format!(
                "sequence enumeration gives {by_seq}, recursion gives {by_counts}"
            )));
        }
    }
    Ok(by_counts)
}

/// Natural log of [`exact_profile_prob`].
pub fn exact_log_profile_prob(probs: &[f64], profile: &Profile, budget: &OracleBudget) -> Result<f64> {
    Ok(exact_profile_prob(probs, profile, budget)?.ln())
}

/// `P(q / |q|, phi)` for a pseudo-distribution.
pub fn normalized_profile_prob(q: &PseudoDistribution, profile: &Profile, budget: &OracleBudget) -> Result<f64> {
    exact_profile_prob(&q.normalized()?.expand(), profile, budget)
}

/// Best pseudo-distribution over a grid found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPml {
    pub dist: PseudoDistribution,
    /// `P(q / |q|, phi)` of the maximizer.
    pub prob: f64,
    pub log_prob: f64,
    pub candidates: u64,
}

/// Enumerates every multiset of grid levels with at most `max_domain`
/// symbols and mass at most 1, and returns the one maximizing
/// `P(q / |q|, phi)`. Among ties the largest total mass wins, then the
/// lexicographically smallest multiset of levels listed in increasing order.
pub fn exact_discrete_pml(profile: &Profile, grid: &Grid, budget: &OracleBudget) -> Result<ExactPml> {
    if profile.n() > budget.max_n {
        return Err(PmlError::BudgetExceeded(format!(
            "sample size {} exceeds {}",
            profile.n(),
            budget.max_n
        )));
    }
    let need = profile.distinct() as usize;
    if need > budget.max_domain {
        return Err(PmlError::BudgetExceeded(format!(
            "{need} observed symbols exceed the domain budget {}",
            budget.max_domain
        )));
    }

    struct Search<'a> {
        levels: &'a [f64],
        profile: &'a Profile,
        budget: &'a OracleBudget,
        need: usize,
        chosen: Vec<usize>,
        best: Option<(f64, Vec<usize>, f64)>,
        seen: u64,
    }

    impl Search<'_> {
        fn visit(&mut self, start: usize, mass: f64) -> Result<()> {
            if self.chosen.len() >= self.need {
                self.seen += 1;
                if self.seen > self.budget.max_states {
                    return Err(PmlError::BudgetExceeded(format!(
                        "more than {} candidate distributions",
                        self.budget.max_states
                    )));
                }
                let probs: Vec<f64> = self.chosen.iter().map(|&i| self.levels[i] / mass).collect();
                let p = profile_prob_by_counts(&probs, self.profile);
                let better = match &self.best {
                    None => true,
                    Some((b, _, bm)) => p > b * (1.0 + 1e-12) || (p >= b * (1.0 - 1e-12) && mass > bm + 1e-12),
                };
                if better {
                    self.best = Some((p, self.chosen.clone(), mass));
                }
            }
            if self.chosen.len() == self.budget.max_domain {
                return Ok(());
            }
            for i in start..self.levels.len() {
                let m = mass + self.levels[i];
                if m > 1.0 + 1e-12 {
                    // Levels increase, so every later level is too heavy as well.
                    break;
                }
                self.chosen.push(i);
                self.visit(i, m)?;
                self.chosen.pop();
            }
            Ok(())
        }
    }

    let mut search = Search {
        levels: grid.levels(),
        profile,
        budget,
        need,
        chosen: Vec::new(),
        best: None,
        seen: 0,
    };
    search.visit(0, 0.0)?;
    let (prob, idx, _) = search.best.ok_or(PmlError::Infeasible {
        needed: need as f64 * grid.min(),
    })?;
    let dist = PseudoDistribution::new(idx.iter().map(|&i| Level {
        p: grid.levels()[i],
        count: 1,
    }))?;
    Ok(ExactPml {
        dist,
        prob,
        log_prob: prob.ln(),
        candidates: search.seen,
    })
}
