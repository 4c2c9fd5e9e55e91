//! The end-to-end estimator: solve, sparsify, round, create, discretize.

use ndarray::Array2;
use rayon::prelude::*;

use crate::allocation::{column_freqs, log_g};
use crate::config::{RunConfig, SolverConfig};
use crate::distribution::{Level, PseudoDistribution};
use crate::error::{PmlError, Result};
use crate::grid::{build_grid, scale_grid, Grid};
use crate::profile::Profile;
use crate::rounding::{create, swap_matrix_round, CHECK_TOL};
use crate::solver::{solve_frac_warm, sparsify};

/// Scales evaluated one after another, each warm-starting the next.
const CHAIN: usize = 16;

/// Output of one run of the pipeline on a fixed grid.
#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub dist: PseudoDistribution,
    /// Integral allocation after rounding and level creation.
    pub x_final: Array2<f64>,
    pub levels: Vec<f64>,
    /// `[0, m_1, ..., m_k]`.
    pub freqs: Vec<u64>,
    /// `log C_phi + log g(x_final)`.
    pub log_objective: f64,
    /// `log C_phi + log g` of the fractional optimum found by the solver.
    pub frac_log_objective: f64,
    /// Certified gap of the fractional solve.
    pub gap: f64,
    /// Total amount moved by the rounding swaps.
    pub trace_total: f64,
    pub multipliers: Vec<f64>,
}

/// Distribution with one level per nonzero row; row sums must be integers.
pub fn distribution_from_matrix(x: &Array2<f64>, levels: &[f64]) -> Result<PseudoDistribution> {
    if x.nrows() != levels.len() {
        return Err(PmlError::ShapeError(format!(
            "{} rows but {} levels",
            x.nrows(),
            levels.len()
        )));
    }
    let mut out = Vec::new();
    for (i, row) in x.rows().into_iter().enumerate() {
        let s = row.sum();
        if (s - s.round()).abs() > CHECK_TOL {
            return Err(PmlError::NotIntegral { row: i, sum: s });
        }
        let count = s.round();
        if count >= 1.0 {
            out.push(Level {
                p: levels[i],
                count: count as u64,
            });
        }
    }
    PseudoDistribution::new(out)
}

/// Rescales observed columns to their exact counts and trims the unseen
/// column to an integral total, as the rounding step requires.
fn integral_columns(x: &mut Array2<f64>, phi: &[u64]) {
    for (j, &target) in phi.iter().enumerate() {
        let mut col = x.column_mut(j + 1);
        let s = col.sum();
        if s > 0.0 {
            col.mapv_inplace(|v| v * target as f64 / s);
        }
    }
    let mut col0 = x.column_mut(0);
    let s = col0.sum();
    if s > 0.0 {
        let r = s.round();
        let target = if (s - r).abs() <= 1e-9 { r } else { s.floor() };
        col0.mapv_inplace(|v| v * target / s);
    }
}

/// Runs the pipeline on a fixed grid.
pub fn approximate_pml(profile: &Profile, grid: &Grid, cfg: &SolverConfig) -> Result<PipelineResult> {
    approximate_pml_warm(profile, grid, cfg, None)
}

/// [`approximate_pml`] with optional warm-start multipliers for the solver.
pub fn approximate_pml_warm(
    profile: &Profile,
    grid: &Grid,
    cfg: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<PipelineResult> {
    let sol = solve_frac_warm(profile, grid, cfg, warm)?;
    let freqs = column_freqs(profile);
    let (mut xs, lv) = sparsify(&sol.x, &sol.levels, &freqs)?;
    integral_columns(&mut xs, &profile.counts());
    let rounded = swap_matrix_round(&xs)?;
    let (x_final, levels) = create(&rounded.a_prime, &rounded.b, &lv)?;
    let log_c = profile.log_c_phi();
    let log_objective = log_c + log_g(&x_final, &levels, &freqs)?;
    let dist = distribution_from_matrix(&x_final, &levels)?;
    Ok(PipelineResult {
        dist,
        x_final,
        levels,
        freqs,
        log_objective,
        frac_log_objective: log_c + sol.log_g,
        gap: sol.gap,
        trace_total: rounded.trace_total(),
        multipliers: sol.multipliers,
    })
}

/// Per-row probabilities `sum_j m_j X_ij / (n s_i)` matching each row's
/// observed frequencies. Rows holding only unseen symbols get 0.
pub fn rebalance(x: &Array2<f64>, freqs: &[u64], n: u64) -> Result<Vec<f64>> {
    if x.ncols() != freqs.len() {
        return Err(PmlError::ShapeError(format!(
            "{} columns but {} frequencies",
            x.ncols(),
            freqs.len()
        )));
    }
    x.rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let s = row.sum();
            if !(s > 0.0) {
                return Err(PmlError::DomainError(format!("row {i} is empty")));
            }
            let seen: f64 = row.iter().zip(freqs).map(|(v, &m)| v * m as f64).sum();
            Ok(seen / (n as f64 * s))
        })
        .collect()
}

/// Maps an integral allocation onto the grid: each row gets its rebalanced
/// probability (unseen-only rows keep their level), the result is scaled to
/// unit mass, clamped into the grid's range and floored onto it.
pub fn discretize(x: &Array2<f64>, levels: &[f64], freqs: &[u64], n: u64, grid: &Grid) -> Result<PseudoDistribution> {
    let (rows, levels): (Vec<usize>, Vec<f64>) = x
        .rows()
        .into_iter()
        .zip(levels)
        .enumerate()
        .filter(|(_, (row, _))| row.sum() > 0.5)
        .map(|(i, (_, &l))| (i, l))
        .unzip();
    let x = x.select(ndarray::Axis(0), &rows);
    let mut probs = rebalance(&x, freqs, n)?;
    for (p, &l) in probs.iter_mut().zip(&levels) {
        if *p == 0.0 {
            *p = l;
        }
    }
    let counts: Vec<f64> = x.rows().into_iter().map(|r| r.sum().round()).collect();
    let total: f64 = probs.iter().zip(&counts).map(|(p, c)| p * c).sum();
    if !(total > 0.0) {
        return Err(PmlError::DomainError("allocation has no mass".into()));
    }
    let mut out = Vec::with_capacity(probs.len());
    for (p, c) in probs.into_iter().zip(counts) {
        let q = (p / total).clamp(grid.min(), 1.0);
        out.push(Level {
            p: grid.floor(q)?,
            count: c as u64,
        });
    }
    PseudoDistribution::new(out)
}

/// Scales `(1 + beta)^i` for `i < a` followed by `1 / r_min`, where
/// `beta = min(k, |R|) / n` and `a` is the first exponent reaching `1 / r_min`.
/// At most `max_scales` values are returned, smallest first.
pub fn candidate_scales(grid: &Grid, k: usize, n: u64, max_scales: usize) -> Vec<f64> {
    let beta = k.min(grid.len()) as f64 / n as f64;
    let top = 1.0 / grid.min();
    let a = (top.ln() / beta.ln_1p()).ceil().max(0.0) as usize;
    let mut out: Vec<f64> = (0..a.min(max_scales)).map(|i| (1.0 + beta).powi(i as i32)).collect();
    if out.len() < max_scales {
        out.push(top);
    }
    out
}

/// One evaluated scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleScore {
    pub scale: f64,
    pub log_objective: f64,
}

/// Output of [`estimate`].
#[derive(Debug, Clone)]
pub struct Estimate {
    /// Winning distribution discretized onto the base grid.
    pub dist: PseudoDistribution,
    pub scale: f64,
    pub log_objective: f64,
    /// Every feasible scale with its objective, in increasing scale order.
    pub scores: Vec<ScaleScore>,
    /// Pipeline output at the winning scale.
    pub winner: PipelineResult,
}

fn run_chain(profile: &Profile, grid: &Grid, scales: &[f64], cfg: &SolverConfig) -> Result<Vec<(f64, PipelineResult)>> {
    let phi_total: f64 = profile.distinct() as f64;
    let mut out = Vec::new();
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &c in scales {
        if c * grid.min() * phi_total > 1.0 {
            continue;
        }
        let g = match scale_grid(grid, c) {
            Ok(g) => g,
            Err(PmlError::EmptyGrid) => continue,
            Err(e) => return Err(e),
        };
        // Costs shift by m_j ln(c / c_prev); shifting the multipliers alike
        // keeps the within-row weights unchanged.
        let shifted = warm.as_ref().map(|(prev, mu)| {
            let d = (c / prev).ln();
            mu.iter()
                .zip(profile.freqs())
                .map(|(m, f)| m + f as f64 * d)
                .collect::<Vec<f64>>()
        });
        let res = match approximate_pml_warm(profile, &g, cfg, shifted.as_deref()) {
            Ok(r) => r,
            Err(PmlError::Infeasible { .. }) => continue,
            Err(e) => return Err(e),
        };
        if !res.multipliers.is_empty() {
            warm = Some((c, res.multipliers.clone()));
        }
        out.push((c, res));
    }
    Ok(out)
}

/// Estimates the profile maximum likelihood distribution.
pub fn estimate(profile: &Profile, cfg: &RunConfig) -> Result<Estimate> {
    cfg.validate()?;
    let n = profile.n();
    let grid = build_grid(n, cfg.alpha)?;
    let scales = candidate_scales(&grid, profile.k(), n, cfg.max_scales.max(1));
    let chunks: Vec<&[f64]> = scales.chunks(CHAIN).collect();
    let runs: Vec<Result<Vec<(f64, PipelineResult)>>> = chunks
        .par_iter()
        .map(|chunk| run_chain(profile, &grid, chunk, &cfg.solver))
        .collect();
    let mut scored: Vec<(f64, PipelineResult)> = Vec::new();
    for r in runs {
        scored.extend(r?);
    }
    let scores: Vec<ScaleScore> = scored
        .iter()
        .map(|(c, r)| ScaleScore {
            scale: *c,
            log_objective: r.log_objective,
        })
        .collect();
    let best = scored
        .iter()
        .enumerate()
        .fold(None::<usize>, |acc, (i, (_, r))| match acc {
            Some(b) if scored[b].1.log_objective >= r.log_objective => Some(b),
            _ => Some(i),
        })
        .ok_or(PmlError::Infeasible {
            needed: profile.distinct() as f64 * grid.min(),
        })?;
    let (scale, mut winner) = scored.swap_remove(best);
    if cfg.resolve_levels {
        let support: Vec<f64> = winner.dist.levels().iter().map(|l| l.p).collect();
        let g = Grid::from_levels(support)?;
        winner = approximate_pml(profile, &g, &cfg.solver)?;
    }
    let dist = discretize(&winner.x_final, &winner.levels, &winner.freqs, n, &grid)?;
    Ok(Estimate {
        dist,
        scale,
        log_objective: winner.log_objective,
        scores,
        winner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_to_distribution() {
        let x = ndarray::array![[1.0, 1.0], [0.0, 0.0], [0.5, 0.5]];
        let d = distribution_from_matrix(&x, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(d.levels(), &[Level { p: 0.1, count: 2 }, Level { p: 0.3, count: 1 }]);
        let bad = ndarray::array![[0.5, 0.0]];
        assert!(matches!(
            distribution_from_matrix(&bad, &[0.1]),
            Err(PmlError::NotIntegral { .. })
        ));
    }

    #[test]
    fn rebalance_uses_observed_frequencies() {
        // Row 0: one symbol seen twice, one unseen. Row 1: unseen only.
        let x = ndarray::array![[1.0, 1.0], [3.0, 0.0]];
        let r = rebalance(&x, &[0, 2], 2).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-15);
        assert_eq!(r[1], 0.0);
        assert!(rebalance(&ndarray::array![[0.0, 0.0]], &[0, 1], 1).is_err());
    }

    #[test]
    fn scale_list_spans_to_inverse_min_level() {
        let g = build_grid(4, 1.0).unwrap();
        let s = candidate_scales(&g, 2, 4, 1000);
        assert_eq!(s[0], 1.0);
        assert_eq!(*s.last().unwrap(), 32.0);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(candidate_scales(&g, 2, 4, 3).len(), 3);
    }

    #[test]
    fn small_profile_end_to_end() {
        let p = Profile::from_pairs(&[(1, 2), (2, 1)]).unwrap();
        let est = estimate(&p, &RunConfig::default()).unwrap();
        assert!(est.dist.total_mass() <= 1.0 + 1e-9);
        assert!(est.dist.support() >= 3);
        let best = est.scores.iter().map(|s| s.log_objective).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(est.log_objective, best);
    }
}
