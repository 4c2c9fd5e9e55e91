use std::path::Path;

use anyhow::{Context, Result};
use pmlkit::allocation::AllocationJson;
use pmlkit::estimator::estimate;
use pmlkit::oracle::{exact_discrete_pml, exact_log_profile_prob, OracleBudget};
use pmlkit::properties::{Property, PropertyValue};
use pmlkit::solver::solve_frac;
use pmlkit::{build_grid, scale_grid, DistributionReport, Grid, Profile, RunConfig};
use serde::Serialize;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Profile JSON if the file parses as one, otherwise whitespace-separated samples.
pub fn load_profile(path: &Path) -> Result<Profile> {
    let text = read(path)?;
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return Profile::from_json(trimmed).with_context(|| format!("parsing profile {}", path.display()));
    }
    Ok(Profile::from_samples(text.split_whitespace())?)
}

pub fn cmd_profile(input: &Path) -> Result<String> {
    let text = read(input)?;
    let profile = Profile::from_samples(text.split_whitespace())?;
    Ok(profile.to_json() + "\n")
}

#[derive(Serialize)]
struct SolveOutput {
    scale: f64,
    log_g: f64,
    gap: f64,
    iterations: usize,
    allocation: AllocationJson,
}

pub fn cmd_solve(input: &Path, scale: f64, cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let profile = load_profile(input)?;
    let grid = scale_grid(&build_grid(profile.n(), cfg.alpha)?, scale)?;
    let sol = solve_frac(&profile, &grid, &cfg.solver)?;
    json(&SolveOutput {
        scale,
        log_g: sol.log_g,
        gap: sol.gap,
        iterations: sol.iterations,
        allocation: AllocationJson::new(&sol.x, &sol.levels, &sol.freqs),
    })
}

#[derive(Serialize)]
struct OracleCheck {
    exact_log_prob: f64,
    estimate_log_prob: f64,
    gap: f64,
}

#[derive(Serialize)]
struct EstimateOutput {
    distribution: DistributionReport,
    properties: Vec<PropertyValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_check: Option<OracleCheck>,
}

pub fn cmd_estimate(input: &Path, cfg: &RunConfig, properties: &[String], oracle_check: bool) -> Result<String> {
    cfg.validate()?;
    let profile = load_profile(input)?;
    let props = properties
        .iter()
        .map(|s| Property::parse(s, profile.n()))
        .collect::<pmlkit::Result<Vec<_>>>()?;
    let est = estimate(&profile, cfg)?;
    let values = props
        .iter()
        .map(|p| p.report(&est.dist))
        .collect::<pmlkit::Result<Vec<_>>>()?;
    let check = if oracle_check {
        let budget = OracleBudget::default();
        let grid = build_grid(profile.n(), cfg.alpha)?;
        let exact = exact_discrete_pml(&profile, &grid, &budget)?;
        let q = est.dist.normalized()?.expand();
        // The estimate is only evaluated, not enumerated, so its support may
        // exceed the enumeration budget.
        let eval = OracleBudget {
            max_domain: budget.max_domain.max(q.len()),
            ..budget
        };
        let estimate_log_prob = exact_log_profile_prob(&q, &profile, &eval)?;
        Some(OracleCheck {
            exact_log_prob: exact.log_prob,
            estimate_log_prob,
            gap: exact.log_prob - estimate_log_prob,
        })
    } else {
        None
    };
    json(&EstimateOutput {
        distribution: est.dist.report(Some(est.scale), Some(est.log_objective)),
        properties: values,
        oracle_check: check,
    })
}

#[derive(Serialize)]
struct OracleOutput {
    distribution: DistributionReport,
    log_prob: f64,
    candidates: u64,
}

#[derive(Serialize)]
struct ProbOutput {
    log_prob: f64,
}

pub fn cmd_oracle(
    input: &Path,
    grid: Option<&Path>,
    probs: Option<&[f64]>,
    alpha: f64,
    budget: &OracleBudget,
) -> Result<String> {
    let profile = load_profile(input)?;
    if let Some(p) = probs {
        return json(&ProbOutput {
            log_prob: exact_log_profile_prob(p, &profile, budget)?,
        });
    }
    let grid = match grid {
        Some(path) => serde_json::from_str::<Grid>(&read(path)?)
            .with_context(|| format!("parsing grid {}", path.display()))?,
        None => build_grid(profile.n(), alpha)?,
    };
    let best = exact_discrete_pml(&profile, &grid, budget)?;
    json(&OracleOutput {
        distribution: best.dist.report(None, None),
        log_prob: best.log_prob,
        candidates: best.candidates,
    })
}
