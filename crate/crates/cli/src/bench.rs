use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use pmlkit::estimator::estimate;
use pmlkit::properties::Property;
use pmlkit::sampling::{sample_profile, Family};
use pmlkit::{PseudoDistribution, RunConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Raised for a benchmark spec that cannot be parsed or run.
#[derive(Debug)]
pub struct BenchSpecError(pub String);

impl std::fmt::Display for BenchSpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid bench spec: {}", self.0)
    }
}

impl std::error::Error for BenchSpecError {}

/// `{"family":{"family":"zipf","k":50,"s":1.0},"sizes":[1000],"seeds":[0,1],"properties":["entropy"]}`
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub family: Family,
    pub sizes: Vec<u64>,
    pub seeds: Vec<u64>,
    pub properties: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Row {
    family: String,
    n: u64,
    seed: u64,
    property: String,
    truth: f64,
    estimate: f64,
    abs_error: f64,
    wall_ms: f64,
}

fn bad(msg: impl Into<String>) -> anyhow::Error {
    BenchSpecError(msg.into()).into()
}

pub fn cmd_bench(spec_path: &Path, cfg: &RunConfig) -> Result<String> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec: BenchSpec = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if spec.sizes.is_empty() || spec.seeds.is_empty() || spec.properties.is_empty() {
        return Err(bad("sizes, seeds and properties must be nonempty"));
    }
    if spec.sizes.contains(&0) {
        return Err(bad("sizes must be positive"));
    }
    cfg.validate().map_err(|e| bad(e.to_string()))?;
    let probs = spec.family.probs().map_err(|e| bad(e.to_string()))?;
    let truth_dist = PseudoDistribution::from_probs(&probs)?;
    for p in &spec.properties {
        Property::parse(p, 1).map_err(|e| bad(e.to_string()))?;
    }

    let runs: Vec<(u64, u64)> = spec
        .sizes
        .iter()
        .flat_map(|&n| spec.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let results: Vec<Result<Vec<Row>>> = runs
        .par_iter()
        .map(|&(n, seed)| {
            let start = Instant::now();
            let profile = sample_profile(&probs, n, seed)?;
            let run_cfg = RunConfig {
                solver: pmlkit::SolverConfig { seed, ..cfg.solver },
                ..*cfg
            };
            let est = estimate(&profile, &run_cfg)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            spec.properties
                .iter()
                .map(|name| {
                    let prop = Property::parse(name, n)?;
                    let truth = prop.evaluate(&truth_dist)?;
                    let value = prop.evaluate(&est.dist)?;
                    Ok(Row {
                        family: spec.family.label(),
                        n,
                        seed,
                        property: name.clone(),
                        truth,
                        estimate: value,
                        abs_error: (value - truth).abs(),
                        wall_ms,
                    })
                })
                .collect()
        })
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    for rows in results {
        for row in rows? {
            w.serialize(row)?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
