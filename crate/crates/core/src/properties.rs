//! Symmetric properties evaluated on (pseudo-)distributions.

use serde::{Deserialize, Serialize};

use crate::distribution::PseudoDistribution;
use crate::error::{PmlError, Result};

/// Shannon entropy in nats of the normalized distribution.
pub fn entropy(d: &PseudoDistribution) -> Result<f64> {
    let q = d.normalized()?;
    Ok(q
        .levels()
        .iter()
        .map(|l| -(l.count as f64) * l.p * l.p.ln())
        .sum())
}

/// Number of symbols with probability at least `threshold`.
pub fn support_size(d: &PseudoDistribution, threshold: f64) -> u64 {
    d.levels()
        .iter()
        .filter(|l| l.p >= threshold)
        .map(|l| l.count)
        .sum()
}

/// Expected number of distinct symbols in `m` further draws.
pub fn support_coverage(d: &PseudoDistribution, m: u64) -> f64 {
    d.levels()
        .iter()
        .map(|l| l.count as f64 * -(m as f64 * (-l.p).ln_1p()).exp_m1())
        .sum()
}

/// Runs of equal values, largest value first.
fn runs_desc(d: &PseudoDistribution) -> Vec<(f64, u64)> {
    d.levels().iter().rev().map(|l| (l.p, l.count)).collect()
}

/// L1 distance between the sorted probability vectors, the shorter one
/// padded with zeros.
pub fn sorted_l1(a: &PseudoDistribution, b: &PseudoDistribution) -> f64 {
    let (ra, rb) = (runs_desc(a), runs_desc(b));
    let (mut i, mut j) = (0, 0);
    let (mut left_a, mut left_b) = (ra.first().map_or(0, |r| r.1), rb.first().map_or(0, |r| r.1));
    let mut total = 0.0;
    while i < ra.len() || j < rb.len() {
        let pa = ra.get(i).map_or(0.0, |r| r.0);
        let pb = rb.get(j).map_or(0.0, |r| r.0);
        let take = match (i < ra.len(), j < rb.len()) {
            (true, true) => left_a.min(left_b),
            (true, false) => left_a,
            (false, true) => left_b,
            (false, false) => unreachable!(),
        };
        total += take as f64 * (pa - pb).abs();
        if i < ra.len() {
            left_a -= take;
            if left_a == 0 {
                i += 1;
                left_a = ra.get(i).map_or(0, |r| r.1);
            }
        }
        if j < rb.len() {
            left_b -= take;
            if left_b == 0 {
                j += 1;
                left_b = rb.get(j).map_or(0, |r| r.1);
            }
        }
    }
    total
}

/// L1 distance to the uniform distribution on `k` symbols, matching the
/// largest probabilities to the uniform ones.
pub fn distance_to_uniformity(d: &PseudoDistribution, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(PmlError::InvalidParameter("uniform support must be positive".into()));
    }
    let u = PseudoDistribution::new([crate::distribution::Level {
        p: 1.0 / k as f64,
        count: k,
    }])?;
    Ok(sorted_l1(d, &u))
}

/// A property request, as named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum Property {
    Entropy,
    SupportSize { threshold: f64 },
    SupportCoverage { m: u64 },
    DistanceToUniformity { k: u64 },
}

impl Property {
    /// Parses `name` or `name:param`, e.g. `support_coverage:5000`.
    /// `default_m` is the coverage horizon used when none is given.
    pub fn parse(spec: &str, default_m: u64) -> Result<Self> {
        let (name, param) = match spec.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (spec, None),
        };
        let bad = |what: &str| PmlError::InvalidParameter(format!("{what} in property {spec:?}"));
        match name {
            "entropy" => Ok(Self::Entropy),
            "support_size" => Ok(Self::SupportSize {
                threshold: param
                    .map(|p| p.parse().map_err(|_| bad("bad threshold")))
                    .transpose()?
                    .unwrap_or(0.0),
            }),
            "support_coverage" => Ok(Self::SupportCoverage {
                m: param
                    .map(|p| p.parse().map_err(|_| bad("bad horizon")))
                    .transpose()?
                    .unwrap_or(default_m),
            }),
            "distance_to_uniformity" => Ok(Self::DistanceToUniformity {
                k: param
                    .ok_or_else(|| bad("missing support size"))?
                    .parse()
                    .map_err(|_| bad("bad support size"))?,
            }),
            _ => Err(bad("unknown name")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Entropy => "entropy",
            Self::SupportSize { .. } => "support_size",
            Self::SupportCoverage { .. } => "support_coverage",
            Self::DistanceToUniformity { .. } => "distance_to_uniformity",
        }
    }

    /// Plug-in value on the normalized distribution.
    pub fn evaluate(&self, d: &PseudoDistribution) -> Result<f64> {
        let q = d.normalized()?;
        Ok(match *self {
            Self::Entropy => entropy(&q)?,
            Self::SupportSize { threshold } => support_size(&q, threshold) as f64,
            Self::SupportCoverage { m } => support_coverage(&q, m),
            Self::DistanceToUniformity { k } => distance_to_uniformity(&q, k)?,
        })
    }

    pub fn report(&self, d: &PseudoDistribution) -> Result<PropertyValue> {
        let params = match *self {
            Self::Entropy => serde_json::json!({}),
            Self::SupportSize { threshold } => serde_json::json!({ "threshold": threshold }),
            Self::SupportCoverage { m } => serde_json::json!({ "m": m }),
            Self::DistanceToUniformity { k } => serde_json::json!({ "k": k }),
        };
        Ok(PropertyValue {
            property: self.name().to_string(),
            value: self.evaluate(d)?,
            params,
        })
    }
}

/// Serialized property value: `{"property":..,"value":..,"params":{..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyValue {
    pub property: String,
    pub value: f64,
    pub params: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::Level;

    fn dist(levels: &[(f64, u64)]) -> PseudoDistribution {
        PseudoDistribution::new(levels.iter().map(|&(p, count)| Level { p, count })).unwrap()
    }

    #[test]
    fn entropy_of_uniform() {
        let d = dist(&[(0.25, 4)]);
        assert!((entropy(&d).unwrap() - 4f64.ln()).abs() < 1e-12);
        // Pseudo-distributions are normalized first.
        let half = dist(&[(0.125, 4)]);
        assert!((entropy(&half).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!(entropy(&PseudoDistribution::default()).is_err());
    }

    #[test]
    fn support_and_coverage() {
        let d = dist(&[(0.1, 5), (0.5, 1)]);
        assert_eq!(support_size(&d, 0.0), 6);
        assert_eq!(support_size(&d, 0.2), 1);
        // One more draw covers exactly one symbol in expectation.
        let u = dist(&[(0.5, 2)]);
        assert!((support_coverage(&u, 1) - 1.0).abs() < 1e-12);
        assert!((support_coverage(&u, 2) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn uniformity_distance() {
        let point = dist(&[(1.0, 1)]);
        assert!((distance_to_uniformity(&point, 2).unwrap() - 1.0).abs() < 1e-12);
        let wide = dist(&[(0.5, 2)]);
        assert!((distance_to_uniformity(&wide, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(distance_to_uniformity(&wide, 2).unwrap().abs() < 1e-12);
        // Extra symbols beyond k count in full.
        let many = dist(&[(0.25, 4)]);
        assert!((distance_to_uniformity(&many, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn property_parsing() {
        assert_eq!(Property::parse("entropy", 10).unwrap(), Property::Entropy);
        assert_eq!(
            Property::parse("support_coverage", 10).unwrap(),
            Property::SupportCoverage { m: 10 }
        );
        assert_eq!(
            Property::parse("distance_to_uniformity:7", 10).unwrap(),
            Property::DistanceToUniformity { k: 7 }
        );
        assert!(Property::parse("distance_to_uniformity", 10).is_err());
        assert!(Property::parse("mode", 10).is_err());
        let v = Property::Entropy.report(&dist(&[(0.5, 2)])).unwrap();
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            format!(r#"{{"property":"entropy","value":{},"params":{{}}}}"#, 2f64.ln())
        );
    }
}
