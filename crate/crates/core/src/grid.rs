//! Geometric probability grids and rounding onto them.

use serde::{Deserialize, Serialize};

use crate::distribution::{Level, PseudoDistribution};
use crate::error::{PmlError, Result};

const SNAP: f64 = 1e-12;

/// Strictly increasing probability levels in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid {
    levels: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    levels: Vec<f64>,
}

impl TryFrom<RawGrid> for Grid {
    type Error = PmlError;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::from_levels(raw.levels)
    }
}

impl Grid {
    pub fn from_levels(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(PmlError::EmptyGrid);
        }
        if levels.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(PmlError::InvalidParameter(
                "grid levels must lie in (0, 1]".into(),
            ));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PmlError::InvalidParameter(
                "grid levels must be strictly increasing".into(),
            ));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.levels[0]
    }

    pub fn max(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    /// Largest level not exceeding `x`.
    pub fn floor(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(PmlError::DomainError(format!("cannot round {x} onto a grid")));
        }
        let probe = x * (1.0 + SNAP);
        let idx = self.levels.partition_point(|&r| r <= probe);
        if idx == 0 {
            return Err(PmlError::BelowGrid {
                value: x,
                min: self.min(),
            });
        }
        Ok(self.levels[idx - 1])
    }
}

/// Levels `1/(2n^2) * (1 + n^-alpha)^i` up to 1, followed by 1 itself.
pub fn build_grid(n: u64, alpha: f64) -> Result<Grid> {
    if n < 2 {
        return Err(PmlError::InvalidSampleSize(n));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(PmlError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let nf = n as f64;
    let ratio = 1.0 + nf.powf(-alpha);
    let mut levels = Vec::new();
    let mut r = 1.0 / (2.0 * nf * nf);
    while r <= 1.0 {
        levels.push(r);
        r *= ratio;
    }
    if levels.last() != Some(&1.0) {
        levels.push(1.0);
    }
    Grid::from_levels(levels)
}

/// Multiplies every level by `c >= 1` and drops levels above 1.
pub fn scale_grid(grid: &Grid, c: f64) -> Result<Grid> {
    if !(c.is_finite() && c >= 1.0) {
        return Err(PmlError::InvalidParameter(format!(
            "scale must be at least 1, got {c}"
        )));
    }
    let mut levels: Vec<f64> = Vec::with_capacity(grid.len());
    for &r in grid.levels() {
        let v = c * r;
        if (v - 1.0).abs() <= SNAP {
            levels.push(1.0);
        } else if v < 1.0 {
            levels.push(v);
        }
    }
    levels.dedup();
    if levels.is_empty() {
        return Err(PmlError::EmptyGrid);
    }
    Grid::from_levels(levels)
}

/// Floors every symbol probability onto the grid, merging coincident levels.
pub fn round_distribution(dist: &PseudoDistribution, grid: &Grid) -> Result<PseudoDistribution> {
    let mut out = Vec::with_capacity(dist.levels().len());
    for l in dist.levels() {
        out.push(Level {
            p: grid.floor(l.p)?,
            count: l.count,
        });
    }
    PseudoDistribution::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_matches_hand_computation() {
        let g = build_grid(2, 1.0).unwrap();
        assert_eq!(
            g.levels(),
            &[0.125, 0.1875, 0.28125, 0.421875, 0.6328125, 0.94921875, 1.0]
        );
        assert_eq!(build_grid(1, 0.5), Err(PmlError::InvalidSampleSize(1)));
        assert!(build_grid(5, 0.0).is_err());
    }

    #[test]
    fn scaling() {
        let g = build_grid(2, 1.0).unwrap();
        assert_eq!(scale_grid(&g, 8.0).unwrap().levels(), &[1.0]);
        assert_eq!(scale_grid(&g, 9.0), Err(PmlError::EmptyGrid));
        assert_eq!(scale_grid(&g, 1.0).unwrap(), g);
        assert!(scale_grid(&g, 0.5).is_err());
    }

    #[test]
    fn floor_and_round() {
        let g = build_grid(2, 1.0).unwrap();
        assert_eq!(g.floor(0.2).unwrap(), 0.1875);
        assert_eq!(g.floor(0.1875).unwrap(), 0.1875);
        assert_eq!(g.floor(0.99).unwrap(), 0.94921875);
        assert!(matches!(g.floor(0.1), Err(PmlError::BelowGrid { .. })));
        let d = PseudoDistribution::from_probs(&[0.2, 0.19, 0.3]).unwrap();
        let r = round_distribution(&d, &g).unwrap();
        assert_eq!(
            r.levels(),
            &[Level { p: 0.1875, count: 2 }, Level { p: 0.28125, count: 1 }]
        );
    }

    #[test]
    fn grid_json() {
        let g = Grid::from_levels(vec![0.25, 1.0]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"levels":[0.25,1.0]}"#);
        assert_eq!(serde_json::from_str::<Grid>(&s).unwrap(), g);
        assert!(serde_json::from_str::<Grid>(r#"{"levels":[0.5,0.25]}"#).is_err());
    }
}
