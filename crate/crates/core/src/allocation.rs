//! Allocation matrices and the log-objective `log g`.
//!
//! Rows are indexed by probability levels, columns by frequencies. Column 0
//! holds the unseen symbols (frequency 0); column `j >= 1` holds the symbols
//! seen `m_j` times.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{PmlError, Result};
use crate::profile::Profile;

/// Entries smaller than this are treated as exact zeros.
const ZERO: f64 = 1e-300;
/// Negative entries down to this magnitude are rounding noise.
const NEG_TOL: f64 = 1e-12;
/// Clamp used inside the logarithm of the gradient.
pub const GRAD_CLAMP: f64 = 1e-12;

/// `x ln x` with `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x < ZERO {
        0.0
    } else {
        x * x.ln()
    }
}

/// `(sum v) ln(sum v) - sum v ln v`, the log multinomial mass of one row.
pub fn row_entropy_term(v: &[f64]) -> f64 {
    let s: f64 = v.iter().sum();
    xlogx(s) - v.iter().map(|&x| xlogx(x)).sum::<f64>()
}

/// `C[i][j] = m_j ln r_i`, with `m_0 = 0`.
pub fn cost_matrix(levels: &[f64], freqs: &[u64]) -> Array2<f64> {
    Array2::from_shape_fn((levels.len(), freqs.len()), |(i, j)| {
        if freqs[j] == 0 {
            0.0
        } else {
            freqs[j] as f64 * levels[i].ln()
        }
    })
}

/// Frequencies with the unseen column prepended: `[0, m_1, ..., m_k]`.
pub fn column_freqs(profile: &Profile) -> Vec<u64> {
    std::iter::once(0).chain(profile.freqs()).collect()
}

fn check_shape(x: &Array2<f64>, rows: usize, cols: usize) -> Result<()> {
    if x.nrows() != rows || x.ncols() != cols {
        return Err(PmlError::ShapeError(format!(
            "expected a {rows}x{cols} matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

fn check_entries(x: &Array2<f64>) -> Result<()> {
    for &v in x.iter() {
        if !v.is_finite() || v < -NEG_TOL {
            return Err(PmlError::DomainError(format!(
                "allocation entries must be finite and nonnegative, got {v}"
            )));
        }
    }
    Ok(())
}

/// `log g(X)` for a precomputed cost matrix.
pub fn log_g_with_cost(x: &Array2<f64>, cost: &Array2<f64>) -> Result<f64> {
    check_shape(x, cost.nrows(), cost.ncols())?;
    let xs: Vec<f64> = x.iter().copied().collect();
    let cs: Vec<f64> = cost.iter().copied().collect();
    log_g_slice(&xs, &cs, x.ncols())
}

/// `log g` on row-major slices with `cols` entries per row.
pub fn log_g_slice(x: &[f64], cost: &[f64], cols: usize) -> Result<f64> {
    if x.len() != cost.len() || cols == 0 || x.len() % cols != 0 {
        return Err(PmlError::ShapeError(format!(
            "{} entries do not match {} costs with {cols} columns",
            x.len(),
            cost.len()
        )));
    }
    let mut total = 0.0;
    for (row, crow) in x.chunks(cols).zip(cost.chunks(cols)) {
        let mut s = 0.0;
        for (&v, &c) in row.iter().zip(crow) {
            if !v.is_finite() || v < -NEG_TOL {
                return Err(PmlError::DomainError(format!(
                    "allocation entries must be finite and nonnegative, got {v}"
                )));
            }
            if v >= ZERO {
                total += c * v - v * v.ln();
                s += v;
            }
        }
        total += xlogx(s);
    }
    Ok(total)
}

/// `log g(X) = sum_ij [C_ij X_ij - X_ij ln X_ij] + sum_i s_i ln s_i`.
pub fn log_g(x: &Array2<f64>, levels: &[f64], freqs: &[u64]) -> Result<f64> {
    check_shape(x, levels.len(), freqs.len())?;
    log_g_with_cost(x, &cost_matrix(levels, freqs))
}

/// Gradient `C_ij + ln(s_i / X_ij)` with entries clamped away from zero.
pub fn gradient(x: &Array2<f64>, cost: &Array2<f64>) -> Result<Array2<f64>> {
    check_shape(x, cost.nrows(), cost.ncols())?;
    check_entries(x)?;
    let mut g = cost.clone();
    for (i, row) in x.rows().into_iter().enumerate() {
        let s = row.sum().max(GRAD_CLAMP);
        let ls = s.ln();
        for (j, &v) in row.iter().enumerate() {
            g[[i, j]] += ls - v.max(GRAD_CLAMP).ln();
        }
    }
    Ok(g)
}

/// Probability mass `sum_i r_i * (row sum i)`.
pub fn mass(x: &Array2<f64>, levels: &[f64]) -> f64 {
    x.rows()
        .into_iter()
        .zip(levels)
        .map(|(row, &r)| r * row.sum())
        .sum()
}

/// Column sums match the profile, mass is at most 1, entries are nonnegative.
pub fn is_frac_feasible(x: &Array2<f64>, levels: &[f64], profile: &Profile, tol: f64) -> Result<bool> {
    check_shape(x, levels.len(), profile.k() + 1)?;
    if x.iter().any(|&v| v < -tol || !v.is_finite()) {
        return Ok(false);
    }
    for (j, phi) in profile.counts().into_iter().enumerate() {
        if (x.column(j + 1).sum() - phi as f64).abs() > tol {
            return Ok(false);
        }
    }
    Ok(mass(x, levels) <= 1.0 + tol)
}

/// Fractional feasibility plus integral row sums.
pub fn is_integral_feasible(x: &Array2<f64>, levels: &[f64], profile: &Profile, tol: f64) -> Result<bool> {
    if !is_frac_feasible(x, levels, profile, tol)? {
        return Ok(false);
    }
    Ok(x.rows().into_iter().all(|r| {
        let s = r.sum();
        (s - s.round()).abs() <= tol
    }))
}

/// Serialized allocation: `{"levels":[...],"freqs":[0,...],"rows":[[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationJson {
    pub levels: Vec<f64>,
    pub freqs: Vec<u64>,
    pub rows: Vec<Vec<f64>>,
}

impl AllocationJson {
    pub fn new(x: &Array2<f64>, levels: &[f64], freqs: &[u64]) -> Self {
        Self {
            levels: levels.to_vec(),
            freqs: freqs.to_vec(),
            rows: x.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn matrix(&self) -> Result<Array2<f64>> {
        let cols = self.freqs.len();
        if self.rows.len() != self.levels.len() || self.rows.iter().any(|r| r.len() != cols) {
            return Err(PmlError::ShapeError(
                "rows must have one entry per frequency and one row per level".into(),
            ));
        }
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        Array2::from_shape_vec((self.levels.len(), cols), flat)
            .map_err(|e| PmlError::ShapeError(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_row_single_symbol() {
        // One symbol at probability 1/2 seen twice: g = (1/2)^2.
        let x = array![[0.0, 1.0]];
        let v = log_g(&x, &[0.5], &[0, 2]).unwrap();
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_term_of_split_row() {
        // The relaxation of ln(2!/(1!1!)) is 2 ln 2.
        assert!((row_entropy_term(&[1.0, 1.0]) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(row_entropy_term(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn shape_and_domain_errors() {
        let x = array![[1.0, -0.5]];
        assert!(matches!(log_g(&x, &[0.5], &[0, 1]), Err(PmlError::DomainError(_))));
        assert!(matches!(log_g(&x, &[0.5, 0.2], &[0, 1]), Err(PmlError::ShapeError(_))));
    }

    #[test]
    fn json_round_trip() {
        let x = array![[0.5, 1.0], [0.0, 2.0]];
        let j = AllocationJson::new(&x, &[0.1, 0.2], &[0, 3]);
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(s, r#"{"levels":[0.1,0.2],"freqs":[0,3],"rows":[[0.5,1.0],[0.0,2.0]]}"#);
        let back: AllocationJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.matrix().unwrap(), x);
    }
}
