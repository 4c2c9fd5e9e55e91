//! Folding the rounding residual into new probability levels.

use ndarray::Array2;

use crate::error::{PmlError, Result};

use super::{near_integral, CHECK_TOL};

/// Builds an integral allocation from `B` plus one new row per column of the
/// residual `D = A - B`. The new row for column `j` sits at the
/// `D`-weighted mean level of that column and holds the column's residual
/// count, so column sums and total mass are preserved. Rows with equal
/// levels are merged. Returns the allocation and its levels, ascending.
pub fn create(a: &Array2<f64>, b: &Array2<f64>, levels: &[f64]) -> Result<(Array2<f64>, Vec<f64>)> {
    let (rows, cols) = a.dim();
    if b.dim() != a.dim() || levels.len() != rows {
        return Err(PmlError::ShapeError(format!(
            "A is {rows}x{cols}, B is {:?}, {} levels",
            b.dim(),
            levels.len()
        )));
    }
    if b.iter().zip(a.iter()).any(|(&bv, &av)| bv < -1e-12 || bv > av + CHECK_TOL) {
        return Err(PmlError::CreatePreconditionError(
            "B must satisfy 0 <= B <= A entrywise".into(),
        ));
    }
    for (i, row) in b.rows().into_iter().enumerate() {
        if !near_integral(row.sum()) {
            return Err(PmlError::CreatePreconditionError(format!(
                "row {i} of B sums to {}",
                row.sum()
            )));
        }
    }
    let mut new_rows: Vec<(f64, usize, f64)> = Vec::new();
    for j in 0..cols {
        let mut count = 0.0;
        let mut weighted = 0.0;
        for i in 0..rows {
            let dv = (a[[i, j]] - b[[i, j]]).max(0.0);
            count += dv;
            weighted += levels[i] * dv;
        }
        if !near_integral(count) {
            return Err(PmlError::CreatePreconditionError(format!(
                "residual of column {j} sums to {count}, which is not an integer"
            )));
        }
        let c = count.round();
        if c >= 1.0 {
            new_rows.push(((weighted / c).min(1.0), j, c));
        }
    }

    let mut entries: Vec<(f64, Vec<f64>)> = (0..rows)
        .map(|i| (levels[i], b.row(i).iter().map(|v| v.max(0.0)).collect()))
        .collect();
    for (level, j, c) in new_rows {
        let mut row = vec![0.0; cols];
        row[j] = c;
        entries.push((level, row));
    }
    entries.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, Vec<f64>)> = Vec::with_capacity(entries.len());
    for (level, row) in entries {
        match merged.last_mut() {
            Some((l, acc)) if *l == level => {
                for (a, v) in acc.iter_mut().zip(&row) {
                    *a += v;
                }
            }
            _ => merged.push((level, row)),
        }
    }
    let out_levels: Vec<f64> = merged.iter().map(|(l, _)| *l).collect();
    let flat: Vec<f64> = merged.into_iter().flat_map(|(_, r)| r).collect();
    let x = Array2::from_shape_vec((out_levels.len(), cols), flat)
        .map_err(|e| PmlError::ShapeError(e.to_string()))?;
    Ok((x, out_levels))
}
