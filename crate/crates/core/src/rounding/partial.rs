//! Making one row integral at a time.

use ndarray::Array2;

use crate::error::{PmlError, Result};

use super::split::{combine, split};
use super::swap::{trans, Blocks, SwapOp};
use super::{is_integral, near_integral, CHECK_TOL, INT_TOL};

fn row_sum(x: &Array2<f64>, i: usize) -> f64 {
    x.row(i).sum()
}

/// Integer column sums, or an error naming the first fractional column.
fn integral_columns(x: &Array2<f64>) -> Result<Vec<i64>> {
    x.columns()
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let s = c.sum();
            if near_integral(s) {
                Ok(s.round() as i64)
            } else {
                Err(PmlError::RoundPreconditionError(format!(
                    "column {j} sums to {s}, which is not an integer"
                )))
            }
        })
        .collect()
}

fn check_rows_above(x: &Array2<f64>, i: usize) -> Result<i64> {
    let mut total = 0;
    for r in 0..i {
        let s = row_sum(x, r);
        if !near_integral(s) {
            return Err(PmlError::RoundPreconditionError(format!(
                "row {r} above {i} sums to {s}, which is not an integer"
            )));
        }
        total += s.round() as i64;
    }
    Ok(total)
}

/// Fractional part with near-integers mapped to 0.
fn frac(x: f64) -> f64 {
    if is_integral(x) {
        0.0
    } else {
        x - x.floor()
    }
}

/// Rearranges a matrix whose rows above `i` and whose columns have integral
/// sums, and whose row `i` sums to less than 1, so that row `i` is confined
/// to a single column `j` and the prefix of column `j` through row `i` is
/// integral up to the fractional part of row `i`. Returns `j` and the swaps.
pub fn partial_round_special(y: &mut Array2<f64>, i: usize) -> Result<(usize, Vec<SwapOp>)> {
    let (rows, cols) = y.dim();
    if i >= rows {
        return Err(PmlError::ShapeError(format!("row {i} outside {rows} rows")));
    }
    let col = integral_columns(y)?;
    let above = check_rows_above(y, i)?;
    let own = row_sum(y, i);
    if !(own >= -INT_TOL && own < 1.0) {
        return Err(PmlError::RoundPreconditionError(format!(
            "row {i} sums to {own}, expected a value in [0, 1)"
        )));
    }
    let mut prefix = 0i64;
    let mut found = None;
    for (r, &c) in col.iter().enumerate() {
        if prefix + c > above {
            found = Some(r);
            break;
        }
        prefix += c;
    }
    // Every column is used up by the rows above: the rest of the matrix is empty.
    let Some(j) = found else {
        return Ok((0, Vec::new()));
    };
    let t = above - prefix;
    let mut ops = Vec::new();

    let left_part: f64 = (0..j).map(|c| y[[i, c]]).sum();
    ops.extend(trans(
        y,
        left_part,
        &Blocks { top: 0..i, bottom: i..i + 1, left: 0..j, right: j..cols },
    )?);

    let above_j: f64 = (0..i).map(|r| y[[r, j]]).sum();
    let above_j = if is_integral(above_j) { above_j.round() } else { above_j };
    if above_j >= t as f64 {
        let amount = (frac(above_j) + 1.0).min(above_j - t as f64).max(0.0);
        ops.extend(trans(
            y,
            amount,
            &Blocks { top: 0..i, bottom: i + 1..rows, left: 0..j, right: j..j + 1 },
        )?);
    } else {
        let amount = (above_j.ceil() - above_j).max(0.0);
        ops.extend(trans(
            y,
            amount,
            &Blocks { top: 0..i, bottom: i..rows, left: j..j + 1, right: j + 1..cols },
        )?);
    }

    let right_part: f64 = (j + 1..cols).map(|c| y[[i, c]]).sum();
    ops.extend(trans(
        y,
        right_part,
        &Blocks { top: i..i + 1, bottom: i + 1..rows, left: j..j + 1, right: j + 1..cols },
    )?);
    Ok((j, ops))
}

/// Output of [`partial_round`].
#[derive(Debug, Clone)]
pub struct PartialRound {
    pub y: Array2<f64>,
    pub column: usize,
    pub ops: Vec<SwapOp>,
}

/// Prepares row `i` for rounding: splits off its integral part, applies
/// [`partial_round_special`] to the fractional part and merges the rows back.
pub fn partial_round(x: &Array2<f64>, i: usize) -> Result<PartialRound> {
    integral_columns(x)?;
    check_rows_above(x, i)?;
    let mut z = split(x, i)?;
    let (column, ops) = partial_round_special(&mut z, i + 1)?;
    let y = combine(&z, i)?;
    let ops = ops
        .into_iter()
        .map(|op| SwapOp {
            i1: op.i1 - usize::from(op.i1 > i),
            i2: op.i2 - usize::from(op.i2 > i),
            ..op
        })
        .filter(|op| op.i1 != op.i2)
        .collect();
    Ok(PartialRound { y, column, ops })
}

/// Drops the fractional part `o` of row `i` from column `j` and takes the
/// missing `1 - o` from the rows below in column `j`, so row `i` and the
/// column prefix both become integral.
pub fn round_i_row(y: &Array2<f64>, j: usize, i: usize) -> Result<Array2<f64>> {
    let (rows, cols) = y.dim();
    if i >= rows || j >= cols {
        return Err(PmlError::ShapeError(format!("({i}, {j}) outside {rows}x{cols}")));
    }
    integral_columns(y)?;
    let o = frac(row_sum(y, i));
    if o == 0.0 {
        return Ok(y.clone());
    }
    if y[[i, j]] < o - CHECK_TOL {
        return Err(PmlError::RoundPreconditionError(format!(
            "entry ({i}, {j}) = {} is below the fractional part {o}",
            y[[i, j]]
        )));
    }
    let prefix: f64 = (0..=i).map(|r| y[[r, j]]).sum::<f64>() - o;
    if !near_integral(prefix) || prefix < -CHECK_TOL {
        return Err(PmlError::RoundPreconditionError(format!(
            "column {j} through row {i} minus {o} is {prefix}, not a nonnegative integer"
        )));
    }
    let mut x = y.clone();
    x[[i, j]] = (x[[i, j]] - o).max(0.0);
    let mut residue = 1.0 - o;
    for r in i + 1..rows {
        if residue <= 0.0 {
            break;
        }
        let take = x[[r, j]].min(residue);
        x[[r, j]] = if take == x[[r, j]] { 0.0 } else { x[[r, j]] - take };
        residue = if take == residue { 0.0 } else { residue - take };
    }
    if residue > CHECK_TOL {
        return Err(PmlError::RoundPreconditionError(format!(
            "rows below {i} hold {residue} too little in column {j}"
        )));
    }
    Ok(x)
}
