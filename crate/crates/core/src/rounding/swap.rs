//! Elementary 2x2 swaps and block transfers built from them.

use std::ops::Range;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{PmlError, Result};

use super::CHECK_TOL;

/// `+eps` at `(i1, j1)` and `(i2, j2)`, `-eps` at `(i1, j2)` and `(i2, j1)`.
/// Row and column sums are unchanged. Indices satisfy `i1 < i2`, `j1 < j2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapOp {
    pub i1: usize,
    pub i2: usize,
    pub j1: usize,
    pub j2: usize,
    pub eps: f64,
}

fn check_op(a: &Array2<f64>, op: &SwapOp) -> Result<()> {
    if !(op.i1 < op.i2 && op.j1 < op.j2 && op.i2 < a.nrows() && op.j2 < a.ncols()) {
        return Err(PmlError::ShapeError(format!(
            "swap indices {op:?} out of order or outside a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !(op.eps >= 0.0 && op.eps.is_finite()) {
        return Err(PmlError::InvalidParameter(format!("swap amount {}", op.eps)));
    }
    Ok(())
}

/// Applies a swap in place.
pub fn swap_in_place(a: &mut Array2<f64>, op: &SwapOp) -> Result<()> {
    check_op(a, op)?;
    if a[[op.i1, op.j2]] < op.eps || a[[op.i2, op.j1]] < op.eps {
        return Err(PmlError::SwapInfeasible);
    }
    a[[op.i1, op.j1]] += op.eps;
    a[[op.i2, op.j2]] += op.eps;
    a[[op.i1, op.j2]] -= op.eps;
    a[[op.i2, op.j1]] -= op.eps;
    Ok(())
}

/// Returns the swapped matrix.
pub fn swap(a: &Array2<f64>, op: &SwapOp) -> Result<Array2<f64>> {
    let mut out = a.clone();
    swap_in_place(&mut out, op)?;
    Ok(out)
}

/// Block layout for [`trans`]: `top` rows precede `bottom` rows and `left`
/// columns precede `right` columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocks {
    pub top: Range<usize>,
    pub bottom: Range<usize>,
    pub left: Range<usize>,
    pub right: Range<usize>,
}

fn block_sum(x: &Array2<f64>, rows: &Range<usize>, cols: &Range<usize>) -> f64 {
    rows.clone()
        .map(|i| cols.clone().map(|j| x[[i, j]]).sum::<f64>())
        .sum()
}

/// Positions of a block in row-major order.
struct Cursor {
    rows: Range<usize>,
    cols: Range<usize>,
    pos: usize,
}

impl Cursor {
    fn new(rows: Range<usize>, cols: Range<usize>) -> Self {
        Self { rows, cols, pos: 0 }
    }

    /// Next cell holding a positive entry, without advancing past it.
    fn next_positive(&mut self, x: &Array2<f64>) -> Option<(usize, usize)> {
        let w = self.cols.len();
        let total = self.rows.len() * w;
        while self.pos < total {
            let (i, j) = (self.rows.start + self.pos / w, self.cols.start + self.pos % w);
            if x[[i, j]] > 0.0 {
                return Some((i, j));
            }
            self.pos += 1;
        }
        None
    }
}

/// Moves `v` units from the upper-right and lower-left blocks into the
/// upper-left and lower-right blocks by a sequence of swaps, keeping every
/// row and column sum. Returns the swaps performed.
pub fn trans(x: &mut Array2<f64>, v: f64, blocks: &Blocks) -> Result<Vec<SwapOp>> {
    let Blocks { top, bottom, left, right } = blocks;
    if top.end > bottom.start
        || left.end > right.start
        || bottom.end > x.nrows()
        || right.end > x.ncols()
        || top.start > top.end
        || bottom.start > bottom.end
        || left.start > left.end
        || right.start > right.end
    {
        return Err(PmlError::ShapeError(format!(
            "invalid blocks {blocks:?} for a {}x{} matrix",
            x.nrows(),
            x.ncols()
        )));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(PmlError::InvalidParameter(format!("transfer amount {v}")));
    }
    let avail_ur = block_sum(x, top, right);
    let avail_ll = block_sum(x, bottom, left);
    let tol = CHECK_TOL * v.max(1.0);
    if v > avail_ur + tol || v > avail_ll + tol {
        return Err(PmlError::TransInfeasible(format!(
            "need {v}, upper-right holds {avail_ur}, lower-left holds {avail_ll}"
        )));
    }
    let mut ops = Vec::new();
    let mut ll = Cursor::new(bottom.clone(), left.clone());
    let mut ur = Cursor::new(top.clone(), right.clone());
    let mut rem = v;
    while rem > 0.0 {
        let (Some((c, b)), Some((a, d))) = (ll.next_positive(x), ur.next_positive(x)) else {
            if rem <= tol {
                break;
            }
            return Err(PmlError::TransInfeasible(format!("{rem} left to move")));
        };
        let (xcb, xad) = (x[[c, b]], x[[a, d]]);
        let u = xcb.min(xad).min(rem);
        x[[a, b]] += u;
        x[[c, d]] += u;
        x[[c, b]] = if u == xcb { 0.0 } else { xcb - u };
        x[[a, d]] = if u == xad { 0.0 } else { xad - u };
        rem = if u == rem { 0.0 } else { rem - u };
        ops.push(SwapOp { i1: a, i2: c, j1: b, j2: d, eps: u });
    }
    Ok(ops)
}
