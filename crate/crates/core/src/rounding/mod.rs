//! Turning a fractional allocation into one with integral row sums.
//!
//! [`swap_matrix_round`] walks the rows top to bottom. For each row with a
//! fractional sum it rearranges mass with sum-preserving swaps so the
//! fraction sits in a single column, then moves that fraction (and the
//! complement taken from rows below) into a residual matrix `D`. The result
//! is a pair `(A', B)` with `B` integral and `A' = B + D` having the same
//! marginals as the input. [`create`] then folds the residual into fresh
//! levels so that nothing is lost.

mod create;
mod partial;
mod split;
mod swap;

pub use create::create;
pub use partial::{partial_round, partial_round_special, round_i_row, PartialRound};
pub use split::{combine, split};
pub use swap::{swap, swap_in_place, trans, Blocks, SwapOp};

use ndarray::Array2;

use crate::error::{PmlError, Result};

/// Distance to the nearest integer below which a value counts as integral.
pub const INT_TOL: f64 = 1e-9;

pub fn is_integral(x: f64) -> bool {
    (x - x.round()).abs() <= INT_TOL
}

/// Slack for precondition checks. Fractions below [`INT_TOL`] are dropped
/// as they occur, and the dropped amounts can add up across rows.
pub const CHECK_TOL: f64 = 1e-6;

pub(crate) fn near_integral(x: f64) -> bool {
    (x - x.round()).abs() <= CHECK_TOL
}

/// Output of [`swap_matrix_round`].
#[derive(Debug, Clone)]
pub struct RoundResult {
    /// Rearranged input: same row and column sums as the input.
    pub a_prime: Array2<f64>,
    /// Integral part, entrywise at most `a_prime`.
    pub b: Array2<f64>,
    /// Swaps taking the input to `a_prime`, in order.
    pub trace: Vec<SwapOp>,
    /// `||D||_1` after each row has been processed.
    pub residual_norms: Vec<f64>,
}

impl RoundResult {
    /// Total amount moved by all swaps.
    pub fn trace_total(&self) -> f64 {
        self.trace.iter().map(|op| op.eps).sum()
    }
}

/// Rounds every row sum down to an integer using swaps and a residual.
///
/// Requires integral column sums.
pub fn swap_matrix_round(a: &Array2<f64>) -> Result<RoundResult> {
    if a.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(PmlError::RoundPreconditionError(
            "entries must be finite and nonnegative".into(),
        ));
    }
    for (j, c) in a.columns().into_iter().enumerate() {
        let s = c.sum();
        if !near_integral(s) {
            return Err(PmlError::RoundPreconditionError(format!(
                "column {j} sums to {s}, which is not an integer"
            )));
        }
    }
    let rows = a.nrows();
    let mut cur = a.clone();
    let mut d = Array2::<f64>::zeros(a.dim());
    let mut trace = Vec::new();
    let mut norms = Vec::with_capacity(rows);
    for r in 0..rows {
        if !is_integral(cur.row(r).sum()) {
            let pr = partial_round(&cur, r)?;
            let next = round_i_row(&pr.y, pr.column, r)?;
            d += &(&pr.y - &next);
            cur = next;
            trace.extend(pr.ops);
        }
        norms.push(d.iter().map(|v| v.abs()).sum());
    }
    Ok(RoundResult {
        a_prime: &cur + &d,
        b: cur,
        trace,
        residual_norms: norms,
    })
}
