//! Support reduction for fractional allocations.
//!
//! Writing row `i` as `s_i d_i` with `d_i` summing to one, `log g` is linear
//! in the row weights `s` (the row term is homogeneous of degree one). The
//! observed column sums and the mass are `k + 1` linear constraints on `s`,
//! so a simplex-style purification moves to a basic solution with at most
//! `k + 1` positive rows without lowering the objective.

use ndarray::Array2;

use crate::allocation::{cost_matrix, row_entropy_term};
use crate::error::{PmlError, Result};

const PIVOT_TOL: f64 = 1e-11;

/// Drops zero rows and, if more than `k + 1` rows remain, reduces the support
/// to at most `k + 1` rows keeping column sums and mass, never decreasing `log g`.
pub fn sparsify(x: &Array2<f64>, levels: &[f64], freqs: &[u64]) -> Result<(Array2<f64>, Vec<f64>)> {
    let cols = freqs.len();
    let limit = cols;
    let keep: Vec<usize> = (0..x.nrows()).filter(|&i| x.row(i).sum() > 0.0).collect();
    if keep.len() <= limit {
        return Ok(select(x, levels, &keep));
    }

    let cost = cost_matrix(levels, freqs);
    let m = keep.len();
    let mut s: Vec<f64> = keep.iter().map(|&i| x.row(i).sum()).collect();
    let dirs: Vec<Vec<f64>> = keep
        .iter()
        .zip(&s)
        .map(|(&i, &si)| x.row(i).iter().map(|v| v / si).collect())
        .collect();
    let gain: Vec<f64> = keep
        .iter()
        .zip(&dirs)
        .map(|(&i, d)| {
            let lin: f64 = d.iter().zip(cost.row(i)).map(|(a, b)| a * b).sum();
            lin + row_entropy_term(d)
        })
        .collect();

    // Constraint rows: observed columns 1..cols, then mass.
    let nrows = cols;
    let mut t = vec![vec![0.0; m]; nrows];
    for (c, (&i, d)) in keep.iter().zip(&dirs).enumerate() {
        for j in 1..cols {
            t[j - 1][c] = d[j];
        }
        t[cols - 1][c] = levels[i];
    }

    // Reduced row echelon form with partial pivoting.
    let mut basis: Vec<Option<usize>> = vec![None; nrows];
    let mut is_basic = vec![false; m];
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    for &c in &order {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..nrows {
            if basis[r].is_none() {
                let v = t[r][c].abs();
                if v > PIVOT_TOL && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((r, v));
                }
            }
        }
        if let Some((r, _)) = best {
            pivot(&mut t, r, c);
            basis[r] = Some(c);
            is_basic[c] = true;
        }
        if basis.iter().all(|b| b.is_some()) {
            break;
        }
    }

    for q in 0..m {
        if is_basic[q] || s[q] <= 0.0 {
            continue;
        }
        let reduced = gain[q]
            - (0..nrows)
                .filter_map(|r| basis[r].map(|b| gain[b] * t[r][q]))
                .sum::<f64>();
        // Moving s_q by `sign * step` moves basic b_r by `-sign * step * t[r][q]`.
        let mut sign = if reduced > 0.0 { 1.0 } else { -1.0 };
        let mut leave = ratio_test(&t, &basis, &s, q, sign);
        if sign > 0.0 && leave.is_none() {
            sign = -1.0;
            leave = ratio_test(&t, &basis, &s, q, sign);
        }
        let (step, row) = match leave {
            Some((step, _)) if sign < 0.0 && step >= s[q] => (s[q], None),
            Some((step, r)) => (step, Some(r)),
            None if sign < 0.0 => (s[q], None),
            None => unreachable!("sign is negative once the positive direction is unbounded"),
        };
        for r in 0..nrows {
            if let Some(b) = basis[r] {
                s[b] = (s[b] - sign * step * t[r][q]).max(0.0);
            }
        }
        match row {
            None => s[q] = 0.0,
            Some(r) => {
                s[q] = (s[q] + sign * step).max(0.0);
                let out = basis[r].expect("ratio test only returns basic rows");
                s[out] = 0.0;
                is_basic[out] = false;
                pivot(&mut t, r, q);
                basis[r] = Some(q);
                is_basic[q] = true;
            }
        }
    }

    let positive: Vec<usize> = (0..m).filter(|&c| s[c] > 0.0).collect();
    if positive.len() > limit {
        return Err(PmlError::SparsifyUnsupported {
            limit,
            reason: format!("{} rows remain positive", positive.len()),
        });
    }
    let out_levels: Vec<f64> = positive.iter().map(|&c| levels[keep[c]]).collect();
    let out = Array2::from_shape_fn((positive.len(), cols), |(r, j)| {
        let c = positive[r];
        s[c] * dirs[c][j]
    });
    Ok((out, out_levels))
}

fn select(x: &Array2<f64>, levels: &[f64], rows: &[usize]) -> (Array2<f64>, Vec<f64>) {
    let out = Array2::from_shape_fn((rows.len(), x.ncols()), |(r, j)| x[[rows[r], j]]);
    (out, rows.iter().map(|&i| levels[i]).collect())
}

fn pivot(t: &mut [Vec<f64>], r: usize, c: usize) {
    let p = t[r][c];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (rr, row) in t.iter_mut().enumerate() {
        if rr == r {
            continue;
        }
        let f = row[c];
        if f != 0.0 {
            for (v, pv) in row.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            row[c] = 0.0;
        }
    }
}

/// Smallest step before a basic weight hits zero, with the blocking row.
fn ratio_test(
    t: &[Vec<f64>],
    basis: &[Option<usize>],
    s: &[f64],
    q: usize,
    sign: f64,
) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize, f64)> = None;
    for (r, b) in basis.iter().enumerate() {
        let Some(b) = *b else { continue };
        let rate = sign * t[r][q];
        if rate > PIVOT_TOL {
            let step = s[b] / rate;
            let better = match best {
                None => true,
                Some((bs, _, brate)) => step < bs || (step == bs && rate > brate),
            };
            if better {
                best = Some((step, r, rate));
            }
        }
    }
    best.map(|(step, r, _)| (step, r))
}
