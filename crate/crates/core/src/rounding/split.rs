//! Splitting a row into its integral and fractional parts, and undoing it.

use ndarray::{s, Array2};

use crate::error::{PmlError, Result};

use super::INT_TOL;

/// Floor of `x`, treating values within tolerance of an integer as that integer.
pub(crate) fn snapped_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= INT_TOL {
        r
    } else {
        x.floor()
    }
}

/// Replaces row `t` by two rows: the first carries the leading entries of
/// row `t` up to a total of `floor(sum)`, the second carries the remainder.
pub fn split(x: &Array2<f64>, t: usize) -> Result<Array2<f64>> {
    let (rows, cols) = x.dim();
    if t >= rows {
        return Err(PmlError::ShapeError(format!("row {t} outside {rows} rows")));
    }
    let target = snapped_floor(x.row(t).sum());
    let mut z = Array2::zeros((rows + 1, cols));
    z.slice_mut(s![..t, ..]).assign(&x.slice(s![..t, ..]));
    z.slice_mut(s![t + 2.., ..]).assign(&x.slice(s![t + 1.., ..]));
    let mut prefix = 0.0;
    let mut cut = cols - 1;
    for j in 0..cols {
        if prefix + x[[t, j]] >= target {
            cut = j;
            break;
        }
        prefix += x[[t, j]];
    }
    for j in 0..cols {
        let v = x[[t, j]];
        if j < cut {
            z[[t, j]] = v;
        } else if j == cut {
            let head = (target - prefix).clamp(0.0, v);
            z[[t, j]] = head;
            z[[t + 1, j]] = v - head;
        } else {
            z[[t + 1, j]] = v;
        }
    }
    Ok(z)
}

/// Adds row `t + 1` into row `t`.
pub fn combine(z: &Array2<f64>, t: usize) -> Result<Array2<f64>> {
    let (rows, cols) = z.dim();
    if t + 1 >= rows {
        return Err(PmlError::ShapeError(format!(
            "cannot combine rows {t} and {} of {rows}",
            t + 1
        )));
    }
    let mut x = Array2::zeros((rows - 1, cols));
    x.slice_mut(s![..t, ..]).assign(&z.slice(s![..t, ..]));
    x.slice_mut(s![t + 1.., ..]).assign(&z.slice(s![t + 2.., ..]));
    for j in 0..cols {
        x[[t, j]] = z[[t, j]] + z[[t + 1, j]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn split_row_at_integer_boundary() {
        let x = array![[0.5, 1.0, 0.75], [1.0, 0.0, 0.0]];
        let z = split(&x, 0).unwrap();
        assert_eq!(z, array![[0.5, 1.0, 0.5], [0.0, 0.0, 0.25], [1.0, 0.0, 0.0]]);
        assert_eq!(combine(&z, 0).unwrap(), x);
    }

    #[test]
    fn split_of_small_row_is_all_remainder() {
        let x = array![[0.25, 0.5]];
        let z = split(&x, 0).unwrap();
        assert_eq!(z, array![[0.0, 0.0], [0.25, 0.5]]);
    }
}
