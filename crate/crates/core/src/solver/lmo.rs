//! Linear maximization over the capped allocation polytope.
//!
//! The polytope fixes the observed column sums, bounds the mass by 1 and
//! limits the unseen mass placed on any single row to the slack left by the
//! observed columns. Maximizing a linear function over it is a fractional
//! knapsack in one constraint, solved exactly by sweeping the multiplier of
//! the mass constraint over the breakpoints of each column's upper envelope.

/// Sparse vertex: `(row, col, value)` triples with distinct positions.
pub type Sparse = Vec<(usize, usize, f64)>;

enum Change {
    /// Column `col` moves its mass from row `from` to row `to`.
    Move { col: usize, from: usize, to: usize },
    /// Row `row` stops receiving unseen mass.
    Drop { row: usize },
}

struct Event {
    lambda: f64,
    drop: f64,
    change: Change,
}

/// Rows on the upper hull of `(r_i, g_i)` that maximize `g_i - lambda r_i`
/// for some `lambda >= 0`, from the `lambda = 0` maximizer down to row 0.
fn envelope(levels: &[f64], g: impl Fn(usize) -> f64, hull: &mut Vec<usize>) {
    hull.clear();
    for i in 0..levels.len() {
        let (x, y) = (levels[i], g(i));
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (levels[b] - levels[a]) * (y - g(a)) - (g(b) - g(a)) * (x - levels[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    // Keep only the part reachable with lambda >= 0: up to the highest point.
    let mut best = 0;
    for (e, &i) in hull.iter().enumerate() {
        if g(i) > g(hull[best]) {
            best = e;
        }
    }
    hull.truncate(best + 1);
}

/// Maximizes `<grad, V>` over the capped polytope.
///
/// `grad` is row-major with `cols = phi.len() + 1` columns; column 0 is the
/// unseen column. Returns `None` when even the smallest level is too heavy.
pub fn linear_max(grad: &[f64], levels: &[f64], phi: &[f64]) -> Option<Sparse> {
    let rows = levels.len();
    let cols = phi.len() + 1;
    let r_min = levels[0];
    let min_mass: f64 = phi.iter().sum::<f64>() * r_min;
    if min_mass > 1.0 + 1e-12 {
        return None;
    }
    let slack = (1.0 - min_mass).max(0.0);
    let at = |i: usize, j: usize| grad[i * cols + j];

    let mut events: Vec<Event> = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(cols - 1);
    let mut mass = 0.0;
    let mut hull = Vec::with_capacity(rows);
    for j in 1..cols {
        envelope(levels, |i| at(i, j), &mut hull);
        let top = *hull.last().expect("nonempty grid");
        current.push(top);
        mass += phi[j - 1] * levels[top];
        for e in (1..hull.len()).rev() {
            let (lo, hi) = (hull[e - 1], hull[e]);
            let lambda = (at(hi, j) - at(lo, j)) / (levels[hi] - levels[lo]);
            events.push(Event {
                lambda,
                drop: phi[j - 1] * (levels[hi] - levels[lo]),
                change: Change::Move { col: j, from: hi, to: lo },
            });
        }
    }
    let mut unseen: Vec<(usize, f64)> = Vec::new();
    if slack > 0.0 {
        for i in 0..rows {
            let v = at(i, 0);
            if v > 0.0 {
                unseen.push((i, 1.0));
                mass += slack;
                events.push(Event {
                    lambda: v / levels[i],
                    drop: slack,
                    change: Change::Drop { row: i },
                });
            }
        }
    }

    if mass > 1.0 {
        events.sort_unstable_by(|a, b| a.lambda.total_cmp(&b.lambda));
        let mut partial: Option<(Change, f64)> = None;
        for ev in events {
            let after = mass - ev.drop;
            if after <= 1.0 {
                let theta = if ev.drop > 0.0 { (1.0 - after) / ev.drop } else { 0.0 };
                partial = Some((ev.change, theta.clamp(0.0, 1.0)));
                break;
            }
            mass = after;
            match ev.change {
                Change::Move { col, to, .. } => current[col - 1] = to,
                Change::Drop { row } => {
                    if let Some(p) = unseen.iter().position(|&(i, _)| i == row) {
                        unseen.swap_remove(p);
                    }
                }
            }
        }
        let mut out: Sparse = Vec::with_capacity(cols + 2);
        let mut split_col = None;
        match partial {
            Some((Change::Move { col, from, to }, theta)) => {
                split_col = Some(col);
                let p = phi[col - 1];
                if theta > 0.0 {
                    out.push((from, col, theta * p));
                }
                if theta < 1.0 {
                    out.push((to, col, (1.0 - theta) * p));
                }
            }
            Some((Change::Drop { row }, theta)) => {
                for u in unseen.iter_mut() {
                    if u.0 == row {
                        u.1 = theta;
                    }
                }
            }
            None => {}
        }
        for (c, &i) in current.iter().enumerate() {
            if split_col != Some(c + 1) {
                out.push((i, c + 1, phi[c]));
            }
        }
        for &(i, frac) in &unseen {
            if frac > 0.0 {
                out.push((i, 0, frac * slack / levels[i]));
            }
        }
        return Some(out);
    }

    let mut out: Sparse = current
        .iter()
        .enumerate()
        .map(|(c, &i)| (i, c + 1, phi[c]))
        .collect();
    for &(i, _) in &unseen {
        out.push((i, 0, slack / levels[i]));
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(grad: &[f64], cols: usize, v: &Sparse) -> f64 {
        v.iter().map(|&(i, j, x)| grad[i * cols + j] * x).sum()
    }

    fn mass(levels: &[f64], v: &Sparse) -> f64 {
        v.iter().map(|&(i, _, x)| levels[i] * x).sum()
    }

    #[test]
    fn unconstrained_picks_column_maxima() {
        let levels = [0.1, 0.2];
        // Column 1 prefers row 0; unseen column is negative everywhere.
        let grad = [-1.0, 2.0, -1.0, 1.0];
        let v = linear_max(&grad, &levels, &[1.0]).unwrap();
        assert_eq!(v, vec![(0, 1, 1.0)]);
    }

    #[test]
    fn mass_constraint_is_tight_when_binding() {
        let levels = [0.25, 0.5, 1.0];
        // Column 1 (two symbols) wants the heaviest row, which is infeasible.
        let grad = [0.0, 0.0, 0.0, 1.0, 0.0, 3.0];
        let v = linear_max(&grad, &levels, &[2.0]).unwrap();
        assert!((mass(&levels, &v) - 1.0).abs() < 1e-12);
        let total: f64 = v.iter().map(|t| t.2).sum();
        assert!((total - 2.0).abs() < 1e-12);
        // Any other feasible split is no better.
        for a in 0..=100 {
            let t = a as f64 / 100.0 * 2.0;
            for b in 0..=100 {
                let u = b as f64 / 100.0 * (2.0 - t);
                let w = 2.0 - t - u;
                let m = 0.25 * t + 0.5 * u + w;
                if m <= 1.0 + 1e-12 {
                    assert!(u * 1.0 + w * 3.0 <= value(&grad, 2, &v) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn infeasible_when_smallest_level_too_heavy() {
        assert!(linear_max(&[0.0, 0.0], &[0.6], &[2.0]).is_none());
    }
}
