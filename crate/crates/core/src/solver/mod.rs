//! Frank–Wolfe ascent on the concave relaxation of the profile likelihood.

mod dual;
mod lmo;
mod sparsify;

pub use lmo::linear_max;
pub use sparsify::sparsify;
pub use dual::dual_bound;

use ndarray::Array2;

use crate::allocation::{column_freqs, cost_matrix, log_g_slice, log_g_with_cost, GRAD_CLAMP};
use crate::config::SolverConfig;
use crate::error::{PmlError, Result};
use crate::grid::Grid;
use crate::profile::Profile;

const GOLDEN_ITERS: usize = 40;

/// Output of the fractional solve.
#[derive(Debug, Clone)]
pub struct FracSolution {
    pub x: Array2<f64>,
    pub levels: Vec<f64>,
    /// `[0, m_1, ..., m_k]`.
    pub freqs: Vec<u64>,
    pub log_g: f64,
    /// Certified Frank–Wolfe gap at `x`: an upper bound on the suboptimality.
    pub gap: f64,
    pub iterations: usize,
    /// Objective value after every Frank–Wolfe step, starting from the initial point.
    pub history: Vec<f64>,
    /// Multipliers of the observed column sums from the dual solve. Passing
    /// them to [`solve_frac_warm`] speeds up solves on nearby grids.
    pub multipliers: Vec<f64>,
}

/// Gap the solver aims for.
pub fn gap_target(profile: &Profile, rows: usize, cfg: &SolverConfig) -> f64 {
    let k = profile.k().min(rows) as f64;
    cfg.gap_tol.max(0.01 * k * (profile.n() as f64).ln())
}

/// Initial point: observed columns spread along a mixture of the lightest
/// level and the uniform row weights, unseen column filling half the slack.
fn initial_point(levels: &[f64], phi: &[f64]) -> Array2<f64> {
    let rows = levels.len();
    let total: f64 = phi.iter().sum();
    let r_min = levels[0];
    let r_bar = levels.iter().sum::<f64>() / rows as f64;
    let min_mass = total * r_min;
    let spread = total * (r_bar - r_min);
    let tau = if spread > 0.0 {
        (0.5 * (1.0 - min_mass) / spread).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let mut w = vec![tau / rows as f64; rows];
    w[0] += 1.0 - tau;
    let wr: f64 = w.iter().zip(levels).map(|(a, b)| a * b).sum();
    let slack = (1.0 - total * wr).max(0.0);
    let u = if wr > 0.0 { 0.5 * slack / wr } else { 0.0 };
    Array2::from_shape_fn((rows, phi.len() + 1), |(i, j)| {
        if j == 0 {
            w[i] * u
        } else {
            w[i] * phi[j - 1]
        }
    })
}

struct LineData {
    /// Linear terms of the current point and of the vertex.
    lin_x: f64,
    lin_v: f64,
    /// `sum x ln x` and `sum x` over entries outside the vertex support.
    ent_a: f64,
    ent_b: f64,
    /// Same for rows the vertex does not touch.
    row_a: f64,
    row_b: f64,
    /// `(x, v)` pairs on the vertex support and on the rows it touches.
    entries: Vec<(f64, f64)>,
    rows: Vec<(f64, f64)>,
}

impl LineData {
    fn eval(&self, gamma: f64) -> f64 {
        let keep = 1.0 - gamma;
        let scaled = |a: f64, b: f64| {
            if keep <= 0.0 {
                0.0
            } else {
                keep * (a + b * keep.ln())
            }
        };
        let xl = |t: f64| if t > 1e-300 { t * t.ln() } else { 0.0 };
        let mut f = keep * self.lin_x + gamma * self.lin_v;
        f -= scaled(self.ent_a, self.ent_b);
        f += scaled(self.row_a, self.row_b);
        for &(x, v) in &self.entries {
            f -= xl(keep * x + gamma * v);
        }
        for &(s, sv) in &self.rows {
            f += xl(keep * s + gamma * sv);
        }
        f
    }
}

fn golden_max(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Scales observed columns to their exact sums and trims unseen mass so the
/// total mass is at most 1. Returns `None` if that is impossible.
fn repair(x: &mut [f64], levels: &[f64], phi: &[f64]) -> Option<()> {
    let cols = phi.len() + 1;
    let rows = levels.len();
    for j in 1..cols {
        let s: f64 = (0..rows).map(|i| x[i * cols + j]).sum();
        if !(s > 0.0) || !s.is_finite() {
            return None;
        }
        let f = phi[j - 1] / s;
        for i in 0..rows {
            x[i * cols + j] *= f;
        }
    }
    let mass: f64 = (0..rows)
        .map(|i| levels[i] * x[i * cols..(i + 1) * cols].iter().sum::<f64>())
        .sum();
    if mass > 1.0 {
        let unseen: f64 = (0..rows).map(|i| levels[i] * x[i * cols]).sum();
        let mut excess = mass - 1.0;
        let f = if unseen > excess { (unseen - excess) / unseen } else { 0.0 };
        for i in 0..rows {
            x[i * cols] *= f;
        }
        excess -= unseen - unseen * f;
        // Whatever is left moves observed symbols down to the lightest level.
        for i in (1..rows).rev() {
            if excess <= 0.0 {
                break;
            }
            let drop = levels[i] - levels[0];
            for j in 1..cols {
                if excess <= 0.0 {
                    break;
                }
                let moved = x[i * cols + j].min(excess / drop);
                x[i * cols + j] -= moved;
                x[j] += moved;
                excess -= moved * drop;
            }
        }
        if excess > 1e-12 {
            return None;
        }
    }
    Some(())
}

/// Maximizes `log g` over fractional allocations on `grid`.
pub fn solve_frac(profile: &Profile, grid: &Grid, cfg: &SolverConfig) -> Result<FracSolution> {
    solve_frac_warm(profile, grid, cfg, None)
}

/// [`solve_frac`] starting the dual solve from the given multipliers.
///
/// A smoothed dual solve supplies a near-optimal allocation together with an
/// upper bound on the optimum. Frank–Wolfe steps then polish the allocation
/// until the smaller of the two certificates (dual bound minus objective, or
/// Frank–Wolfe gap) reaches the target.
pub fn solve_frac_warm(
    profile: &Profile,
    grid: &Grid,
    cfg: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<FracSolution> {
    let levels = grid.levels().to_vec();
    let freqs = column_freqs(profile);
    let phi: Vec<f64> = profile.counts().iter().map(|&c| c as f64).collect();
    let needed = phi.iter().sum::<f64>() * levels[0];
    if needed > 1.0 + 1e-12 {
        return Err(PmlError::Infeasible { needed });
    }
    let rows = levels.len();
    let cols = freqs.len();
    let cost = cost_matrix(&levels, &freqs);
    let cost_flat: Vec<f64> = cost.iter().copied().collect();
    let target = gap_target(profile, rows, cfg);

    if needed >= 1.0 - 1e-12 {
        // Only one feasible point: every observed symbol on the lightest level.
        let x = Array2::from_shape_fn((rows, cols), |(i, j)| {
            if i == 0 && j > 0 {
                phi[j - 1]
            } else {
                0.0
            }
        });
        let log_g = log_g_with_cost(&x, &cost)?;
        return Ok(FracSolution {
            x,
            levels,
            freqs,
            log_g,
            gap: 0.0,
            iterations: 0,
            history: vec![log_g],
            multipliers: Vec::new(),
        });
    }

    let beta = 2.0 * (rows.max(2) as f64).ln() / target;
    let n = profile.n() as f64;
    let (mu0, stages) = match warm {
        Some(mu) if mu.len() == phi.len() && mu.iter().all(|v| v.is_finite()) => (mu.to_vec(), 1),
        _ => (
            freqs[1..].iter().map(|&m| m as f64 * (m as f64 / n).ln()).collect(),
            3,
        ),
    };
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let dual = dual::solve_dual(&phi, &levels, &cost_flat, beta, mu0, stages, |mu: &[f64], x: &[f64]| {
        let mut y = x.to_vec();
        if repair(&mut y, &levels, &phi).is_none() || y.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let bound = dual::dual_bound(mu, &phi, &levels, &cost_flat, cols);
        let Ok(value) = log_g_slice(&y, &cost_flat, cols) else {
            return false;
        };
        let done = bound - value <= 0.5 * target;
        if best.as_ref().is_none_or(|b| bound - value < b.1 - b.2) {
            best = Some((y, bound, value));
        }
        done
    });
    let (start, bound) = match best {
        Some((y, bound, _)) => (y, bound),
        None => {
            let bound = dual::dual_bound(&dual.mu, &phi, &levels, &cost_flat, cols);
            let mut y = dual.x;
            match repair(&mut y, &levels, &phi) {
                Some(()) if y.iter().all(|v| v.is_finite()) => (y, bound),
                _ => (initial_point(&levels, &phi).iter().copied().collect(), bound),
            }
        }
    };
    let multipliers = dual.mu;
    let mut sol = frank_wolfe(
        start,
        Problem {
            levels,
            freqs,
            phi,
            cost,
            cost_flat,
            target,
            bound,
        },
        cfg.max_iters,
    )?;
    sol.multipliers = multipliers;
    Ok(sol)
}

struct Problem {
    levels: Vec<f64>,
    freqs: Vec<u64>,
    phi: Vec<f64>,
    cost: Array2<f64>,
    cost_flat: Vec<f64>,
    target: f64,
    /// Known upper bound on the optimum.
    bound: f64,
}

fn frank_wolfe(mut x: Vec<f64>, pb: Problem, max_iters: usize) -> Result<FracSolution> {
    let rows = pb.levels.len();
    let cols = pb.freqs.len();
    let needed = pb.phi.iter().sum::<f64>() * pb.levels[0];
    let log_clamp = GRAD_CLAMP.ln();
    let mut logx: Vec<f64> = x
        .iter()
        .map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mut grad = vec![0.0; rows * cols];
    let mut in_v = vec![false; rows * cols];
    let mut row_hit = vec![0.0; rows];
    let x0 = Array2::from_shape_vec((rows, cols), x.clone()).expect("shape");
    let mut history = vec![log_g_with_cost(&x0, &pb.cost)?];
    let mut gap = f64::INFINITY;
    let mut stalled = 0;

    for it in 0..=max_iters {
        // One pass computes the gradient along with the sums the line search needs.
        let mut gx = 0.0;
        let mut lin_x = 0.0;
        let mut ent_a = 0.0;
        let mut ent_b = 0.0;
        let mut row_a = 0.0;
        let mut row_b = 0.0;
        let mut sums = vec![0.0; rows];
        for i in 0..rows {
            let base = i * cols;
            let s: f64 = x[base..base + cols].iter().sum();
            sums[i] = s;
            let ls = s.max(GRAD_CLAMP).ln();
            for j in 0..cols {
                let idx = base + j;
                let g = pb.cost_flat[idx] + ls - logx[idx].max(log_clamp);
                grad[idx] = g;
                gx += g * x[idx];
                lin_x += pb.cost_flat[idx] * x[idx];
                if x[idx] > 1e-300 {
                    ent_a += x[idx] * logx[idx];
                    ent_b += x[idx];
                }
            }
            if s > 1e-300 {
                row_a += s * s.ln();
                row_b += s;
            }
        }
        let current = *history.last().expect("history starts nonempty");
        let v = linear_max(&grad, &pb.levels, &pb.phi).ok_or(PmlError::Infeasible { needed })?;
        let gv: f64 = v.iter().map(|&(i, j, val)| grad[i * cols + j] * val).sum();
        gap = (gv - gx).min(pb.bound - current);
        if gap <= pb.target {
            let xm = Array2::from_shape_vec((rows, cols), x).expect("shape");
            let log_g = log_g_with_cost(&xm, &pb.cost)?;
            return Ok(FracSolution {
                x: xm,
                levels: pb.levels,
                freqs: pb.freqs,
                log_g,
                gap: gap.max(0.0),
                iterations: it,
                history,
                multipliers: Vec::new(),
            });
        }
        if it == max_iters || stalled >= 3 {
            break;
        }

        // Restrict the objective to the segment towards the vertex.
        let mut line = LineData {
            lin_x,
            lin_v: v.iter().map(|&(i, j, val)| pb.cost_flat[i * cols + j] * val).sum(),
            ent_a,
            ent_b,
            row_a,
            row_b,
            entries: Vec::with_capacity(v.len()),
            rows: Vec::new(),
        };
        for &(i, j, val) in &v {
            let idx = i * cols + j;
            in_v[idx] = true;
            if x[idx] > 1e-300 {
                line.ent_a -= x[idx] * logx[idx];
                line.ent_b -= x[idx];
            }
            line.entries.push((x[idx], val));
            row_hit[i] += val;
        }
        let mut touched: Vec<usize> = v.iter().map(|t| t.0).collect();
        touched.sort_unstable();
        touched.dedup();
        for &i in &touched {
            let s = sums[i];
            if s > 1e-300 {
                line.row_a -= s * s.ln();
                line.row_b -= s;
            }
            line.rows.push((s, row_hit[i]));
        }
        let (gamma, value) = golden_max(|g| line.eval(g));

        if value > current && gamma > 0.0 {
            stalled = 0;
            let keep = 1.0 - gamma;
            if keep <= 0.0 {
                x.iter_mut().for_each(|e| *e = 0.0);
                logx.iter_mut().for_each(|e| *e = f64::NEG_INFINITY);
            } else {
                let lk = keep.ln();
                for idx in 0..rows * cols {
                    if !in_v[idx] {
                        x[idx] *= keep;
                        logx[idx] += lk;
                    }
                }
            }
            for &(i, j, val) in &v {
                let idx = i * cols + j;
                let nx = keep.max(0.0) * x[idx] + gamma * val;
                x[idx] = nx;
                logx[idx] = if nx > 0.0 { nx.ln() } else { f64::NEG_INFINITY };
            }
            history.push(value);
        } else {
            stalled += 1;
            history.push(current);
        }
        for &(i, j, _) in &v {
            in_v[i * cols + j] = false;
            row_hit[i] = 0.0;
        }
    }
    Err(PmlError::NonConvergence {
        gap,
        iterations: history.len() - 1,
    })
}
