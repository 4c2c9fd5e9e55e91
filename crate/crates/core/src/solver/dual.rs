//! Smoothed dual of the fractional problem.
//!
//! For multipliers `mu` on the observed column sums, every row contributes
//! `w_i(mu) = ln(1 + sum_j exp(C_ij - mu_j))` per unit of weight and costs
//! `r_i` units of mass, so
//!
//! `h(mu) = sum_j phi_j mu_j + max_i w_i(mu) / r_i`
//!
//! upper-bounds `log g` on the feasible set. Replacing the max by a
//! soft-max with inverse temperature `beta` gives a smooth convex function
//! minimized by damped Newton steps; its gradient is the column-sum residual
//! of an explicit primal allocation, which is what we return.

use nalgebra::{DMatrix, DVector};

/// Largest change of any multiplier in one Newton step. Multipliers act on
/// a log scale, so longer steps only overshoot.
const MAX_STEP: f64 = 4.0;

/// Per-row quantities at a given `mu`.
struct RowEval {
    /// `w_i / r_i`.
    u: Vec<f64>,
    /// Within-row softmax, row-major with `cols` entries per row.
    d: Vec<f64>,
}

fn rows_at(mu: &[f64], levels: &[f64], cost: &[f64], cols: usize) -> RowEval {
    let rows = levels.len();
    let mut u = Vec::with_capacity(rows);
    let mut d = vec![0.0; rows * cols];
    for i in 0..rows {
        let base = i * cols;
        let mut top = 0.0f64;
        for j in 1..cols {
            top = top.max(cost[base + j] - mu[j - 1]);
        }
        let mut z = 0.0;
        for j in 0..cols {
            let a = if j == 0 { 0.0 } else { cost[base + j] - mu[j - 1] };
            let e = (a - top).exp();
            d[base + j] = e;
            z += e;
        }
        for v in &mut d[base..base + cols] {
            *v /= z;
        }
        u.push((top + z.ln()) / levels[i]);
    }
    RowEval { u, d }
}

/// `h(mu)`: a valid upper bound on the optimum for any `mu`.
pub fn dual_bound(mu: &[f64], phi: &[f64], levels: &[f64], cost: &[f64], cols: usize) -> f64 {
    let ev = rows_at(mu, levels, cost, cols);
    let top = ev.u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    phi.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() + top.max(0.0)
}

fn softmax(u: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pi: Vec<f64> = u.iter().map(|&v| (beta * (v - top)).exp()).collect();
    let z: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= z);
    (pi, top + z.ln() / beta)
}

fn smoothed(mu: &[f64], beta: f64, phi: &[f64], levels: &[f64], cost: &[f64], cols: usize) -> f64 {
    let ev = rows_at(mu, levels, cost, cols);
    let (_, lse) = softmax(&ev.u, beta);
    phi.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() + lse
}

/// Result of the dual solve.
pub struct DualSolution {
    /// Primal allocation, row-major, before feasibility repair.
    pub x: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Minimizes the smoothed dual with inverse temperature raised up to `beta_final`.
///
/// In the final stage `accept` sees each primal candidate and its multipliers
/// and can stop the iteration early.
pub fn solve_dual(
    phi: &[f64],
    levels: &[f64],
    cost: &[f64],
    beta_final: f64,
    mu0: Vec<f64>,
    stages: usize,
    mut accept: impl FnMut(&[f64], &[f64]) -> bool,
) -> DualSolution {
    let k = phi.len();
    let cols = k + 1;
    let rows = levels.len();
    let mut mu = mu0;
    for stage in 0..stages {
        let beta = beta_final * 10f64.powi(stage as i32 + 1 - stages as i32);
        let last = stage + 1 == stages;
        let tol = if last { 1e-13 } else { 1e-6 };
        for _ in 0..200 {
            let ev = rows_at(&mu, levels, cost, cols);
            let (pi, lse) = softmax(&ev.u, beta);
            let h = phi.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() + lse;
            if last {
                let x = primal(&ev.d, &pi, levels, cols);
                if accept(&mu, &x) {
                    return DualSolution { x, mu };
                }
            }

            // ybar_j = sum_i pi_i d_ij / r_i, the column sums of the primal.
            let active: Vec<usize> = (0..rows).filter(|&i| pi[i] > 1e-18).collect();
            let mut ybar = vec![0.0; k];
            for &i in &active {
                let w = pi[i] / levels[i];
                for j in 0..k {
                    ybar[j] += w * ev.d[i * cols + j + 1];
                }
            }
            let grad = DVector::from_iterator(k, (0..k).map(|j| phi[j] - ybar[j]));
            let mut hess = DMatrix::from_diagonal(&DVector::from_vec(ybar.clone()));
            let mut y = vec![0.0; k];
            for &i in &active {
                let r = levels[i];
                for j in 0..k {
                    y[j] = ev.d[i * cols + j + 1] / r;
                }
                let p = pi[i];
                for a in 0..k {
                    let ya = y[a];
                    let ca = ya - ybar[a];
                    for b in 0..=a {
                        let v = p * (beta * ca * (y[b] - ybar[b]) - r * ya * y[b]);
                        hess[(a, b)] += v;
                    }
                }
            }
            for a in 0..k {
                for b in 0..a {
                    hess[(b, a)] = hess[(a, b)];
                }
            }
            let mut step = newton_step(&hess, &grad);
            let longest = step.amax();
            if longest > MAX_STEP {
                step *= MAX_STEP / longest;
            }
            let slope = grad.dot(&step);
            if -slope <= tol * (1.0 + h.abs()) {
                break;
            }
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = mu.iter().zip(step.iter()).map(|(m, s)| m + t * s).collect();
                let ht = smoothed(&trial, beta, phi, levels, cost, cols);
                if ht <= h + 0.25 * t * slope {
                    mu = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
    }
    let ev = rows_at(&mu, levels, cost, cols);
    let (pi, _) = softmax(&ev.u, beta_final);
    DualSolution {
        x: primal(&ev.d, &pi, levels, cols),
        mu,
    }
}

/// `X_ij = pi_i d_ij / r_i`.
fn primal(d: &[f64], pi: &[f64], levels: &[f64], cols: usize) -> Vec<f64> {
    let mut x = d.to_vec();
    for (i, (&p, &r)) in pi.iter().zip(levels).enumerate() {
        let w = p / r;
        for v in &mut x[i * cols..(i + 1) * cols] {
            *v *= w;
        }
    }
    x
}

fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let scale = hess.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let mut ridge = 0.0;
    for _ in 0..20 {
        let mut h = hess.clone();
        for a in 0..h.nrows() {
            h[(a, a)] += ridge;
        }
        if let Some(ch) = h.cholesky() {
            let s = -ch.solve(grad);
            if s.iter().all(|v| v.is_finite()) {
                return s;
            }
        }
        ridge = if ridge == 0.0 { scale * 1e-12 } else { ridge * 100.0 };
    }
    -grad / scale
}
