use ndarray::Array2;
use pmlkit::allocation::{column_freqs, cost_matrix, is_frac_feasible, log_g, log_g_with_cost, mass};
use pmlkit::solver::{linear_max, solve_frac, sparsify};
use pmlkit::{build_grid, Grid, Profile, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Small feasible instance: up to 3 levels and 2 distinct frequencies.
fn tiny_instance() -> impl Strategy<Value = (Profile, Grid)> {
    (
        proptest::collection::btree_map(1u64..5, 1u64..3, 1..=2),
        proptest::collection::btree_set(1u32..40, 1..=3),
    )
        .prop_filter_map("feasible", |(pairs, lv)| {
            let pairs: Vec<(u64, u64)> = pairs.into_iter().collect();
            let profile = Profile::from_pairs(&pairs).ok()?;
            let levels: Vec<f64> = lv.into_iter().map(|v| v as f64 / 40.0).collect();
            (profile.distinct() as f64 * levels[0] <= 1.0).then_some(())?;
            Some((profile, Grid::from_levels(levels).ok()?))
        })
}

/// Random feasible allocations: observed columns split at random across
/// rows, unseen mass a random fraction of what the mass budget allows.
fn scan_max(profile: &Profile, grid: &Grid, points: usize, seed: u64) -> f64 {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let lv = grid.levels();
    let freqs = column_freqs(profile);
    let phi = profile.counts();
    let cost = cost_matrix(lv, &freqs);
    let rows = lv.len();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..points {
        let mut x = Array2::<f64>::zeros((rows, freqs.len()));
        for (j, &c) in phi.iter().enumerate() {
            // Bias towards light rows so the mass budget holds more often.
            let w: Vec<f64> = (0..rows).map(|i| rng.random::<f64>().powi(1 + 2 * i as i32)).collect();
            let z: f64 = w.iter().sum();
            for i in 0..rows {
                x[[i, j + 1]] = c as f64 * w[i] / z;
            }
        }
        let used = mass(&x, lv);
        if used > 1.0 {
            continue;
        }
        let w: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
        let per_unit: f64 = w.iter().zip(lv).map(|(a, r)| a * r).sum();
        let t: f64 = rng.random::<f64>().sqrt();
        for i in 0..rows {
            x[[i, 0]] = t * (1.0 - used) * w[i] / per_unit;
        }
        best = best.max(log_g_with_cost(&x, &cost).unwrap());
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn certified_gap_covers_scan((profile, grid) in tiny_instance(), seed in 0u64..1000) {
        let sol = solve_frac(&profile, &grid, &SolverConfig::default()).unwrap();
        prop_assert!(is_frac_feasible(&sol.x, &sol.levels, &profile, 1e-9).unwrap());
        let scanned = scan_max(&profile, &grid, 10_000, seed);
        prop_assert!(scanned - sol.log_g <= sol.gap + 1e-6, "scan {scanned}, solver {} gap {}", sol.log_g, sol.gap);
    }

    #[test]
    fn history_is_monotone((profile, grid) in tiny_instance()) {
        let sol = solve_frac(&profile, &grid, &SolverConfig::default()).unwrap();
        for w in sol.history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!((sol.history.last().unwrap() - sol.log_g).abs() < 1e-12);
    }

    #[test]
    fn linear_max_is_feasible_and_beats_samples(
        (profile, grid) in tiny_instance(),
        g in proptest::collection::vec(-3.0f64..3.0, 9),
        seed in 0u64..1000,
    ) {
        let lv = grid.levels();
        let cols = profile.k() + 1;
        let grad: Vec<f64> = g.iter().copied().take(lv.len() * cols).collect();
        let phi: Vec<f64> = profile.counts().iter().map(|&c| c as f64).collect();
        let v = linear_max(&grad, lv, &phi).unwrap();
        let mut x = Array2::<f64>::zeros((lv.len(), cols));
        for &(i, j, val) in &v {
            x[[i, j]] += val;
        }
        prop_assert!(is_frac_feasible(&x, lv, &profile, 1e-9).unwrap());
        // Every observed column sits on one row, except at most one split column.
        let split = (1..cols).filter(|&j| x.column(j).iter().filter(|&&e| e > 0.0).count() > 1).count();
        prop_assert!(split <= 1);
        let value = |m: &Array2<f64>| m.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>();
        let best = value(&x);
        // Random feasible points never beat the maximizer.
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let r_min = lv[0];
        let cap = (1.0 - phi.iter().sum::<f64>() * r_min).max(0.0);
        for _ in 0..200 {
            let mut y = Array2::<f64>::zeros((lv.len(), cols));
            for j in 1..cols {
                let i = rng.random_range(0..lv.len());
                y[[i, j]] = phi[j - 1];
            }
            let used = mass(&y, lv);
            if used > 1.0 {
                continue;
            }
            let i = rng.random_range(0..lv.len());
            y[[i, 0]] = rng.random::<f64>() * ((1.0 - used) / lv[i]).min(cap / lv[i]);
            prop_assert!(value(&y) <= best + 1e-9);
        }
    }
}

#[test]
fn sparsify_keeps_constraints_and_objective() {
    let profile = Profile::from_pairs(&[(1, 30), (2, 10), (4, 3)]).unwrap();
    let grid = build_grid(profile.n(), 1.0 / 3.0).unwrap();
    let sol = solve_frac(&profile, &grid, &SolverConfig::default()).unwrap();
    let (xs, lv) = sparsify(&sol.x, &sol.levels, &sol.freqs).unwrap();
    assert!(xs.nrows() <= profile.k() + 1);
    assert!(is_frac_feasible(&xs, &lv, &profile, 1e-8).unwrap());
    let before = log_g(&sol.x, &sol.levels, &sol.freqs).unwrap();
    let after = log_g(&xs, &lv, &sol.freqs).unwrap();
    assert!(after >= before - 1e-9, "{after} < {before}");
}

#[test]
fn infeasible_grid_is_reported() {
    let profile = Profile::from_pairs(&[(1, 5)]).unwrap();
    let grid = Grid::from_levels(vec![0.5, 1.0]).unwrap();
    assert!(matches!(
        solve_frac(&profile, &grid, &SolverConfig::default()),
        Err(pmlkit::PmlError::Infeasible { .. })
    ));
}
