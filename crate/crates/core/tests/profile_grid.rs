use num_bigint::BigUint;
use pmlkit::{build_grid, round_distribution, Grid, Level, Profile, PseudoDistribution};
use proptest::prelude::*;

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * i)
}

/// `ln(n! / prod_j (m_j!)^phi_j)` in exact integer arithmetic.
fn big_log_c(p: &Profile) -> f64 {
    let mut den = BigUint::from(1u32);
    for e in p.entries() {
        for _ in 0..e.count {
            den *= factorial(e.freq);
        }
    }
    let c = factorial(p.n()) / den;
    c.to_string().parse::<f64>().unwrap().ln()
}

fn small_profile() -> impl Strategy<Value = Profile> {
    proptest::collection::vec(1u64..=6, 1..=8).prop_filter_map("n <= 20", |f| {
        let p = Profile::from_frequencies(f).ok()?;
        (p.n() <= 20).then_some(p)
    })
}

#[test]
fn log_c_phi_examples() {
    let p = Profile::from_pairs(&[(1, 2), (2, 1)]).unwrap();
    // 4! / (1! 1! 2!) = 12.
    assert!((p.log_c_phi() - 12f64.ln()).abs() < 1e-12);
    let single = Profile::from_pairs(&[(5, 1)]).unwrap();
    assert!(single.log_c_phi().abs() < 1e-12);
}

#[test]
fn grid_ratio_is_exact() {
    for &(n, alpha) in &[(10u64, 1.0 / 3.0), (100, 0.5), (7, 1.0)] {
        let g = build_grid(n, alpha).unwrap();
        let ratio = 1.0 + (n as f64).powf(-alpha);
        let lv = g.levels();
        assert_eq!(lv[0], 1.0 / (2.0 * (n * n) as f64));
        assert_eq!(*lv.last().unwrap(), 1.0);
        for w in lv[..lv.len() - 1].windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn log_c_phi_matches_big_integers(p in small_profile()) {
        let exact = big_log_c(&p);
        prop_assert!((p.log_c_phi() - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn profile_ignores_labels(tokens in proptest::collection::vec(0u8..6, 1..40), shift in 1u8..6) {
        let a = Profile::from_samples(tokens.iter().map(|t| t.to_string())).unwrap();
        let relabeled = tokens.iter().map(|t| format!("x{}", (t + shift) % 6));
        let b = Profile::from_samples(relabeled).unwrap();
        prop_assert_eq!(&a, &b);
        let total: u64 = a.entries().iter().map(|e| e.freq * e.count).sum();
        prop_assert_eq!(total, tokens.len() as u64);
        prop_assert_eq!(a.n(), tokens.len() as u64);
    }

    #[test]
    fn profile_json_round_trip(p in small_profile()) {
        prop_assert_eq!(Profile::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn floor_brackets_its_input(n in 2u64..200, alpha in 0.2f64..1.0, u in 0.0f64..1.0) {
        let g = build_grid(n, alpha).unwrap();
        let ratio = 1.0 + (n as f64).powf(-alpha);
        let x = g.min() * (1.0 / g.min()).powf(u);
        let f = g.floor(x).unwrap();
        prop_assert!(f <= x * (1.0 + 1e-12));
        let below_top = g.levels()[g.len() - 2];
        if x < below_top * ratio * (1.0 - 1e-12) {
            prop_assert!(x < f * ratio * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rounding_never_adds_mass(probs in proptest::collection::vec(0.01f64..1.0, 1..8), n in 2u64..50) {
        let z: f64 = probs.iter().sum();
        let d = PseudoDistribution::from_probs(&probs.iter().map(|p| p / z).collect::<Vec<_>>()).unwrap();
        let g: Grid = build_grid(n, 1.0 / 3.0).unwrap();
        if d.levels()[0].p < g.min() {
            return Ok(());
        }
        let r = round_distribution(&d, &g).unwrap();
        prop_assert!(r.total_mass() <= d.total_mass() + 1e-12);
        prop_assert_eq!(r.support(), d.support());
        prop_assert!(r.levels().iter().all(|l: &Level| g.levels().contains(&l.p)));
    }
}
