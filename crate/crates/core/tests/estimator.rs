use pmlkit::estimator::{approximate_pml, estimate};
use pmlkit::properties::{entropy, sorted_l1, support_size, Property};
use pmlkit::sampling::{sample_profile, Family};
use pmlkit::{build_grid, scale_grid, Level, Profile, PseudoDistribution, RunConfig, SolverConfig};
use proptest::prelude::*;

fn dist(probs: &[f64]) -> PseudoDistribution {
    let z: f64 = probs.iter().sum();
    PseudoDistribution::from_probs(&probs.iter().map(|p| p / z).collect::<Vec<_>>()).unwrap()
}

#[test]
fn pipeline_conserves_observed_columns() {
    let profile = sample_profile(&Family::Zipf { k: 30, s: 1.0 }.probs().unwrap(), 300, 3).unwrap();
    let base = build_grid(profile.n(), 1.0 / 3.0).unwrap();
    for c in [1.0, 3.0, 20.0] {
        let grid = scale_grid(&base, c).unwrap();
        let res = approximate_pml(&profile, &grid, &SolverConfig::default()).unwrap();
        for (j, phi) in profile.counts().into_iter().enumerate() {
            assert!((res.x_final.column(j + 1).sum() - phi as f64).abs() < 1e-9);
        }
        for row in res.x_final.rows() {
            let s = row.sum();
            assert!((s - s.round()).abs() < 1e-6);
        }
        assert!(res.dist.total_mass() <= 1.0 + 1e-9);
        assert!(res.log_objective <= res.frac_log_objective + 1e-9);
    }
}

#[test]
fn winner_has_the_best_objective() {
    let profile = Profile::from_pairs(&[(1, 6), (2, 3), (3, 1)]).unwrap();
    let est = estimate(&profile, &RunConfig::default()).unwrap();
    assert!(est.scores.iter().all(|s| s.log_objective <= est.log_objective));
    let first = est.scores.iter().find(|s| s.log_objective == est.log_objective).unwrap();
    assert_eq!(first.scale, est.scale);
    assert!(est.dist.total_mass() <= 1.0 + 1e-9);
}

#[test]
fn estimate_is_deterministic() {
    let profile = sample_profile(&Family::Uniform { k: 40 }.probs().unwrap(), 400, 11).unwrap();
    let cfg = RunConfig::default();
    let a = estimate(&profile, &cfg).unwrap();
    let b = estimate(&profile, &cfg).unwrap();
    assert_eq!(a.dist, b.dist);
    assert_eq!(a.scale, b.scale);
}

#[test]
fn resolving_levels_still_yields_a_distribution() {
    let profile = Profile::from_pairs(&[(1, 4), (2, 2)]).unwrap();
    let cfg = RunConfig { resolve_levels: true, ..RunConfig::default() };
    let est = estimate(&profile, &cfg).unwrap();
    assert!(est.dist.support() >= profile.distinct());
}

#[test]
fn invalid_config_is_rejected() {
    let profile = Profile::from_pairs(&[(1, 2)]).unwrap();
    let cfg = RunConfig { alpha: 0.0, ..RunConfig::default() };
    assert!(estimate(&profile, &cfg).is_err());
}

proptest! {
    #[test]
    fn sorted_l1_triangle(
        a in proptest::collection::vec(0.01f64..1.0, 1..6),
        b in proptest::collection::vec(0.01f64..1.0, 1..6),
        c in proptest::collection::vec(0.01f64..1.0, 1..6),
    ) {
        let (a, b, c) = (dist(&a), dist(&b), dist(&c));
        prop_assert!(sorted_l1(&a, &c) <= sorted_l1(&a, &b) + sorted_l1(&b, &c) + 1e-12);
        prop_assert!(sorted_l1(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn entropy_at_most_log_support(p in proptest::collection::vec(0.0f64..1.0, 1..10)) {
        prop_assume!(p.iter().any(|&v| v > 0.0));
        let d = dist(&p);
        prop_assert!(entropy(&d).unwrap() <= (support_size(&d, 0.0) as f64).ln() + 1e-12);
    }

    #[test]
    fn properties_ignore_order(p in proptest::collection::vec(0.01f64..1.0, 2..8), rot in 1usize..8) {
        let mut q = p.clone();
        q.rotate_left(rot % p.len());
        for spec in ["entropy", "support_size", "support_coverage:50", "distance_to_uniformity:10"] {
            let prop = Property::parse(spec, 10).unwrap();
            let a = prop.evaluate(&dist(&p)).unwrap();
            let b = prop.evaluate(&dist(&q)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn property_report_shape() {
    let d = PseudoDistribution::new([Level { p: 0.25, count: 4 }]).unwrap();
    let v = Property::parse("support_coverage:8", 1).unwrap().report(&d).unwrap();
    let json = serde_json::to_value(&v).unwrap();
    assert_eq!(json["property"], "support_coverage");
    assert_eq!(json["params"]["m"], 8);
}
