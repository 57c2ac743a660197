mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sublin_core::finite_engine::{Event, FiniteDistribution, MeasureFamily, RandomVariable};
use sublin_core::fixtures::family_fixture;

fn family_and_variables(seed: u64) -> (MeasureFamily, Vec<RandomVariable>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let family = common::family(&mut rng, 6, 5);
    let k = family.num_outcomes();
    let vars = (0..4).map(|_| common::random_variable(&mut rng, k)).collect();
    (family, vars)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn upper_expectation_is_sublinear(seed in any::<u64>(), lambda in 0.0f64..5.0, c in -3.0f64..3.0) {
        let (family, vars) = family_and_variables(seed);
        let (x, y) = (&vars[0], &vars[1]);
        let ex = family.upper_expectation(x).unwrap();
        let ey = family.upper_expectation(y).unwrap();
        let sum = RandomVariable::new(x.values().iter().zip(y.values()).map(|(a, b)| a + b).collect());
        prop_assert!(family.upper_expectation(&sum).unwrap() <= ex + ey + 1e-12);
        prop_assert!((family.upper_expectation(&x.scale(lambda)).unwrap() - lambda * ex).abs() <= 1e-12);
        let shifted = x.map(|v| v + c);
        prop_assert!((family.upper_expectation(&shifted).unwrap() - (ex + c)).abs() <= 1e-12);
        let dominated = x.min(y);
        prop_assert!(family.upper_expectation(&dominated).unwrap() <= ex.min(ey) + 1e-12);
    }

    #[test]
    fn lower_expectation_is_the_conjugate(seed in any::<u64>()) {
        let (family, vars) = family_and_variables(seed);
        for x in &vars {
            let lower = family.lower_expectation(x).unwrap();
            prop_assert!((lower + family.upper_expectation(&x.neg()).unwrap()).abs() <= 1e-12);
            prop_assert!(lower <= family.upper_expectation(x).unwrap() + 1e-12);
        }
    }

    #[test]
    fn capacities_are_dual_and_monotone(seed in any::<u64>(), bits in any::<u32>(), extra in any::<u32>()) {
        let (family, _) = family_and_variables(seed);
        let k = family.num_outcomes();
        let a = Event::from_bits(k, bits);
        let b = a.union(&Event::from_bits(k, extra));
        let ca = family.capacity(&a).unwrap();
        let cb = family.capacity(&b).unwrap();
        let cc = family.capacity(&a.complement()).unwrap();
        prop_assert!((ca.upper + cc.lower - 1.0).abs() <= 1e-12);
        prop_assert!(ca.lower <= ca.upper + 1e-12);
        prop_assert!(ca.upper <= cb.upper + 1e-12);
        prop_assert!(ca.lower <= cb.lower + 1e-12);
    }

    #[test]
    fn axiom_checker_accepts_every_family(seed in any::<u64>()) {
        let (family, vars) = family_and_variables(seed);
        let report = family.check_axioms(&vars);
        prop_assert!(report.passed(), "{:?}", report.violations);
        prop_assert!(family.check_capacity_axioms().unwrap().passed());
    }

    #[test]
    fn nested_supremum_matches_extension(seed in any::<u64>(), w in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = common::family(&mut rng, 4, 3);
        let k = family.num_outcomes();
        let x = common::random_variable(&mut rng, k);
        let step: Vec<FiniteDistribution> = (0..2).map(|_| common::zero_mean_noise(&mut rng, 2)).collect();
        let ext = family.extend_independent(&x, &step, 10_000).unwrap();
        // φ(x, y) = max(x + y, w·y): not separable, so the order of the sups matters.
        let phi = |a: f64, b: f64| (a + b).max(w * b);
        let joint = ext.family.upper_expectation(&ext.variable(phi)).unwrap();
        let inner = x.map(|a| step.iter().map(|d| d.expect(|b| phi(a, b))).fold(f64::NEG_INFINITY, f64::max));
        let nested = family.upper_expectation(&inner).unwrap();
        prop_assert!((joint - nested).abs() <= 1e-12, "joint {joint} nested {nested}");
    }
}

#[test]
fn singleton_family_is_linear() {
    let family = MeasureFamily::unlabelled(vec![vec![0.2, 0.3, 0.5]]).unwrap();
    let x = RandomVariable::new(vec![1.0, -2.0, 4.0]);
    let expected = 0.2 - 0.6 + 2.0;
    assert!((family.upper_expectation(&x).unwrap() - expected).abs() < 1e-15);
    assert!((family.lower_expectation(&x).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn two_point_fixture_capacities() {
    let family = family_fixture("two_point_ambiguity").unwrap();
    let first = family.capacity(&Event::from_indices(2, &[0]).unwrap()).unwrap();
    assert!((first.upper - 0.6).abs() < 1e-15);
    assert!((first.lower - 0.3).abs() < 1e-15);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let family = family_fixture("die_band").unwrap();
    assert!(family.upper_expectation(&RandomVariable::new(vec![1.0, 2.0])).is_err());
}

#[test]
fn markov_equality_on_two_level_variable() {
    let family = family_fixture("die_band").unwrap();
    let x = RandomVariable::new(vec![0.0, 0.0, 2.0, -2.0, 0.0, 2.0]);
    let r = family.markov_bound_check(&x, 2.0, 2).unwrap();
    assert!(r.report.passed());
    assert!(r.is_tight());
}
