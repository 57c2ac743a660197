mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sublin_core::finite_engine::FiniteDistribution;
use sublin_core::fixtures::sequence_fixture;
use sublin_core::lipschitz::LipschitzFn;
use sublin_core::models::{interval_sup, SequenceModel, StepModel, StepSource};
use sublin_core::recursion::{
    lower_value, mean_event_capacity, sandwich_functions, strategy_count, strategy_oracle, upper_value, GridMode,
    MeanEvent, RecursionConfig, DEFAULT_STRATEGY_CAP,
};
use sublin_core::Error;

fn widened(model: &SequenceModel, n: usize, by: f64) -> SequenceModel {
    let steps: Vec<StepModel> = model
        .steps(n)
        .unwrap()
        .into_iter()
        .map(|s| StepModel::new(s.mean_lo - by, s.mean_hi + by, s.noise).unwrap())
        .collect();
    SequenceModel::new(StepSource::Explicit(steps), model.mu_lo - by, model.mu_hi + by, 10.0, 1e6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_recursion_matches_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=3);
        let model = common::explicit_model(&mut rng, n, 3);
        prop_assume!(strategy_count(&model, n, m).unwrap() <= DEFAULT_STRATEGY_CAP);
        let phi = common::test_function(&mut rng);
        let r = upper_value(&model, n, &phi, &RecursionConfig::exact(m)).unwrap();
        let oracle = strategy_oracle(&model, n, m, &phi).unwrap();
        prop_assert!((r.value - oracle).abs() <= 1e-10, "{} vs {oracle}", r.value);
    }

    #[test]
    fn lower_never_exceeds_upper(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let model = common::explicit_model(&mut rng, n, 3);
        let phi = common::test_function(&mut rng);
        let config = RecursionConfig::exact(3);
        let up = upper_value(&model, n, &phi, &config).unwrap();
        let lo = lower_value(&model, n, &phi, &config).unwrap();
        prop_assert!(lo.value <= up.value + 1e-12);
    }

    #[test]
    fn more_ambiguity_raises_the_upper_value(seed in any::<u64>(), by in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let model = common::explicit_model(&mut rng, n, 2);
        let wide = widened(&model, n, by);
        let phi = common::test_function(&mut rng);
        let config = RecursionConfig::exact(9);
        let narrow = upper_value(&model, n, &phi, &config).unwrap();
        let broad = upper_value(&wide, n, &phi, &config).unwrap();
        // Grid values under-approximate; the error bound closes the gap.
        prop_assert!(broad.value + broad.error_bound >= narrow.value - 1e-12);
    }

    #[test]
    fn shifting_means_shifts_the_argument(seed in any::<u64>(), c in -1.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=4);
        let model = common::explicit_model(&mut rng, n, 2);
        let phi = common::test_function(&mut rng);
        let config = RecursionConfig::exact(4);
        let moved = upper_value(&model.shifted(c).unwrap(), n, &phi, &config).unwrap();
        let pulled = upper_value(&model, n, &phi.shifted(-c), &config).unwrap();
        prop_assert!((moved.value - pulled.value).abs() <= 1e-9, "{} vs {}", moved.value, pulled.value);
    }

    #[test]
    fn single_noiseless_step_is_the_interval_sup(lo in -2.0f64..1.0, width in 0.0f64..2.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = common::test_function(&mut rng);
        let step = StepModel::new(lo, lo + width, FiniteDistribution::point_mass(0.0)).unwrap();
        let model = SequenceModel::constant(step, 0.0, 10.0).unwrap();
        let r = upper_value(&model, 1, &phi, &RecursionConfig::exact(65)).unwrap();
        let sup = interval_sup(lo, lo + width, &phi).unwrap();
        prop_assert!(r.value <= sup.value + sup.certified_gap + 1e-12);
        prop_assert!(r.value + r.error_bound >= sup.value - 1e-12);
    }

    #[test]
    fn sandwich_ramps_bracket_the_indicator(a in -2.0f64..2.0, len in 0.1f64..2.0, delta in 0.01f64..0.5, y in -4.0f64..4.0) {
        for event in [MeanEvent::AtMost { a }, MeanEvent::AtLeast { a }, MeanEvent::Between { lo: a, hi: a + len }] {
            let (f, g) = sandwich_functions(event, delta).unwrap();
            let inside = match event {
                MeanEvent::AtMost { a } => y <= a,
                MeanEvent::AtLeast { a } => y >= a,
                MeanEvent::Between { lo, hi } => lo < y && y < hi,
            };
            let ind = if inside { 1.0 } else { 0.0 };
            prop_assert!(f.eval(y) <= ind && ind <= g.eval(y), "{event:?} at {y}: {} {ind} {}", f.eval(y), g.eval(y));
            prop_assert!(f.lipschitz() <= 1.0 / delta + 1e-12 && g.lipschitz() <= 1.0 / delta + 1e-12);
        }
    }
}

#[test]
fn capacity_brackets_are_ordered() {
    let model = sequence_fixture("iid_peng").unwrap();
    let config = RecursionConfig::lattice(1.0 / 256.0);
    for event in [MeanEvent::AtMost { a: -1.1 }, MeanEvent::Between { lo: -0.5, hi: 0.5 }, MeanEvent::AtLeast { a: 0.9 }] {
        let b = mean_event_capacity(&model, 24, event, 0.1, &config).unwrap();
        assert!(b.upper_lo <= b.upper_hi, "{b:?}");
        assert!(b.lower_lo <= b.lower_hi, "{b:?}");
        assert!(b.lower_lo <= b.upper_hi + 1e-12, "{b:?}");
        for v in [b.upper_lo, b.upper_hi, b.lower_lo, b.lower_hi] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn grid_modes_agree_within_their_bounds() {
    let model = sequence_fixture("alternating_sqrt").unwrap();
    let phi = LipschitzFn::bump(0.3, 1.0).unwrap();
    let n = 12;
    let configs = [
        RecursionConfig::default(),
        RecursionConfig::lattice(1.0 / 1024.0),
        RecursionConfig { grid: GridMode::Uniform { nodes: 2048, domain: None, clamp: false }, ..RecursionConfig::default() },
    ];
    let results: Vec<_> = configs.iter().map(|c| upper_value(&model, n, &phi, c).unwrap()).collect();
    for a in &results {
        for b in &results {
            assert!((a.value - b.value).abs() <= a.error_bound + b.error_bound + 1e-9, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn degenerate_fixture_is_exact() {
    let model = sequence_fixture("degenerate").unwrap();
    let phi = LipschitzFn::bump(0.0, 1.0).unwrap();
    let r = upper_value(&model, 50, &phi, &RecursionConfig::default()).unwrap();
    assert!((r.value - phi.eval(0.0)).abs() < 1e-12);
    assert!(r.error_bound < 1e-12);
}

#[test]
fn exact_mode_reports_oversized_sets() {
    let model = sequence_fixture("alternating_sqrt").unwrap();
    let phi = LipschitzFn::neg_abs();
    let config = RecursionConfig { max_exact_points: 100, ..RecursionConfig::exact(33) };
    assert!(matches!(upper_value(&model, 20, &phi, &config), Err(Error::Resource(_))));
}

#[test]
fn zero_horizon_is_rejected() {
    let model = sequence_fixture("iid_peng").unwrap();
    assert!(matches!(
        upper_value(&model, 0, &LipschitzFn::neg_abs(), &RecursionConfig::default()),
        Err(Error::Input(_))
    ));
}
