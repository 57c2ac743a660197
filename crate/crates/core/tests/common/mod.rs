//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sublin_core::finite_engine::{FiniteDistribution, MeasureFamily, RandomVariable};
use sublin_core::lipschitz::LipschitzFn;
use sublin_core::models::{SequenceModel, StepModel, StepSource};

/// A probability vector of length `k`; roughly one entry in four is zero.
pub fn probability_vector(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..k)
            .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.05..1.0) })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|r| r / total).collect();
        }
    }
}

pub fn family(rng: &mut ChaCha8Rng, max_outcomes: usize, max_measures: usize) -> MeasureFamily {
    let k = rng.gen_range(1..=max_outcomes);
    let m = rng.gen_range(1..=max_measures);
    MeasureFamily::unlabelled((0..m).map(|_| probability_vector(rng, k)).collect()).expect("valid family")
}

/// Values drawn from a small integer set (so ties occur) or uniformly.
pub fn random_variable(rng: &mut ChaCha8Rng, k: usize) -> RandomVariable {
    let integer = rng.gen_bool(0.5);
    RandomVariable::new(
        (0..k)
            .map(|_| if integer { rng.gen_range(-3..=3) as f64 } else { rng.gen_range(-3.0..3.0) })
            .collect(),
    )
}

/// A zero-mean law on `size` distinct atoms.
pub fn zero_mean_noise(rng: &mut ChaCha8Rng, size: usize) -> FiniteDistribution {
    if size == 1 {
        return FiniteDistribution::point_mass(0.0);
    }
    loop {
        let mut support: Vec<f64> = (0..size).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let probs: Vec<f64> = {
            let raw: Vec<f64> = (0..size).map(|_| rng.gen_range(0.1..1.0)).collect();
            let t: f64 = raw.iter().sum();
            raw.iter().map(|r| r / t).collect()
        };
        let mean: f64 = support.iter().zip(&probs).map(|(z, p)| z * p).sum();
        support.iter_mut().for_each(|z| *z -= mean);
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] > 1e-3) {
            if let Ok(d) = FiniteDistribution::new(support, probs) {
                return d;
            }
        }
    }
}

pub fn step(rng: &mut ChaCha8Rng, max_support: usize) -> StepModel {
    let lo = rng.gen_range(-1.5..1.0);
    let hi = lo + rng.gen_range(0.0..1.5);
    let size = rng.gen_range(1..=max_support);
    StepModel::new(lo, hi, zero_mean_noise(rng, size)).expect("valid step")
}

/// An explicit model with `n` independently drawn steps.
pub fn explicit_model(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> SequenceModel {
    let steps: Vec<StepModel> = (0..n).map(|_| step(rng, max_support)).collect();
    let lo = steps.iter().map(|s| s.mean_lo).fold(f64::INFINITY, f64::min);
    let hi = steps.iter().map(|s| s.mean_hi).fold(f64::NEG_INFINITY, f64::max);
    SequenceModel::new(StepSource::Explicit(steps), lo, hi, 10.0, 1e6).expect("valid model")
}

/// One of the bundled test-function shapes with random parameters.
pub fn test_function(rng: &mut ChaCha8Rng) -> LipschitzFn {
    match rng.gen_range(0..4) {
        0 => LipschitzFn::bump(rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.5)).expect("positive width"),
        1 => LipschitzFn::neg_abs().shifted(rng.gen_range(-1.0..1.0)),
        2 => LipschitzFn::clipped_quadratic(rng.gen_range(0.2..2.0))
            .expect("positive cap")
            .shifted(rng.gen_range(-0.5..0.5)),
        _ => LipschitzFn::linear(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)),
    }
}
