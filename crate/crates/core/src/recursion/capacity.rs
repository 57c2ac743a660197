use serde::{Deserialize, Serialize};

use super::{upper_value, RecursionConfig};
use crate::error::{input, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::SequenceModel;

/// An event about the running mean `S_n/n`. Endpoints may be infinite when
/// built in code; `Between` is the open interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeanEvent {
    AtMost { a: f64 },
    AtLeast { a: f64 },
    Between { lo: f64, hi: f64 },
}

/// The interval `[lo, hi]` (`inside`) or the closure of its complement.
#[derive(Debug, Clone, Copy)]
struct Region {
    lo: f64,
    hi: f64,
    inside: bool,
}

impl Region {
    fn of(event: MeanEvent) -> Result<Self> {
        let (lo, hi) = match event {
            MeanEvent::AtMost { a } => (f64::NEG_INFINITY, a),
            MeanEvent::AtLeast { a } => (a, f64::INFINITY),
            MeanEvent::Between { lo, hi } => (lo, hi),
        };
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return input(format!("event needs lo <= hi, got [{lo}, {hi}]"));
        }
        Ok(Self { lo, hi, inside: true })
    }

    fn complement(self) -> Self {
        Self { inside: !self.inside, ..self }
    }

    /// `(d(x, A), d(x, Aᶜ))`.
    fn distances(self, x: f64) -> (f64, f64) {
        let outside = (self.lo - x).max(x - self.hi).max(0.0);
        let depth = (x - self.lo).min(self.hi - x).max(0.0);
        if self.inside {
            (outside, depth)
        } else {
            (depth, outside)
        }
    }

    fn breakpoints(self, delta: f64) -> Vec<f64> {
        [self.lo, self.hi]
            .into_iter()
            .flat_map(|e| [e - delta, e, e + delta])
            .collect()
    }
}

/// Lipschitz ramps `f ≤ 1_A ≤ g` with constant `1/δ`:
/// `f(x) = min(1, d(x, Aᶜ)/δ)` and `g(x) = max(0, 1 - d(x, A)/δ)`.
pub fn sandwich_functions(event: MeanEvent, delta: f64) -> Result<(LipschitzFn, LipschitzFn)> {
    if !(delta > 0.0) || !delta.is_finite() {
        return input(format!("ramp width delta must be positive, got {delta}"));
    }
    ramps(Region::of(event)?, delta)
}

fn ramps(region: Region, delta: f64) -> Result<(LipschitzFn, LipschitzFn)> {
    let inner = LipschitzFn::new("inner ramp", 1.0 / delta, move |x| (region.distances(x).1 / delta).min(1.0))?
        .with_breakpoints(region.breakpoints(delta));
    let outer = LipschitzFn::new("outer ramp", 1.0 / delta, move |x| (1.0 - region.distances(x).0 / delta).max(0.0))?
        .with_breakpoints(region.breakpoints(delta));
    Ok((inner, outer))
}

/// Certified brackets for the upper and lower capacities of an event about
/// `S_n/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub n: usize,
    pub delta: f64,
    /// `V_lo ≤ V(S_n/n ∈ A) ≤ V_hi`.
    pub upper_lo: f64,
    pub upper_hi: f64,
    /// `v_lo ≤ v(S_n/n ∈ A) ≤ v_hi`.
    pub lower_lo: f64,
    pub lower_hi: f64,
    /// Largest recursion error bound among the four sandwich evaluations.
    pub error_bound: f64,
}

/// `(lo, hi)` with `lo ≤ V(A) ≤ hi` from `E[f] ≤ V(A) ≤ E[g]`.
fn upper_bracket(model: &SequenceModel, n: usize, region: Region, delta: f64, config: &RecursionConfig) -> Result<(f64, f64, f64)> {
    let (f, g) = ramps(region, delta)?;
    let (ef, eg) = rayon::join(|| upper_value(model, n, &f, config), || upper_value(model, n, &g, config));
    let (ef, eg) = (ef?, eg?);
    let lo = (ef.value - ef.error_bound).clamp(0.0, 1.0);
    let hi = (eg.value + eg.error_bound).clamp(0.0, 1.0);
    Ok((lo, hi, ef.error_bound.max(eg.error_bound)))
}

/// Brackets for `V(S_n/n ∈ A)` and `v(S_n/n ∈ A) = 1 - V(S_n/n ∈ Aᶜ)`,
/// obtained from the recursion applied to the `δ`-ramps around `A` and
/// around `Aᶜ`.
pub fn mean_event_capacity(
    model: &SequenceModel,
    n: usize,
    event: MeanEvent,
    delta: f64,
    config: &RecursionConfig,
) -> Result<CapacityBounds> {
    if !(delta > 0.0) || !delta.is_finite() {
        return input(format!("ramp width delta must be positive, got {delta}"));
    }
    let region = Region::of(event)?;
    let (inside, outside) = rayon::join(
        || upper_bracket(model, n, region, delta, config),
        || upper_bracket(model, n, region.complement(), delta, config),
    );
    let ((u_lo, u_hi, e1), (c_lo, c_hi, e2)) = (inside?, outside?);
    Ok(CapacityBounds {
        n,
        delta,
        upper_lo: u_lo,
        upper_hi: u_hi,
        lower_lo: 1.0 - c_hi,
        lower_hi: 1.0 - c_lo,
        error_bound: e1.max(e2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_engine::FiniteDistribution;
    use crate::models::StepModel;

    #[test]
    fn ramps_sandwich_the_indicator() {
        let (f, g) = sandwich_functions(MeanEvent::Between { lo: -1.0, hi: 0.5 }, 0.1).unwrap();
        for k in -300..=300 {
            let x = k as f64 / 100.0;
            let ind = if x > -1.0 && x < 0.5 { 1.0 } else { 0.0 };
            assert!(f.eval(x) <= ind && ind <= g.eval(x), "x = {x}");
        }
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(g.eval(0.65), 0.0);
        assert!((g.eval(0.55) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn whole_line_has_full_capacity() {
        let step = StepModel::new(-1.0, 1.0, FiniteDistribution::symmetric_pair(1.0).unwrap()).unwrap();
        let model = SequenceModel::constant(step, 0.0, 10.0).unwrap();
        let event = MeanEvent::Between { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
        let b = mean_event_capacity(&model, 5, event, 0.1, &RecursionConfig::lattice(0.01)).unwrap();
        assert_eq!((b.upper_hi, b.lower_hi), (1.0, 1.0));
        assert!(b.upper_lo >= 1.0 - b.error_bound && b.lower_lo >= 1.0 - b.error_bound);
    }

    #[test]
    fn brackets_are_ordered() {
        let step = StepModel::new(-1.0, 1.0, FiniteDistribution::symmetric_pair(1.0).unwrap()).unwrap();
        let model = SequenceModel::constant(step, 0.0, 10.0).unwrap();
        let b = mean_event_capacity(&model, 16, MeanEvent::AtMost { a: -0.5 }, 0.1, &RecursionConfig::lattice(1.0 / 512.0))
            .unwrap();
        assert!(b.upper_lo <= b.upper_hi);
        assert!(b.lower_lo <= b.lower_hi);
        assert!(b.lower_lo <= b.upper_hi + 1e-12);
        // The mean can sit at -1, so the upper capacity is large; it can sit
        // at +1, so the lower capacity is small.
        assert!(b.upper_lo > 0.5);
        assert!(b.lower_hi < 0.5);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(sandwich_functions(MeanEvent::AtMost { a: 0.0 }, 0.0).is_err());
        assert!(sandwich_functions(MeanEvent::Between { lo: 1.0, hi: 0.0 }, 0.1).is_err());
    }
}
