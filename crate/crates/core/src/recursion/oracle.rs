use crate::error::{Error, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::SequenceModel;

/// Largest number of adapted strategies [`strategy_oracle`] will enumerate.
pub const DEFAULT_STRATEGY_CAP: u64 = 1_000_000;

/// Number of adapted mean strategies on an `m`-point grid over `n` steps:
/// one mean choice per noise history, `Π_i m_i^{|Z_1|···|Z_{i-1}|}`.
/// Saturates at `u64::MAX`.
pub fn strategy_count(model: &SequenceModel, n: usize, mean_points: usize) -> Result<u64> {
    let steps = model.steps(n)?;
    let mut histories: u64 = 1;
    let mut total: u64 = 1;
    for step in &steps {
        let m = step.mean_grid(mean_points).len() as u64;
        for _ in 0..histories {
            total = total.saturating_mul(m);
        }
        histories = histories.saturating_mul(step.noise.len() as u64);
        if total == u64::MAX {
            break;
        }
    }
    Ok(total)
}

/// Brute-force `E[φ(S_n/n)]` restricted to an `m`-point mean grid: every
/// adapted strategy (a mean for each step chosen from the noise observed so
/// far) is enumerated, its classical expectation computed by walking the
/// full outcome tree, and the largest one returned.
///
/// Independent of the backward recursion, so it serves as its oracle.
pub fn strategy_oracle(model: &SequenceModel, n: usize, mean_points: usize, phi: &LipschitzFn) -> Result<f64> {
    if n == 0 {
        return Err(Error::Input("horizon n must be at least 1".into()));
    }
    if mean_points == 0 {
        return Err(Error::Input("mean_points must be at least 1".into()));
    }
    let count = strategy_count(model, n, mean_points)?;
    if count > DEFAULT_STRATEGY_CAP {
        return Err(Error::Resource(format!(
            "{count} strategies exceed the enumeration cap {DEFAULT_STRATEGY_CAP}"
        )));
    }
    let steps = model.steps(n)?;
    let grids: Vec<Vec<f64>> = steps.iter().map(|s| s.mean_grid(mean_points)).collect();
    // Decision node for step i and history index k sits at offsets[i] + k.
    let mut offsets = Vec::with_capacity(n);
    let mut histories = 1usize;
    let mut decisions = 0usize;
    for step in &steps {
        offsets.push(decisions);
        decisions += histories;
        histories *= step.noise.len();
    }
    let radix: Vec<usize> = (0..n)
        .flat_map(|i| {
            let count = if i + 1 < n { offsets[i + 1] - offsets[i] } else { decisions - offsets[i] };
            std::iter::repeat_n(grids[i].len(), count)
        })
        .collect();

    struct Walk<'a> {
        steps: &'a [crate::models::StepModel],
        grids: &'a [Vec<f64>],
        offsets: &'a [usize],
        digits: &'a [usize],
        phi: &'a LipschitzFn,
        n: f64,
    }
    impl Walk<'_> {
        fn expect(&self, depth: usize, history: usize, sum: f64) -> f64 {
            if depth == self.steps.len() {
                return self.phi.eval(sum / self.n);
            }
            let mu = self.grids[depth][self.digits[self.offsets[depth] + history]];
            let noise = &self.steps[depth].noise;
            noise
                .iter()
                .enumerate()
                .map(|(j, (z, p))| p * self.expect(depth + 1, history * noise.len() + j, sum + mu + z))
                .sum()
        }
    }

    let mut digits = vec![0usize; decisions];
    let mut best = f64::NEG_INFINITY;
    loop {
        let walk = Walk { steps: &steps, grids: &grids, offsets: &offsets, digits: &digits, phi, n: n as f64 };
        let v = walk.expect(0, 0, 0.0);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("strategy expectation {v} is not finite")));
        }
        best = best.max(v);
        // Mixed-radix increment.
        let mut pos = 0;
        loop {
            if pos == decisions {
                return Ok(best);
            }
            digits[pos] += 1;
            if digits[pos] < radix[pos] {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_engine::FiniteDistribution;
    use crate::models::StepModel;

    fn model(lo: f64, hi: f64, noise: FiniteDistribution) -> SequenceModel {
        SequenceModel::constant(StepModel::new(lo, hi, noise).unwrap(), 0.0, 100.0).unwrap()
    }

    #[test]
    fn counts_strategies_per_history() {
        let m = model(0.0, 1.0, FiniteDistribution::symmetric_pair(1.0).unwrap());
        // Step 1: one history; step 2: two; step 3: four.
        assert_eq!(strategy_count(&m, 1, 2).unwrap(), 2);
        assert_eq!(strategy_count(&m, 2, 2).unwrap(), 8);
        assert_eq!(strategy_count(&m, 3, 3).unwrap(), 3u64.pow(7));
        assert_eq!(strategy_count(&m, 40, 3).unwrap(), u64::MAX);
    }

    #[test]
    fn two_step_quadratic_by_hand() {
        // Means in {0, 1}, noise ±1, φ(y) = -(y-1)² on y = S/2.
        // Best adapted play: μ₁ = 1; after an up move μ₂ = 0 (y ∈ {1.5, 0.5}),
        // after a down move μ₂ = 1 (y ∈ {1, 0}): (-0.25 - 0.5)/2 = -0.375.
        let m = model(0.0, 1.0, FiniteDistribution::symmetric_pair(1.0).unwrap());
        let phi = LipschitzFn::new("quad", 8.0, |y: f64| -(y - 1.0) * (y - 1.0)).unwrap();
        let v = strategy_oracle(&m, 2, 2, &phi).unwrap();
        let mut by_hand = f64::NEG_INFINITY;
        for mu1 in [0.0, 1.0] {
            for mu_up in [0.0, 1.0] {
                for mu_down in [0.0, 1.0] {
                    let paths = [
                        mu1 + 1.0 + mu_up + 1.0,
                        mu1 + 1.0 + mu_up - 1.0,
                        mu1 - 1.0 + mu_down + 1.0,
                        mu1 - 1.0 + mu_down - 1.0,
                    ];
                    let e: f64 = paths.iter().map(|s| -(s / 2.0 - 1.0) * (s / 2.0 - 1.0)).sum::<f64>() / 4.0;
                    by_hand = by_hand.max(e);
                }
            }
        }
        assert_eq!(v, by_hand);
        assert_eq!(v, -0.375);
    }

    #[test]
    fn cap_is_enforced() {
        let m = model(0.0, 1.0, FiniteDistribution::new(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.25]).unwrap());
        let err = strategy_oracle(&m, 4, 3, &LipschitzFn::linear(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }
}
