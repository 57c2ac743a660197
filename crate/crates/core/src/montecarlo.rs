//! Path simulation of the ambiguous sequence under explicit nature policies.
//!
//! A policy picks the mean of every step from its admissible interval,
//! which fixes one probability measure among those the sublinear
//! expectation ranges over. Simulation can therefore witness that extreme
//! and intermediate behaviours are attainable; it never certifies a
//! supremum (that is the recursion's job).
//!
//! Randomness follows a counter-based contract: path `p` of a batch with
//! seed `s` reads the ChaCha8 stream `p` under key `s`, and step `i`
//! consumes words `4(i−1) .. 4i` (one `f64` for the noise, one for the
//! policy). Paths are generated independently and assembled by index, so
//! results do not depend on thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::{SequenceModel, StepModel};

/// Largest number of noise histories [`enumerate_paths`] will visit.
pub const ENUMERATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RandomLaw {
    /// Uniform on `[μ̲ᵢ, μ̄ᵢ]`.
    Uniform,
    /// `μ̄ᵢ` with probability `p_upper`, else `μ̲ᵢ`.
    Endpoints { p_upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Policy {
    Upper,
    Lower,
    /// The fixed mean `mu`, clamped into each interval.
    Constant { mu: f64 },
    /// `μ̄ᵢ` while the running mean is below `b`, `μ̲ᵢ` otherwise.
    Target { b: f64 },
    /// `μ̲ᵢ + θ·(μ̄ᵢ − μ̲ᵢ)` with `θ` cycling through `schedule`.
    Periodic { schedule: Vec<f64> },
    /// A fresh draw from `law` at every step.
    Randomized { law: RandomLaw },
}

impl Policy {
    /// The policies every simulation experiment runs by default.
    pub fn bundled() -> Vec<(&'static str, Policy)> {
        vec![
            ("upper", Policy::Upper),
            ("lower", Policy::Lower),
            ("constant_0", Policy::Constant { mu: 0.0 }),
            ("target_0", Policy::Target { b: 0.0 }),
            ("periodic", Policy::Periodic { schedule: vec![1.0, 1.0, 0.0, 0.5] }),
            ("randomized", Policy::Randomized { law: RandomLaw::Uniform }),
        ]
    }

    fn validate(&self) -> Result<()> {
        match self {
            Policy::Constant { mu } if !mu.is_finite() => input(format!("policy mean must be finite, got {mu}")),
            Policy::Target { b } if !b.is_finite() => input(format!("policy target must be finite, got {b}")),
            Policy::Periodic { schedule } => {
                if schedule.is_empty() {
                    return input("periodic schedule must be nonempty");
                }
                match schedule.iter().find(|t| !t.is_finite()) {
                    Some(t) => input(format!("periodic schedule entries must be finite, got {t}")),
                    None => Ok(()),
                }
            }
            Policy::Randomized { law: RandomLaw::Endpoints { p_upper } } if !(0.0..=1.0).contains(p_upper) => {
                input(format!("p_upper must lie in [0, 1], got {p_upper}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, Policy::Randomized { .. })
    }

    /// Mean for step `i` (one-based) given the sum of the first `i − 1`
    /// steps and a uniform draw `u`, clamped into `[lo, hi]`.
    fn choose(&self, i: usize, sum: f64, lo: f64, hi: f64, u: f64) -> f64 {
        let mu = match self {
            Policy::Upper => hi,
            Policy::Lower => lo,
            Policy::Constant { mu } => *mu,
            Policy::Target { b } => {
                if sum < b * (i - 1) as f64 {
                    hi
                } else {
                    lo
                }
            }
            Policy::Periodic { schedule } => lo + schedule[(i - 1) % schedule.len()] * (hi - lo),
            Policy::Randomized { law: RandomLaw::Uniform } => lo + u * (hi - lo),
            Policy::Randomized { law: RandomLaw::Endpoints { p_upper } } => {
                if u < *p_upper {
                    hi
                } else {
                    lo
                }
            }
        };
        mu.clamp(lo, hi)
    }
}

/// Per-step data laid out for sampling.
struct StepTable {
    lo: f64,
    hi: f64,
    support: Vec<f64>,
    cumulative: Vec<f64>,
}

impl StepTable {
    fn new(step: &StepModel) -> Self {
        let mut acc = 0.0;
        let cumulative = step
            .noise
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { lo: step.mean_lo, hi: step.mean_hi, support: step.noise.support().to_vec(), cumulative }
    }

    fn sample(&self, u: f64) -> f64 {
        let j = self.cumulative.iter().position(|&c| u < c).unwrap_or(self.support.len() - 1);
        self.support[j]
    }
}

/// Running means `S_k/k`, `k = 1..=n`, of every path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBatch {
    pub seed: u64,
    pub paths: usize,
    pub n: usize,
    pub policy: Policy,
    /// Path-major: entry `p·n + (k−1)` is `S_k/k` on path `p`.
    means: Vec<f64>,
    /// Chosen means that fell outside their interval (always 0 for a
    /// correct policy implementation).
    pub admissibility_violations: usize,
}

/// Tail summary of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub path: usize,
    pub tail_max: f64,
    pub tail_min: f64,
    pub closest_approach: f64,
}

impl PathBatch {
    /// `S_k/k` on `path`, `k = 1..=n`.
    pub fn series(&self, path: usize) -> &[f64] {
        &self.means[path * self.n..(path + 1) * self.n]
    }

    pub fn running_mean(&self, path: usize, k: usize) -> f64 {
        self.series(path)[k - 1]
    }

    pub fn final_means(&self) -> Vec<f64> {
        (0..self.paths).map(|p| self.running_mean(p, self.n)).collect()
    }

    /// `S_k/k` at the given checkpoints, one row per path.
    pub fn at_checkpoints(&self, checkpoints: &[usize]) -> Result<Vec<Vec<f64>>> {
        if let Some(k) = checkpoints.iter().find(|&&k| k == 0 || k > self.n) {
            return input(format!("checkpoint {k} outside 1..={}", self.n));
        }
        Ok((0..self.paths)
            .map(|p| checkpoints.iter().map(|&k| self.running_mean(p, k)).collect())
            .collect())
    }

    /// Max, min and closest approach to `target` of `S_k/k` over
    /// `k ≥ tail_start`.
    pub fn summaries(&self, tail_start: usize, target: f64) -> Result<Vec<PathSummary>> {
        if tail_start == 0 || tail_start > self.n {
            return input(format!("tail start {tail_start} outside 1..={}", self.n));
        }
        Ok((0..self.paths)
            .map(|p| {
                let tail = &self.series(p)[tail_start - 1..];
                PathSummary {
                    path: p,
                    tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
                    closest_approach: tail.iter().map(|m| (m - target).abs()).fold(f64::INFINITY, f64::min),
                }
            })
            .collect())
    }
}

fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Simulates `paths` independent paths of `n` steps under `policy`.
pub fn simulate(model: &SequenceModel, policy: &Policy, n: usize, paths: usize, seed: u64) -> Result<PathBatch> {
    if n == 0 || paths == 0 {
        return input(format!("need n >= 1 and paths >= 1, got n = {n}, paths = {paths}"));
    }
    policy.validate()?;
    let table: Vec<StepTable> = model.steps(n)?.iter().map(StepTable::new).collect();
    let rows: Vec<(Vec<f64>, usize)> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let mut sum = 0.0;
            let mut violations = 0;
            let mut row = Vec::with_capacity(n);
            for (idx, step) in table.iter().enumerate() {
                let u_noise: f64 = rng.gen();
                let u_policy: f64 = rng.gen();
                let mu = policy.choose(idx + 1, sum, step.lo, step.hi, u_policy);
                if !(mu >= step.lo && mu <= step.hi) {
                    violations += 1;
                }
                sum += mu + step.sample(u_noise);
                row.push(sum / (idx + 1) as f64);
            }
            (row, violations)
        })
        .collect();
    let admissibility_violations = rows.iter().map(|r| r.1).sum();
    let mut means = Vec::with_capacity(n * paths);
    for (row, _) in rows {
        means.extend(row);
    }
    if let Some(bad) = means.iter().find(|m| !m.is_finite()) {
        return Err(Error::Numeric(format!("running mean {bad} is not finite")));
    }
    Ok(PathBatch { seed, paths, n, policy: policy.clone(), means, admissibility_violations })
}

/// Counts behind the strong-law witnesses; every fraction is `count/paths`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnReport {
    pub paths: usize,
    pub eps: f64,
    pub tail_start: usize,
    pub target: f64,
    /// Paths with `S_k/k ∈ [μ̲−eps, μ̄+eps]` for every `k ≥ tail_start`.
    pub in_band: usize,
    /// Paths whose tail maximum of `S_k/k` is at least `μ̄ − eps`.
    pub reaches_upper: usize,
    /// Paths whose tail comes within `eps` of `target`.
    pub approaches_target: usize,
}

impl SllnReport {
    pub fn fraction_in_band(&self) -> f64 {
        self.in_band as f64 / self.paths as f64
    }

    pub fn fraction_reaching_upper(&self) -> f64 {
        self.reaches_upper as f64 / self.paths as f64
    }

    pub fn fraction_approaching_target(&self) -> f64 {
        self.approaches_target as f64 / self.paths as f64
    }
}

/// Tail statistics of a batch against the model's limiting interval.
pub fn slln_statistics(batch: &PathBatch, model: &SequenceModel, eps: f64, tail_start: usize, target: f64) -> Result<SllnReport> {
    if tail_start == 0 || tail_start >= batch.n {
        return input(format!("tail start must lie in 1..{}, got {tail_start}", batch.n));
    }
    if !(eps >= 0.0) {
        return input(format!("eps must be non-negative, got {eps}"));
    }
    let summaries = batch.summaries(tail_start, target)?;
    let (lo, hi) = (model.mu_lo - eps, model.mu_hi + eps);
    Ok(SllnReport {
        paths: batch.paths,
        eps,
        tail_start,
        target,
        in_band: summaries.iter().filter(|s| s.tail_min >= lo && s.tail_max <= hi).count(),
        reaches_upper: summaries.iter().filter(|s| s.tail_max >= model.mu_hi - eps).count(),
        approaches_target: summaries.iter().filter(|s| s.closest_approach <= eps).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Subsequence {
    /// `base^k`, `k = 1, 2, ...` up to the horizon.
    Powers { base: usize },
    /// `k^k`, `k = 1, 2, ...` up to the horizon.
    SelfPower,
    Explicit { indices: Vec<usize> },
}

impl Subsequence {
    pub fn indices(&self, horizon: usize) -> Result<Vec<usize>> {
        let out: Vec<usize> = match self {
            Subsequence::Powers { base } => {
                if *base < 2 {
                    return input(format!("power base must be at least 2, got {base}"));
                }
                std::iter::successors(Some(*base), |k| k.checked_mul(*base))
                    .take_while(|&k| k <= horizon)
                    .collect()
            }
            Subsequence::SelfPower => (1u32..)
                .map(|k| (k as usize).checked_pow(k))
                .take_while(|v| v.is_some_and(|v| v <= horizon))
                .map(|v| v.expect("checked above"))
                .collect(),
            Subsequence::Explicit { indices } => {
                if indices.windows(2).any(|w| w[0] >= w[1]) || indices.first() == Some(&0) {
                    return input("explicit subsequence must be strictly increasing and start at 1 or later");
                }
                if let Some(&last) = indices.last() {
                    if last > horizon {
                        return input(format!("subsequence index {last} exceeds horizon {horizon}"));
                    }
                }
                indices.clone()
            }
        };
        if out.is_empty() {
            return input(format!("subsequence has no terms within horizon {horizon}"));
        }
        Ok(out)
    }
}

/// `(n_k, (n_k − n_{k−1})/n_k, n_{k−1}/n_k)` for consecutive terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub index: usize,
    pub increment_ratio: f64,
    pub previous_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsequenceReport {
    pub indices: Vec<usize>,
    pub ratios: Vec<RatioRow>,
    pub target: f64,
    pub eps: f64,
    /// Per path, `min_k |S_{n_k}/n_k − target|`.
    pub min_gaps: Vec<f64>,
    /// Paths whose minimum gap is at most `eps`.
    pub within_eps: usize,
}

/// Distances of `S_{n_k}/n_k` to `target` along a subsequence.
pub fn subsequence_check(batch: &PathBatch, rule: &Subsequence, target: f64, eps: f64) -> Result<SubsequenceReport> {
    let indices = rule.indices(batch.n)?;
    let ratios = indices
        .windows(2)
        .map(|w| {
            let (prev, cur) = (w[0] as f64, w[1] as f64);
            RatioRow { index: w[1], increment_ratio: (cur - prev) / cur, previous_ratio: prev / cur }
        })
        .collect();
    let min_gaps: Vec<f64> = (0..batch.paths)
        .map(|p| {
            indices
                .iter()
                .map(|&k| (batch.running_mean(p, k) - target).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let within_eps = min_gaps.iter().filter(|g| **g <= eps).count();
    Ok(SubsequenceReport { indices, ratios, target, eps, min_gaps, within_eps })
}

/// Sample mean and standard error of `φ(S_n/n)` over the batch.
pub fn phi_statistics(batch: &PathBatch, phi: &LipschitzFn) -> (f64, f64) {
    let values: Vec<f64> = batch.final_means().iter().map(|&m| phi.eval(m)).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One noise history with its probability and running means.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactPath {
    pub prob: f64,
    pub means: Vec<f64>,
}

/// Every noise history of length `n` under a deterministic policy, with its
/// exact probability. The simulation's oracle at small horizons.
pub fn enumerate_paths(model: &SequenceModel, policy: &Policy, n: usize) -> Result<Vec<ExactPath>> {
    if n == 0 {
        return input("horizon n must be at least 1");
    }
    if policy.is_randomized() {
        return input("exact enumeration needs a deterministic policy");
    }
    policy.validate()?;
    let steps = model.steps(n)?;
    let count = steps
        .iter()
        .try_fold(1usize, |acc, s| acc.checked_mul(s.noise.len()).filter(|&c| c <= ENUMERATION_CAP));
    if count.is_none() {
        return Err(Error::Resource(format!("more than {ENUMERATION_CAP} noise histories")));
    }
    let mut frontier = vec![(1.0, 0.0, Vec::with_capacity(n))];
    for (idx, step) in steps.iter().enumerate() {
        let mut next = Vec::with_capacity(frontier.len() * step.noise.len());
        for (prob, sum, means) in frontier {
            let mu = policy.choose(idx + 1, sum, step.mean_lo, step.mean_hi, 0.0);
            for (z, p) in step.noise.iter() {
                let s: f64 = sum + mu + z;
                let mut m: Vec<f64> = Vec::clone(&means);
                m.push(s / (idx + 1) as f64);
                next.push((prob * p, s, m));
            }
        }
        frontier = next;
    }
    Ok(frontier.into_iter().map(|(prob, _, means)| ExactPath { prob, means }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_engine::FiniteDistribution;

    fn iid(lo: f64, hi: f64, a: f64) -> SequenceModel {
        let noise = if a == 0.0 { FiniteDistribution::point_mass(0.0) } else { FiniteDistribution::symmetric_pair(a).unwrap() };
        SequenceModel::constant(StepModel::new(lo, hi, noise).unwrap(), 0.0, 10.0).unwrap()
    }

    #[test]
    fn degenerate_model_stays_at_zero() {
        let m = iid(0.0, 0.0, 0.0);
        for (_, policy) in Policy::bundled() {
            let b = simulate(&m, &policy, 50, 4, 1).unwrap();
            assert!(b.final_means().iter().all(|v| *v == 0.0));
            let r = slln_statistics(&b, &m, 1e-9, 10, 0.0).unwrap();
            assert_eq!((r.in_band, r.reaches_upper, r.approaches_target), (4, 4, 4));
        }
    }

    #[test]
    fn same_seed_same_batch() {
        let m = iid(-1.0, 1.0, 1.0);
        let policy = Policy::Randomized { law: RandomLaw::Endpoints { p_upper: 0.3 } };
        let a = simulate(&m, &policy, 200, 16, 42).unwrap();
        let b = simulate(&m, &policy, 200, 16, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&m, &policy, 200, 16, 43).unwrap();
        assert_ne!(a.final_means(), c.final_means());
    }

    #[test]
    fn paths_do_not_depend_on_batch_size() {
        let m = iid(-1.0, 1.0, 1.0);
        let small = simulate(&m, &Policy::Target { b: 0.2 }, 100, 3, 9).unwrap();
        let large = simulate(&m, &Policy::Target { b: 0.2 }, 100, 10, 9).unwrap();
        for p in 0..3 {
            assert_eq!(small.series(p), large.series(p));
        }
    }

    #[test]
    fn non_finite_policy_parameter_is_rejected() {
        let m = iid(-1.0, 1.0, 1.0);
        assert!(matches!(simulate(&m, &Policy::Constant { mu: f64::NAN }, 5, 1, 0), Err(Error::Input(_))));
        assert!(simulate(&m, &Policy::Periodic { schedule: vec![] }, 5, 1, 0).is_err());
        assert!(simulate(&m, &Policy::Upper, 0, 1, 0).is_err());
    }

    #[test]
    fn constant_policy_is_clamped() {
        let m = iid(-1.0, 1.0, 0.0);
        let b = simulate(&m, &Policy::Constant { mu: 5.0 }, 10, 1, 0).unwrap();
        assert_eq!(b.final_means(), vec![1.0]);
        assert_eq!(b.admissibility_violations, 0);
    }

    #[test]
    fn subsequence_ratios() {
        let m = iid(-1.0, 1.0, 1.0);
        let b = simulate(&m, &Policy::Upper, 4000, 2, 0).unwrap();
        let r = subsequence_check(&b, &Subsequence::SelfPower, 1.0, 0.5).unwrap();
        assert_eq!(r.indices, vec![1, 4, 27, 256, 3125]);
        let last = r.ratios.last().unwrap();
        assert!((last.increment_ratio - 0.91808).abs() < 1e-12);
        assert!((last.previous_ratio - 0.08192).abs() < 1e-12);
        let r = subsequence_check(&b, &Subsequence::Powers { base: 2 }, 1.0, 0.5).unwrap();
        assert!(r.ratios.iter().all(|row| row.increment_ratio == 0.5 && row.previous_ratio == 0.5));
        let bad = Subsequence::Explicit { indices: vec![10, 5000] };
        assert!(subsequence_check(&b, &bad, 0.0, 0.1).is_err());
    }

    #[test]
    fn enumeration_probabilities_sum_to_one() {
        let m = iid(-1.0, 1.0, 1.0);
        let paths = enumerate_paths(&m, &Policy::Target { b: 0.0 }, 8).unwrap();
        assert_eq!(paths.len(), 256);
        let total: f64 = paths.iter().map(|p| p.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(enumerate_paths(&m, &Policy::Randomized { law: RandomLaw::Uniform }, 3).is_err());
    }
}
