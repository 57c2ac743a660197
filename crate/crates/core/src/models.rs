//! Sequence models with ambiguous means, the maximal distribution and its
//! generator.
//!
//! Each step of a [`SequenceModel`] is a mean-shift family: a fixed
//! zero-mean noise law translated by any mean in `[mean_lo, mean_hi]`. The
//! upper and lower means of the step are therefore exactly the interval
//! endpoints, and the uniform second moment is attained at an endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::finite_engine::FiniteDistribution;
use crate::lipschitz::LipschitzFn;
use crate::numeric::{compensated_sum, linspace};

/// Tolerance on the noise mean.
pub const NOISE_MEAN_TOL: f64 = 1e-10;

const SUP_COARSE_CELLS: usize = 1024;
const SUP_REFINE_CELLS: usize = 16;
const SUP_REFINE_ROUNDS: usize = 8;
const SUP_MAX_CANDIDATES: usize = 64;

/// The law of `η` with `E[φ(η)] = sup_{mu_lo <= y <= mu_hi} φ(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalDistribution {
    pub mu_lo: f64,
    pub mu_hi: f64,
}

impl MaximalDistribution {
    pub fn new(mu_lo: f64, mu_hi: f64) -> Result<Self> {
        if !mu_lo.is_finite() || !mu_hi.is_finite() || mu_lo > mu_hi {
            return input(format!("need finite mu_lo <= mu_hi, got [{mu_lo}, {mu_hi}]"));
        }
        Ok(Self { mu_lo, mu_hi })
    }

    /// `g(x) = mu_hi·x⁺ − mu_lo·x⁻`.
    pub fn generator(&self, x: f64) -> f64 {
        self.mu_hi * x.max(0.0) - self.mu_lo * (-x).max(0.0)
    }

    pub fn max_abs_mean(&self) -> f64 {
        self.mu_lo.abs().max(self.mu_hi.abs())
    }
}

/// Generator of the maximal distribution, `g(x) = μ̄x⁺ − μ̲x⁻`.
pub fn g_eval(eta: &MaximalDistribution, x: f64) -> f64 {
    eta.generator(x)
}

/// Certified estimate of a supremum over an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSup {
    /// Largest probed value.
    pub value: f64,
    pub argmax: f64,
    /// The true supremum lies in `[value, value + certified_gap]`.
    pub certified_gap: f64,
    /// Spacing of the finest probing grid.
    pub spacing: f64,
}

struct Cell {
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
}

impl Cell {
    fn bound(&self, lipschitz: f64) -> f64 {
        0.5 * (self.fa + self.fb + lipschitz * (self.b - self.a))
    }
}

fn probe(phi: &LipschitzFn, y: f64) -> Result<f64> {
    let v = phi.eval(y);
    if !v.is_finite() {
        return input(format!("test function is not finite at {y}: {v}"));
    }
    Ok(v)
}

/// Supremum of a Lipschitz function on `[lo, hi]`.
///
/// A uniform grid of 1024 cells is followed by eight rounds of refinement
/// (16 sub-cells each) of the cells whose Lipschitz upper bound still
/// exceeds the incumbent, at most 64 per round, best cells first. Cells
/// left over keep contributing their bound to the certified gap.
/// Breakpoints declared by the function are always probed, so piecewise
/// linear functions are maximised exactly. The final spacing is
/// `(hi - lo) / 2^42`.
pub fn interval_sup(lo: f64, hi: f64, phi: &LipschitzFn) -> Result<IntervalSup> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return input(format!("invalid interval [{lo}, {hi}]"));
    }
    let lipschitz = phi.lipschitz();
    let mut best = (probe(phi, lo)?, lo);
    let consider = |y: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.0 {
            *best = (v, y);
        }
    };
    for &b in phi.breakpoints() {
        if b >= lo && b <= hi {
            let v = probe(phi, b)?;
            consider(b, v, &mut best);
        }
    }
    if hi == lo {
        return Ok(IntervalSup {
            value: best.0,
            argmax: best.1,
            certified_gap: 0.0,
            spacing: 0.0,
        });
    }

    let subdivide = |a: f64, b: f64, fa: f64, fb: f64, cells: usize, best: &mut (f64, f64)| -> Result<Vec<Cell>> {
        let ys = linspace(a, b, cells + 1);
        let mut vals = Vec::with_capacity(ys.len());
        vals.push(fa);
        for &y in &ys[1..cells] {
            let v = probe(phi, y)?;
            if v > best.0 {
                *best = (v, y);
            }
            vals.push(v);
        }
        vals.push(fb);
        Ok(ys
            .windows(2)
            .zip(vals.windows(2))
            .map(|(y, v)| Cell { a: y[0], b: y[1], fa: v[0], fb: v[1] })
            .collect())
    };

    let f_lo = probe(phi, lo)?;
    let f_hi = probe(phi, hi)?;
    consider(hi, f_hi, &mut best);
    let mut cells = subdivide(lo, hi, f_lo, f_hi, SUP_COARSE_CELLS, &mut best)?;
    let mut spacing = (hi - lo) / SUP_COARSE_CELLS as f64;
    // Largest bound among candidate cells that were never refined.
    let mut unresolved = f64::NEG_INFINITY;

    for _ in 0..SUP_REFINE_ROUNDS {
        let incumbent = best.0;
        let mut candidates: Vec<Cell> = cells
            .into_iter()
            .filter(|c| c.bound(lipschitz) > incumbent)
            .collect();
        candidates.sort_by(|x, y| y.bound(lipschitz).total_cmp(&x.bound(lipschitz)));
        if candidates.len() > SUP_MAX_CANDIDATES {
            for c in &candidates[SUP_MAX_CANDIDATES..] {
                unresolved = unresolved.max(c.bound(lipschitz));
            }
            candidates.truncate(SUP_MAX_CANDIDATES);
        }
        let mut next = Vec::with_capacity(candidates.len() * SUP_REFINE_CELLS);
        for c in candidates {
            next.extend(subdivide(c.a, c.b, c.fa, c.fb, SUP_REFINE_CELLS, &mut best)?);
        }
        cells = next;
        spacing /= SUP_REFINE_CELLS as f64;
    }

    let top = cells
        .iter()
        .map(|c| c.bound(lipschitz))
        .fold(unresolved, f64::max);
    Ok(IntervalSup {
        value: best.0,
        argmax: best.1,
        certified_gap: (top - best.0).max(0.0),
        spacing,
    })
}

/// `E[φ(η)] = sup_{μ̲ <= y <= μ̄} φ(y)` for a maximally distributed `η`.
pub fn maximal_expectation(eta: &MaximalDistribution, phi: &LipschitzFn) -> Result<f64> {
    Ok(interval_sup(eta.mu_lo, eta.mu_hi, phi)?.value)
}

/// One step: noise with mean zero shifted by any mean in
/// `[mean_lo, mean_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepDoc")]
pub struct StepModel {
    pub mean_lo: f64,
    pub mean_hi: f64,
    pub noise: FiniteDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepDoc {
    mean_lo: f64,
    mean_hi: f64,
    noise: FiniteDistribution,
}

impl TryFrom<StepDoc> for StepModel {
    type Error = Error;

    fn try_from(doc: StepDoc) -> Result<Self> {
        StepModel::new(doc.mean_lo, doc.mean_hi, doc.noise)
    }
}

impl StepModel {
    pub fn new(mean_lo: f64, mean_hi: f64, noise: FiniteDistribution) -> Result<Self> {
        if !mean_lo.is_finite() || !mean_hi.is_finite() || mean_lo > mean_hi {
            return input(format!("step needs finite mean_lo <= mean_hi, got [{mean_lo}, {mean_hi}]"));
        }
        let m = noise.mean();
        if m.abs() > NOISE_MEAN_TOL {
            return input(format!("step noise must have mean 0, got {m}"));
        }
        Ok(Self { mean_lo, mean_hi, noise })
    }

    /// `E[X_i]`.
    pub fn upper_mean(&self) -> f64 {
        self.mean_hi
    }

    /// `-E[-X_i]`.
    pub fn lower_mean(&self) -> f64 {
        self.mean_lo
    }

    /// `max_{μ} Σ p_j (z_j + μ)²`; convex in `μ`, so attained at an endpoint.
    pub fn second_moment(&self) -> f64 {
        let at = |mu: f64| self.noise.expect(|z| (z + mu) * (z + mu));
        at(self.mean_lo).max(at(self.mean_hi))
    }

    /// `m` evenly spaced means on the interval (the midpoint when `m == 1`).
    pub fn mean_grid(&self, m: usize) -> Vec<f64> {
        if m == 1 || self.mean_lo == self.mean_hi {
            return vec![0.5 * (self.mean_lo + self.mean_hi)];
        }
        linspace(self.mean_lo, self.mean_hi, m)
    }

    /// The noise law shifted by `mu`.
    pub fn law(&self, mu: f64) -> FiniteDistribution {
        let support = self.noise.support().iter().map(|z| z + mu).collect();
        FiniteDistribution::new(support, self.noise.probs().to_vec())
            .expect("shift of a valid law is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// `μ̲ᵢ = μ̲`, `μ̄ᵢ = μ̄`.
    Constant,
    /// `μ̲ᵢ = μ̲`, `μ̄ᵢ = μ̄ + a·(−1)^i/√i`.
    AlternatingSqrt,
    /// `μ̲ᵢ = μ̲`, `μ̄ᵢ = μ̄ + a/i`.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParams {
    pub noise: FiniteDistribution,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRule {
    pub kind: RuleKind,
    pub params: RuleParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepSource {
    Explicit(Vec<StepModel>),
    Rule(StepRule),
}

/// A sequence of independent steps whose mean intervals converge in the
/// Cesàro sense to `[mu_lo, mu_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceDoc", into = "SequenceDoc")]
pub struct SequenceModel {
    pub source: StepSource,
    pub mu_lo: f64,
    pub mu_hi: f64,
    /// Declared decay envelope `c/√n` for the Cesàro averages.
    pub cesaro_envelope_c: f64,
    /// Declared bound `B > sup_i E[|X_i|²]`.
    pub moment_bound: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    steps: Option<Vec<StepModel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<StepRule>,
    mu_lo: f64,
    mu_hi: f64,
    cesaro_envelope_c: f64,
    moment_bound: f64,
}

impl TryFrom<SequenceDoc> for SequenceModel {
    type Error = Error;

    fn try_from(doc: SequenceDoc) -> Result<Self> {
        let source = match (doc.steps, doc.rule) {
            (Some(steps), None) => StepSource::Explicit(steps),
            (None, Some(rule)) => StepSource::Rule(rule),
            _ => return input("sequence model needs exactly one of \"steps\" or \"rule\""),
        };
        SequenceModel::new(source, doc.mu_lo, doc.mu_hi, doc.cesaro_envelope_c, doc.moment_bound)
    }
}

impl From<SequenceModel> for SequenceDoc {
    fn from(m: SequenceModel) -> Self {
        let (steps, rule) = match m.source {
            StepSource::Explicit(s) => (Some(s), None),
            StepSource::Rule(r) => (None, Some(r)),
        };
        SequenceDoc {
            steps,
            rule,
            mu_lo: m.mu_lo,
            mu_hi: m.mu_hi,
            cesaro_envelope_c: m.cesaro_envelope_c,
            moment_bound: m.moment_bound,
        }
    }
}

impl SequenceModel {
    pub fn new(
        source: StepSource,
        mu_lo: f64,
        mu_hi: f64,
        cesaro_envelope_c: f64,
        moment_bound: f64,
    ) -> Result<Self> {
        MaximalDistribution::new(mu_lo, mu_hi)?;
        if !(cesaro_envelope_c >= 0.0) || !(moment_bound > 0.0) {
            return input("envelope constant must be >= 0 and moment bound > 0");
        }
        match &source {
            StepSource::Explicit(steps) if steps.is_empty() => {
                return input("explicit step list must be nonempty")
            }
            StepSource::Rule(rule) => {
                if rule.params.noise.mean().abs() > NOISE_MEAN_TOL {
                    return input("rule noise must have mean 0");
                }
                if !rule.params.amplitude.is_finite() {
                    return input("rule amplitude must be finite");
                }
            }
            _ => {}
        }
        let model = Self { source, mu_lo, mu_hi, cesaro_envelope_c, moment_bound };
        model.step(1)?;
        Ok(model)
    }

    /// Same steps at every index.
    pub fn constant(step: StepModel, cesaro_envelope_c: f64, moment_bound: f64) -> Result<Self> {
        let (lo, hi) = (step.mean_lo, step.mean_hi);
        Self::new(
            StepSource::Rule(StepRule {
                kind: RuleKind::Constant,
                params: RuleParams { noise: step.noise, amplitude: 0.0 },
            }),
            lo,
            hi,
            cesaro_envelope_c,
            moment_bound,
        )
    }

    pub fn from_rule(
        kind: RuleKind,
        noise: FiniteDistribution,
        amplitude: f64,
        mu_lo: f64,
        mu_hi: f64,
        cesaro_envelope_c: f64,
        moment_bound: f64,
    ) -> Result<Self> {
        Self::new(
            StepSource::Rule(StepRule { kind, params: RuleParams { noise, amplitude } }),
            mu_lo,
            mu_hi,
            cesaro_envelope_c,
            moment_bound,
        )
    }

    /// Step `i`, one-based.
    pub fn step(&self, i: usize) -> Result<StepModel> {
        if i == 0 {
            return input("steps are indexed from 1");
        }
        match &self.source {
            StepSource::Explicit(steps) => steps.get(i - 1).cloned().ok_or_else(|| {
                Error::Input(format!("model lists {} steps, step {i} requested", steps.len()))
            }),
            StepSource::Rule(rule) => {
                let a = rule.params.amplitude;
                let fi = i as f64;
                let hi = match rule.kind {
                    RuleKind::Constant => self.mu_hi,
                    RuleKind::AlternatingSqrt => {
                        let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
                        self.mu_hi + a * sign / fi.sqrt()
                    }
                    RuleKind::Harmonic => self.mu_hi + a / fi,
                };
                StepModel::new(self.mu_lo, hi, rule.params.noise.clone())
            }
        }
    }

    /// Steps `1..=n`.
    pub fn steps(&self, n: usize) -> Result<Vec<StepModel>> {
        (1..=n).map(|i| self.step(i)).collect()
    }

    pub fn maximal(&self) -> MaximalDistribution {
        MaximalDistribution { mu_lo: self.mu_lo, mu_hi: self.mu_hi }
    }

    /// The same model with every mean interval (and the limits) shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let source = match &self.source {
            StepSource::Explicit(steps) => StepSource::Explicit(
                steps
                    .iter()
                    .map(|s| StepModel::new(s.mean_lo + c, s.mean_hi + c, s.noise.clone()))
                    .collect::<Result<_>>()?,
            ),
            StepSource::Rule(r) => StepSource::Rule(r.clone()),
        };
        Self::new(source, self.mu_lo + c, self.mu_hi + c, self.cesaro_envelope_c, self.moment_bound)
    }

    /// Checks the Cesàro mean condition against the declared envelope at
    /// `n = 16, 32, ...` up to `n_max` and the uniform second moment bound.
    pub fn validate_hypotheses(&self, n_max: usize) -> Result<HypothesisReport> {
        if n_max < 16 {
            return input(format!("n_max must be at least 16, got {n_max}"));
        }
        let steps = self.steps(n_max)?;
        let mut checkpoints: Vec<usize> = std::iter::successors(Some(16usize), |n| n.checked_mul(2))
            .take_while(|n| *n <= n_max)
            .collect();
        if checkpoints.last() != Some(&n_max) {
            checkpoints.push(n_max);
        }
        let cesaro = checkpoints
            .iter()
            .map(|&n| {
                let lower = compensated_sum(steps[..n].iter().map(|s| (s.mean_lo - self.mu_lo).abs())) / n as f64;
                let upper = compensated_sum(steps[..n].iter().map(|s| (s.mean_hi - self.mu_hi).abs())) / n as f64;
                let envelope = self.cesaro_envelope_c / (n as f64).sqrt();
                CesaroRow {
                    n,
                    lower_avg: lower,
                    upper_avg: upper,
                    envelope,
                    pass: lower <= envelope && upper <= envelope,
                }
            })
            .collect::<Vec<_>>();
        let sup_second_moment = steps.iter().map(StepModel::second_moment).fold(0.0, f64::max);
        let moment_pass = sup_second_moment < self.moment_bound;
        let passed = moment_pass && cesaro.iter().all(|r| r.pass);
        Ok(HypothesisReport {
            cesaro,
            sup_second_moment,
            moment_bound: self.moment_bound,
            moment_pass,
            passed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroRow {
    pub n: usize,
    /// `(1/n) Σ |μ̲ᵢ − μ̲|`.
    pub lower_avg: f64,
    /// `(1/n) Σ |μ̄ᵢ − μ̄|`.
    pub upper_avg: f64,
    pub envelope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub cesaro: Vec<CesaroRow>,
    pub sup_second_moment: f64,
    pub moment_bound: f64,
    pub moment_pass: bool,
    pub passed: bool,
}
