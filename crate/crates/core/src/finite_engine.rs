//! Exact sublinear expectations over a finite outcome space.
//!
//! A [`MeasureFamily`] is a finite list of probability vectors over `K`
//! labelled outcomes. The upper expectation of a random variable is the
//! maximum of its linear expectations over the family, the lower
//! expectation is its conjugate `-E[-X]`, and the capacity pair of an event
//! is the pair of upper and lower expectations of the event's indicator.
//!
//! Everything here is exact up to compensated floating point summation and
//! serves as the ground truth for the approximate engines elsewhere in the
//! crate.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::numeric::{compensated_sum, dot, EXACT_TOL};

/// Default cap on the number of measures produced by
/// [`MeasureFamily::extend_independent`].
pub const DEFAULT_EXTENSION_CAP: usize = 1_000_000;

/// Scales used by the positive homogeneity check.
pub const HOMOGENEITY_GRID: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

/// Constants used by the constant preservation check.
pub const CONSTANT_GRID: [f64; 5] = [-3.5, 0.0, 0.25, 1.0, 7.0];

/// Exponential tilts used by the exponential Chebyshev check.
pub const TILT_GRID: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// A finite family of probability vectors over a labelled outcome space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyDoc")]
pub struct MeasureFamily {
    outcomes: Vec<String>,
    measures: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDoc {
    outcomes: Vec<String>,
    measures: Vec<Vec<f64>>,
}

impl TryFrom<FamilyDoc> for MeasureFamily {
    type Error = Error;

    fn try_from(doc: FamilyDoc) -> Result<Self> {
        MeasureFamily::new(doc.outcomes, doc.measures)
    }
}

fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return input(format!("{what} has invalid probability {bad}"));
    }
    let total = compensated_sum(p.iter().copied());
    if (total - 1.0).abs() > EXACT_TOL {
        return input(format!("{what} sums to {total}, not 1"));
    }
    Ok(())
}

impl MeasureFamily {
    pub fn new(outcomes: Vec<String>, measures: Vec<Vec<f64>>) -> Result<Self> {
        if outcomes.is_empty() {
            return input("outcome space must be nonempty");
        }
        if measures.is_empty() {
            return input("measure family must be nonempty");
        }
        let unique: BTreeSet<&String> = outcomes.iter().collect();
        if unique.len() != outcomes.len() {
            return input("outcome labels must be distinct");
        }
        for (m, p) in measures.iter().enumerate() {
            if p.len() != outcomes.len() {
                return Err(Error::Dimension {
                    expected: outcomes.len(),
                    found: p.len(),
                });
            }
            check_probability_vector(p, &format!("measure {m}"))?;
        }
        Ok(Self { outcomes, measures })
    }

    /// Family with outcomes labelled `w1..wK`.
    pub fn unlabelled(measures: Vec<Vec<f64>>) -> Result<Self> {
        let k = measures.first().map_or(0, Vec::len);
        let outcomes = (1..=k).map(|i| format!("w{i}")).collect();
        Self::new(outcomes, measures)
    }

    /// The `K` point masses on a `K`-point space: total ignorance.
    pub fn point_masses(k: usize) -> Result<Self> {
        let measures = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::unlabelled(measures)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn measures(&self) -> &[Vec<f64>] {
        &self.measures
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn num_measures(&self) -> usize {
        self.measures.len()
    }

    fn check_len(&self, x: &RandomVariable) -> Result<()> {
        if x.len() != self.num_outcomes() {
            return Err(Error::Dimension {
                expected: self.num_outcomes(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Linear expectation of `x` under every member of the family.
    pub fn linear_expectations(&self, x: &RandomVariable) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(self.measures.iter().map(|p| dot(p, &x.0)).collect())
    }

    /// `E[X] = max_P E_P[X]`.
    pub fn upper_expectation(&self, x: &RandomVariable) -> Result<f64> {
        Ok(self
            .linear_expectations(x)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Conjugate expectation `-E[-X]`, i.e. the minimum over the family.
    pub fn lower_expectation(&self, x: &RandomVariable) -> Result<f64> {
        Ok(-self.upper_expectation(&x.neg())?)
    }

    /// Event from outcome labels.
    pub fn event<S: AsRef<str>>(&self, labels: &[S]) -> Result<Event> {
        let mut mask = vec![false; self.num_outcomes()];
        for label in labels {
            let label = label.as_ref();
            match self.outcomes.iter().position(|o| o == label) {
                Some(i) => mask[i] = true,
                None => return input(format!("unknown outcome label {label:?}")),
            }
        }
        Ok(Event { mask })
    }

    /// Event selecting the outcomes where `pred` holds for `x`.
    pub fn event_where(&self, x: &RandomVariable, pred: impl Fn(f64) -> bool) -> Result<Event> {
        self.check_len(x)?;
        Ok(Event {
            mask: x.0.iter().map(|v| pred(*v)).collect(),
        })
    }

    /// Upper and lower capacity of `event`.
    pub fn capacity(&self, event: &Event) -> Result<CapacityPair> {
        if event.mask.len() != self.num_outcomes() {
            return Err(Error::Dimension {
                expected: self.num_outcomes(),
                found: event.mask.len(),
            });
        }
        let indicator = event.indicator();
        Ok(CapacityPair {
            upper: self.upper_expectation(&indicator)?,
            lower: self.lower_expectation(&indicator)?,
        })
    }

    /// Checks monotonicity, constant preservation, sub-additivity and
    /// positive homogeneity of the upper expectation on every pair drawn
    /// from `samples`, plus the pairs `max(X, Y) >= X >= min(X, Y)`.
    pub fn check_axioms(&self, samples: &[RandomVariable]) -> CheckReport {
        let mut report = CheckReport::default();
        for x in samples {
            if let Err(e) = self.check_len(x) {
                report.fail(Property::Dimension, e.to_string(), f64::INFINITY);
            }
        }
        if !report.passed() {
            return report;
        }
        let k = self.num_outcomes();
        let upper = |x: &RandomVariable| self.upper_expectation(x).expect("length checked");

        for c in CONSTANT_GRID {
            let e = upper(&RandomVariable::constant(k, c));
            report.check(
                Property::ConstantPreservation,
                (e - c).abs(),
                || format!("E[{c}] = {e}"),
            );
        }

        let values: Vec<f64> = samples.iter().map(upper).collect();
        for (x, ex) in samples.iter().zip(&values) {
            let lower = self.lower_expectation(x).expect("length checked");
            report.check(Property::Ordering, lower - ex, || {
                format!("lower {lower} exceeds upper {ex}")
            });
            for lambda in HOMOGENEITY_GRID {
                let scaled = upper(&x.scale(lambda));
                report.check(
                    Property::PositiveHomogeneity,
                    (scaled - lambda * ex).abs(),
                    || format!("E[{lambda} X] = {scaled}, {lambda} E[X] = {}", lambda * ex),
                );
            }
        }

        for (i, x) in samples.iter().enumerate() {
            for (j, y) in samples.iter().enumerate() {
                let (ex, ey) = (values[i], values[j]);
                let diff = upper(&x.sub(y));
                report.check(Property::SubAdditivity, ex - ey - diff, || {
                    format!("E[X{i}] - E[X{j}] = {} > E[X{i} - X{j}] = {diff}", ex - ey)
                });
                if x.dominates(y) {
                    report.check(Property::Monotonicity, ey - ex, || {
                        format!("X{i} >= X{j} but E[X{i}] = {ex} < E[X{j}] = {ey}")
                    });
                }
                let hi = upper(&x.max(y));
                let lo = upper(&x.min(y));
                report.check(Property::Monotonicity, ex - hi, || {
                    format!("E[max(X{i}, X{j})] = {hi} < E[X{i}] = {ex}")
                });
                report.check(Property::Monotonicity, lo - ex, || {
                    format!("E[min(X{i}, X{j})] = {lo} > E[X{i}] = {ex}")
                });
            }
        }
        report
    }

    /// Checks normalization, set monotonicity, `lower <= upper` and the
    /// duality `V(A) + v(A^c) = 1` over every event of the outcome space.
    ///
    /// Only available for `K <= 16`.
    pub fn check_capacity_axioms(&self) -> Result<CheckReport> {
        let k = self.num_outcomes();
        if k > 16 {
            return Err(Error::Resource(format!(
                "exhaustive event enumeration needs K <= 16, got {k}"
            )));
        }
        let mut report = CheckReport::default();
        let events: Vec<Event> = (0..1u32 << k).map(|bits| Event::from_bits(k, bits)).collect();
        let caps: Vec<CapacityPair> = events
            .iter()
            .map(|e| self.capacity(e))
            .collect::<Result<_>>()?;

        let empty = caps[0];
        let full = caps[(1 << k) - 1];
        report.check(Property::Normalization, empty.upper.abs(), || {
            format!("V(empty) = {}", empty.upper)
        });
        report.check(Property::Normalization, (full.upper - 1.0).abs(), || {
            format!("V(Omega) = {}", full.upper)
        });

        let all = (1u32 << k) - 1;
        for (bits, cap) in caps.iter().enumerate() {
            report.check(Property::Ordering, cap.lower - cap.upper, || {
                format!("event {bits:b}: lower {} > upper {}", cap.lower, cap.upper)
            });
            let comp = caps[(all ^ bits as u32) as usize];
            let dual = cap.upper + comp.lower;
            report.check(Property::Duality, (dual - 1.0).abs(), || {
                format!("event {bits:b}: V(A) + v(A^c) = {dual}")
            });
            // Immediate supersets suffice: inclusion is the transitive closure.
            for i in 0..k {
                let sup = bits | (1 << i);
                if sup != bits {
                    let bigger = caps[sup];
                    report.check(Property::SetMonotonicity, cap.upper - bigger.upper, || {
                        format!("V({bits:b}) = {} > V({sup:b}) = {}", cap.upper, bigger.upper)
                    });
                    report.check(Property::SetMonotonicity, cap.lower - bigger.lower, || {
                        format!("v({bits:b}) = {} > v({sup:b}) = {}", cap.lower, bigger.lower)
                    });
                }
            }
        }
        Ok(report)
    }

    /// Along a decreasing chain `A_1 ⊇ A_2 ⊇ ...` the upper capacity must be
    /// non-increasing and end at the capacity of the intersection.
    pub fn monotone_chain_check(&self, chain: &[Event]) -> Result<CheckReport> {
        let mut report = CheckReport::default();
        if chain.is_empty() {
            return Ok(report);
        }
        for w in chain.windows(2) {
            if !w[1].is_subset(&w[0]) {
                return input("chain must be decreasing under inclusion");
            }
        }
        let caps: Vec<f64> = chain
            .iter()
            .map(|e| self.capacity(e).map(|c| c.upper))
            .collect::<Result<_>>()?;
        for (i, w) in caps.windows(2).enumerate() {
            report.check(Property::Continuity, w[1] - w[0], || {
                format!("V increased along chain at position {}", i + 1)
            });
        }
        let meet = chain.iter().skip(1).fold(chain[0].clone(), |acc, e| acc.intersect(e));
        let limit = self.capacity(&meet)?.upper;
        let last = caps[caps.len() - 1];
        report.check(Property::Continuity, (last - limit).abs(), || {
            format!("chain ends at {last}, intersection has V = {limit}")
        });
        Ok(report)
    }

    /// Builds the family of all adapted product measures `P ⊗ λ` on
    /// `Ω × support`, where `λ` ranges over every map from outcomes of `Ω`
    /// to members of `step`. Under the resulting family the new coordinate
    /// `Y` is independent of `X` in the nested-supremum sense.
    pub fn extend_independent(
        &self,
        x_vals: &RandomVariable,
        step: &[FiniteDistribution],
        cap: usize,
    ) -> Result<IndependentExtension> {
        self.check_len(x_vals)?;
        if step.is_empty() {
            return input("independent step needs at least one distribution");
        }
        let k = self.num_outcomes();
        let choices = step.len();
        let selections = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(choices));
        let total = selections.and_then(|s| s.checked_mul(self.num_measures()));
        let total = match total {
            Some(t) if t <= cap => t,
            _ => {
                return Err(Error::Resource(format!(
                    "extension needs {} x {choices}^{k} measures, cap is {cap}",
                    self.num_measures()
                )))
            }
        };
        let selections = selections.expect("checked above");

        let mut y_support: Vec<f64> = step.iter().flat_map(|d| d.support.iter().copied()).collect();
        y_support.sort_by(f64::total_cmp);
        y_support.dedup();
        // Each step distribution re-expressed on the common support.
        let laws: Vec<Vec<f64>> = step
            .iter()
            .map(|d| {
                let mut probs = vec![0.0; y_support.len()];
                for (y, p) in d.support.iter().zip(&d.probs) {
                    let idx = y_support
                        .binary_search_by(|s| s.total_cmp(y))
                        .expect("support collected above");
                    probs[idx] = *p;
                }
                probs
            })
            .collect();

        let cells = k * y_support.len();
        let mut outcomes = Vec::with_capacity(cells);
        let mut xs = Vec::with_capacity(cells);
        let mut ys = Vec::with_capacity(cells);
        for (w, label) in self.outcomes.iter().enumerate() {
            for y in &y_support {
                outcomes.push(format!("{label}|{y}"));
                xs.push(x_vals.0[w]);
                ys.push(*y);
            }
        }

        let mut measures = Vec::with_capacity(total);
        let mut digits = vec![0usize; k];
        for p in &self.measures {
            digits.iter_mut().for_each(|d| *d = 0);
            for _ in 0..selections {
                let mut m = Vec::with_capacity(cells);
                for (w, pw) in p.iter().enumerate() {
                    m.extend(laws[digits[w]].iter().map(|q| pw * q));
                }
                measures.push(m);
                for d in digits.iter_mut() {
                    *d += 1;
                    if *d < choices {
                        break;
                    }
                    *d = 0;
                }
            }
        }

        // Product vectors sum to one only up to rounding; skip re-validation.
        let family = MeasureFamily { outcomes, measures };
        Ok(IndependentExtension {
            family,
            x: RandomVariable(xs),
            y: RandomVariable(ys),
            y_support,
        })
    }

    /// Chebyshev-type inequality chain:
    /// `V(|X| >= a) <= E[|X|^p] / a^p` and, for every tilt `λ` on
    /// [`TILT_GRID`], `V(X >= a) <= exp(-λ a) E[exp(λ X)]`.
    pub fn markov_bound_check(&self, x: &RandomVariable, a: f64, p: u32) -> Result<MarkovReport> {
        self.check_len(x)?;
        if !(a > 0.0) || !a.is_finite() {
            return input(format!("threshold must be positive and finite, got {a}"));
        }
        if p == 0 {
            return input("moment order must be at least 1");
        }
        let mut report = CheckReport::default();
        let tail = self.capacity(&self.event_where(x, |v| v.abs() >= a)?)?.upper;
        let moment = self.upper_expectation(&x.map(|v| v.abs().powi(p as i32)))?;
        let moment_bound = moment / a.powi(p as i32);
        report.check(Property::Markov, tail - moment_bound, || {
            format!("V(|X| >= {a}) = {tail} > E[|X|^{p}]/a^{p} = {moment_bound}")
        });

        let upper_tail = self.capacity(&self.event_where(x, |v| v >= a)?)?.upper;
        let mut exponential = Vec::with_capacity(TILT_GRID.len());
        for lambda in TILT_GRID {
            let mgf = self.upper_expectation(&x.map(|v| (lambda * v).exp()))?;
            let bound = (-lambda * a).exp() * mgf;
            report.check(Property::Exponential, upper_tail - bound, || {
                format!("V(X >= {a}) = {upper_tail} > exp(-{lambda} a) E[exp({lambda} X)] = {bound}")
            });
            exponential.push(ExponentialBound { lambda, tail: upper_tail, bound });
        }
        Ok(MarkovReport { tail, moment_bound, exponential, report })
    }

    /// `V(∪ A_i) <= Σ V(A_i)`, plus monotonicity of `V` for every included
    /// pair among the events and their union.
    pub fn union_subadditivity_check(&self, events: &[Event]) -> Result<UnionReport> {
        let mut report = CheckReport::default();
        let mut union = Event::empty(self.num_outcomes());
        let mut caps = Vec::with_capacity(events.len());
        for e in events {
            caps.push(self.capacity(e)?.upper);
            union = union.union(e);
        }
        let union_cap = self.capacity(&union)?.upper;
        let sum = compensated_sum(caps.iter().copied());
        report.check(Property::UnionBound, union_cap - sum, || {
            format!("V(union) = {union_cap} > sum of V = {sum}")
        });
        for (i, a) in events.iter().enumerate() {
            report.check(Property::SetMonotonicity, caps[i] - union_cap, || {
                format!("V(A{i}) = {} > V(union) = {union_cap}", caps[i])
            });
            for (j, b) in events.iter().enumerate() {
                if i != j && a.is_subset(b) {
                    report.check(Property::SetMonotonicity, caps[i] - caps[j], || {
                        format!("A{i} ⊆ A{j} but V(A{i}) = {} > V(A{j}) = {}", caps[i], caps[j])
                    });
                }
            }
        }
        Ok(UnionReport { union: union_cap, sum, report })
    }
}

/// Values of a random variable at each outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RandomVariable(pub Vec<f64>);

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(k: usize, c: f64) -> Self {
        Self(vec![c; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|v| f(*v)).collect())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn scale(&self, lambda: f64) -> Self {
        self.map(|v| lambda * v)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max(&self, other: &Self) -> Self {
        self.zip_with(other, f64::max)
    }

    pub fn min(&self, other: &Self) -> Self {
        self.zip_with(other, f64::min)
    }

    /// `self >= other` at every outcome.
    pub fn dominates(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

/// An event as a subset of outcomes, stored as a membership mask so that
/// complements are exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    mask: Vec<bool>,
}

impl Event {
    pub fn from_mask(mask: Vec<bool>) -> Self {
        Self { mask }
    }

    pub fn from_indices(k: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; k];
        for &i in indices {
            if i >= k {
                return input(format!("outcome index {i} out of range for K = {k}"));
            }
            mask[i] = true;
        }
        Ok(Self { mask })
    }

    /// Event whose membership is given by the low `k` bits of `bits`.
    pub fn from_bits(k: usize, bits: u32) -> Self {
        Self {
            mask: (0..k).map(|i| bits >> i & 1 == 1).collect(),
        }
    }

    pub fn empty(k: usize) -> Self {
        Self { mask: vec![false; k] }
    }

    pub fn full(k: usize) -> Self {
        Self { mask: vec![true; k] }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn complement(&self) -> Self {
        Self {
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self {
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.mask.len() == other.mask.len()
            && self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }

    pub fn indicator(&self) -> RandomVariable {
        RandomVariable(self.mask.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect())
    }
}

/// Upper capacity `V(A) = E[1_A]` and lower capacity `v(A) = -E[-1_A]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityPair {
    pub upper: f64,
    pub lower: f64,
}

/// A probability law on finitely many real points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionDoc")]
pub struct FiniteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionDoc {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<DistributionDoc> for FiniteDistribution {
    type Error = Error;

    fn try_from(doc: DistributionDoc) -> Result<Self> {
        FiniteDistribution::new(doc.support, doc.probs)
    }
}

impl FiniteDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return input("distribution support must be nonempty");
        }
        if support.len() != probs.len() {
            return Err(Error::Dimension {
                expected: support.len(),
                found: probs.len(),
            });
        }
        if support.iter().any(|s| !s.is_finite()) {
            return input("distribution support must be finite");
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return input("distribution support must be strictly increasing");
        }
        check_probability_vector(&probs, "distribution")?;
        Ok(Self { support, probs })
    }

    pub fn point_mass(x: f64) -> Self {
        Self {
            support: vec![x],
            probs: vec![1.0],
        }
    }

    /// Symmetric two-point law `±a` with probability one half each.
    pub fn symmetric_pair(a: f64) -> Result<Self> {
        Self::new(vec![-a, a], vec![0.5, 0.5])
    }

    /// Bernoulli law on `{0, 1}` with success probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![1.0 - p, p])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn max(&self) -> f64 {
        self.support[self.support.len() - 1]
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.support.iter().zip(&self.probs).map(|(x, p)| p * f(*x)))
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn second_moment(&self) -> f64 {
        self.expect(|x| x * x)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }
}

/// The product family built by [`MeasureFamily::extend_independent`], with
/// the coordinate variables `X` and `Y` on the product space.
#[derive(Debug, Clone)]
pub struct IndependentExtension {
    pub family: MeasureFamily,
    pub x: RandomVariable,
    pub y: RandomVariable,
    pub y_support: Vec<f64>,
}

impl IndependentExtension {
    /// `φ(X, Y)` as a random variable on the product space.
    pub fn variable(&self, phi: impl Fn(f64, f64) -> f64) -> RandomVariable {
        self.x.zip_with(&self.y, phi)
    }

    /// `{X ∈ D, Y ∈ G}` for finite value sets `D` and `G`.
    pub fn joint_event(&self, d: &[f64], g: &[f64]) -> Event {
        Event {
            mask: self
                .x
                .0
                .iter()
                .zip(&self.y.0)
                .map(|(x, y)| d.contains(x) && g.contains(y))
                .collect(),
        }
    }
}

/// Which property a check exercised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Dimension,
    Monotonicity,
    ConstantPreservation,
    SubAdditivity,
    PositiveHomogeneity,
    Ordering,
    Normalization,
    Duality,
    SetMonotonicity,
    Continuity,
    Markov,
    Exponential,
    UnionBound,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Property {
    pub fn as_str(self) -> &'static str {
        match self {
            Property::Dimension => "dimension",
            Property::Monotonicity => "monotonicity",
            Property::ConstantPreservation => "constant_preservation",
            Property::SubAdditivity => "sub_additivity",
            Property::PositiveHomogeneity => "positive_homogeneity",
            Property::Ordering => "ordering",
            Property::Normalization => "normalization",
            Property::Duality => "duality",
            Property::SetMonotonicity => "set_monotonicity",
            Property::Continuity => "continuity",
            Property::Markov => "markov",
            Property::Exponential => "exponential",
            Property::UnionBound => "union_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub property: Property,
    pub detail: String,
    /// Amount by which the inequality or identity failed.
    pub excess: f64,
}

/// Outcome of a report-only check: how many comparisons ran and which
/// failed beyond [`EXACT_TOL`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: usize,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Records a check whose `excess` must not exceed the exact tolerance.
    pub fn check(&mut self, property: Property, excess: f64, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !(excess <= EXACT_TOL) {
            self.fail(property, detail(), excess);
        }
    }

    fn fail(&mut self, property: Property, detail: String, excess: f64) {
        self.violations.push(Violation { property, detail, excess });
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.checks += other.checks;
        self.violations.extend(other.violations);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialBound {
    pub lambda: f64,
    pub tail: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovReport {
    /// `V(|X| >= a)`.
    pub tail: f64,
    /// `E[|X|^p] / a^p`.
    pub moment_bound: f64,
    pub exponential: Vec<ExponentialBound>,
    pub report: CheckReport,
}

impl MarkovReport {
    /// The moment inequality holds with equality.
    pub fn is_tight(&self) -> bool {
        (self.tail - self.moment_bound).abs() <= EXACT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionReport {
    pub union: f64,
    pub sum: f64,
    pub report: CheckReport,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(measures: Vec<Vec<f64>>) -> MeasureFamily {
        MeasureFamily::unlabelled(measures).unwrap()
    }

    fn rv(v: &[f64]) -> RandomVariable {
        RandomVariable::new(v.to_vec())
    }

    #[test]
    fn upper_expectation_over_point_masses() {
        let f = MeasureFamily::point_masses(2).unwrap();
        assert_eq!(f.upper_expectation(&rv(&[3.0, 5.0])).unwrap(), 5.0);
        assert_eq!(f.lower_expectation(&rv(&[3.0, 5.0])).unwrap(), 3.0);
    }

    #[test]
    fn constants_are_preserved() {
        let f = fam(vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]]);
        let c = RandomVariable::constant(3, 7.0);
        assert!((f.upper_expectation(&c).unwrap() - 7.0).abs() < 1e-15);
        assert!((f.lower_expectation(&c).unwrap() - 7.0).abs() < 1e-15);
    }

    #[test]
    fn upper_expectation_of_indicator() {
        let f = fam(vec![vec![0.5, 0.5], vec![0.2, 0.8]]);
        assert_eq!(f.upper_expectation(&rv(&[1.0, 0.0])).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_is_an_input_error() {
        let f = MeasureFamily::point_masses(2).unwrap();
        assert_eq!(
            f.upper_expectation(&rv(&[1.0, 2.0, 3.0])),
            Err(Error::Dimension { expected: 2, found: 3 })
        );
        assert!(f.lower_expectation(&rv(&[1.0])).is_err());
    }

    #[test]
    fn capacity_examples() {
        let f = MeasureFamily::point_masses(2).unwrap();
        let a = f.event(&["w1"]).unwrap();
        assert_eq!(f.capacity(&a).unwrap(), CapacityPair { upper: 1.0, lower: 0.0 });
        let full = Event::full(2);
        assert_eq!(f.capacity(&full).unwrap(), CapacityPair { upper: 1.0, lower: 1.0 });
        let empty = Event::empty(2);
        assert_eq!(f.capacity(&empty).unwrap(), CapacityPair { upper: 0.0, lower: 0.0 });

        let g = fam(vec![vec![0.3, 0.7], vec![0.6, 0.4]]);
        let cap = g.capacity(&g.event(&["w1"]).unwrap()).unwrap();
        assert_eq!(cap, CapacityPair { upper: 0.6, lower: 0.3 });
    }

    #[test]
    fn unknown_label_is_rejected() {
        let f = MeasureFamily::point_masses(2).unwrap();
        assert!(matches!(f.event(&["w9"]), Err(Error::Input(_))));
    }

    #[test]
    fn construction_rejects_bad_vectors() {
        assert!(MeasureFamily::unlabelled(vec![vec![0.5, 0.6]]).is_err());
        assert!(MeasureFamily::unlabelled(vec![vec![-0.1, 1.1]]).is_err());
        assert!(MeasureFamily::unlabelled(vec![]).is_err());
        assert!(MeasureFamily::new(vec!["a".into(), "a".into()], vec![vec![0.5, 0.5]]).is_err());
        assert!(MeasureFamily::new(vec!["a".into()], vec![vec![0.5, 0.5]]).is_err());
        // duplicates are permitted
        assert!(MeasureFamily::unlabelled(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_ok());
    }

    #[test]
    fn axioms_hold_for_x_y_and_difference() {
        let f = fam(vec![vec![0.1, 0.4, 0.5], vec![0.7, 0.2, 0.1], vec![0.3, 0.3, 0.4]]);
        let x = rv(&[1.0, -2.0, 0.5]);
        let y = rv(&[0.3, 4.0, -1.0]);
        let d = x.sub(&y);
        let report = f.check_axioms(&[x.clone(), y, d]);
        assert!(report.passed(), "{:?}", report.violations);
        assert!(report.checks > 30);
        assert_eq!(f.upper_expectation(&x.scale(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn monotone_for_dominating_variables() {
        let f = fam(vec![vec![0.25, 0.75], vec![0.9, 0.1]]);
        let x = rv(&[2.0, 1.0]);
        let y = rv(&[1.5, -3.0]);
        assert!(x.dominates(&y));
        assert!(f.upper_expectation(&x).unwrap() >= f.upper_expectation(&y).unwrap());
    }

    #[test]
    fn capacity_axioms_on_small_family() {
        let f = fam(vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.1, 0.3]]);
        let report = f.check_capacity_axioms().unwrap();
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn markov_equality_on_point_masses() {
        let f = MeasureFamily::point_masses(2).unwrap();
        let r = f.markov_bound_check(&rv(&[-2.0, 2.0]), 2.0, 2).unwrap();
        assert_eq!(r.tail, 1.0);
        assert_eq!(r.moment_bound, 1.0);
        assert!(r.is_tight());
        assert!(r.report.passed());
    }

    #[test]
    fn markov_on_zero_variable() {
        let f = fam(vec![vec![0.5, 0.5]]);
        let r = f.markov_bound_check(&rv(&[0.0, 0.0]), 0.3, 1).unwrap();
        assert_eq!(r.tail, 0.0);
        assert_eq!(r.moment_bound, 0.0);
        assert!(r.report.passed());
        assert!(f.markov_bound_check(&rv(&[0.0, 0.0]), 0.0, 1).is_err());
    }

    #[test]
    fn union_bound_is_equality_for_disjoint_events_under_one_measure() {
        let f = fam(vec![vec![0.125, 0.25, 0.5, 0.125]]);
        let a = Event::from_indices(4, &[0]).unwrap();
        let b = Event::from_indices(4, &[1, 2]).unwrap();
        let r = f.union_subadditivity_check(&[a, b]).unwrap();
        assert_eq!(r.union, r.sum);
        assert!(r.report.passed());
    }

    #[test]
    fn decreasing_chain_reaches_intersection() {
        let f = fam(vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.4, 0.3, 0.2, 0.1]]);
        let chain = vec![
            Event::full(4),
            Event::from_indices(4, &[0, 1, 2]).unwrap(),
            Event::from_indices(4, &[1, 2]).unwrap(),
            Event::from_indices(4, &[2]).unwrap(),
        ];
        assert!(f.monotone_chain_check(&chain).unwrap().passed());
        let bad = vec![Event::from_indices(4, &[0]).unwrap(), Event::full(4)];
        assert!(f.monotone_chain_check(&bad).is_err());
    }

    #[test]
    fn extension_of_single_measure_is_classical_product() {
        let f = fam(vec![vec![0.25, 0.75]]);
        let step = [FiniteDistribution::bernoulli(0.4).unwrap()];
        let ext = f.extend_independent(&rv(&[0.0, 1.0]), &step, DEFAULT_EXTENSION_CAP).unwrap();
        assert_eq!(ext.family.num_measures(), 1);
        let expected = [0.25 * 0.6, 0.25 * 0.4, 0.75 * 0.6, 0.75 * 0.4];
        for (got, want) in ext.family.measures()[0].iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn extension_product_capacity_example() {
        // X Bernoulli with p in {0.3, 0.6}; Y a fair coin.
        let f = fam(vec![vec![0.7, 0.3], vec![0.4, 0.6]]);
        let step = [FiniteDistribution::bernoulli(0.5).unwrap()];
        let ext = f.extend_independent(&rv(&[0.0, 1.0]), &step, DEFAULT_EXTENSION_CAP).unwrap();
        let joint = ext.joint_event(&[1.0], &[1.0]);
        let v = ext.family.capacity(&joint).unwrap().upper;
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn extension_cap_is_enforced() {
        let f = MeasureFamily::point_masses(4).unwrap();
        let step: Vec<_> = (0..3).map(|i| FiniteDistribution::point_mass(i as f64)).collect();
        // 4 * 3^4 = 324 measures
        assert!(f.extend_independent(&rv(&[0.0; 4]), &step, 324).is_ok());
        assert!(matches!(
            f.extend_independent(&rv(&[0.0; 4]), &step, 323),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn distribution_validation() {
        assert!(FiniteDistribution::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistribution::new(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistribution::new(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(FiniteDistribution::new(vec![], vec![]).is_err());
        let d = FiniteDistribution::symmetric_pair(1.0).unwrap();
        assert_eq!(d.mean(), 0.0);
        assert_eq!(d.second_moment(), 1.0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f = fam(vec![vec![0.5, 0.5], vec![0.1, 0.9]]);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(text, r#"{"outcomes":["w1","w2"],"measures":[[0.5,0.5],[0.1,0.9]]}"#);
        let back: MeasureFamily = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        let bad = r#"{"outcomes":["a"],"measures":[[0.4]]}"#;
        assert!(serde_json::from_str::<MeasureFamily>(bad).is_err());

        let d: FiniteDistribution = serde_json::from_str(r#"{"support":[-1,1],"probs":[0.5,0.5]}"#).unwrap();
        assert_eq!(d, FiniteDistribution::symmetric_pair(1.0).unwrap());
        assert!(serde_json::from_str::<FiniteDistribution>(r#"{"support":[1,-1],"probs":[0.5,0.5]}"#).is_err());
    }
}
