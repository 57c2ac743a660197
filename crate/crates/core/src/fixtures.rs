//! Bundled models used by the CLI and the test suites.

use serde::Serialize;

use crate::error::{input, Result};
use crate::finite_engine::{FiniteDistribution, MeasureFamily};
use crate::models::{RuleKind, SequenceModel, StepModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    /// A [`SequenceModel`].
    Sequence,
    /// A [`MeasureFamily`] for the finite engine.
    Family,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fixture {
    pub name: &'static str,
    pub kind: FixtureKind,
    pub description: &'static str,
}

const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "iid_peng",
        kind: FixtureKind::Sequence,
        description: "identical steps with means in [-1, 1] and noise ±0.5; the identically distributed \
                      law of large numbers and the strong law (limsup of S_n/n equals the upper mean, cluster points fill the interval)",
    },
    Fixture {
        name: "alternating_sqrt",
        kind: FixtureKind::Sequence,
        description: "means in [-1, 1 + (-1)^i/sqrt(i)], noise ±1; non-identical steps whose Cesàro averages \
                      converge at rate 1/sqrt(n): the convergence law E[φ(S_n/n)] -> sup φ and the weak law",
    },
    Fixture {
        name: "harmonic",
        kind: FixtureKind::Sequence,
        description: "means in [-1, 1 + 1/i], noise ±1; non-identical steps with a log(n)/n Cesàro drift: \
                      the convergence law E[φ(S_n/n)] -> sup φ",
    },
    Fixture {
        name: "degenerate",
        kind: FixtureKind::Sequence,
        description: "mean 0 and no noise; the classical deterministic case where every law of large numbers is exact",
    },
    Fixture {
        name: "two_point_ambiguity",
        kind: FixtureKind::Family,
        description: "two outcomes under two measures; sublinear expectation axioms and capacity duality",
    },
    Fixture {
        name: "die_band",
        kind: FixtureKind::Family,
        description: "a six-sided die under three tilted measures; sublinear expectation axioms and capacity duality",
    },
];

/// All bundled fixtures with descriptions.
pub fn list_fixtures() -> &'static [Fixture] {
    FIXTURES
}

fn coin(a: f64) -> FiniteDistribution {
    FiniteDistribution::symmetric_pair(a).expect("positive half-width")
}

/// The named sequence model.
pub fn sequence_fixture(name: &str) -> Result<SequenceModel> {
    match name {
        "iid_peng" => SequenceModel::constant(StepModel::new(-1.0, 1.0, coin(0.5))?, 0.0, 2.0),
        "alternating_sqrt" => SequenceModel::from_rule(RuleKind::AlternatingSqrt, coin(1.0), 1.0, -1.0, 1.0, 2.0, 5.0),
        "harmonic" => SequenceModel::from_rule(RuleKind::Harmonic, coin(1.0), 1.0, -1.0, 1.0, 1.0, 6.0),
        "degenerate" => SequenceModel::constant(StepModel::new(0.0, 0.0, FiniteDistribution::point_mass(0.0))?, 0.0, 1.0),
        _ => input(format!("unknown sequence fixture {name:?}")),
    }
}

/// The named finite measure family.
pub fn family_fixture(name: &str) -> Result<MeasureFamily> {
    match name {
        "two_point_ambiguity" => MeasureFamily::unlabelled(vec![vec![0.3, 0.7], vec![0.6, 0.4]]),
        "die_band" => {
            let fair = vec![1.0 / 6.0; 6];
            let low = vec![0.25, 0.2, 0.2, 0.15, 0.1, 0.1];
            let high = vec![0.1, 0.1, 0.15, 0.2, 0.2, 0.25];
            MeasureFamily::new((1..=6).map(|k| k.to_string()).collect(), vec![fair, low, high])
        }
        _ => input(format!("unknown family fixture {name:?}")),
    }
}
