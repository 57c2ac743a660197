//! Axiom, duality and tail-bound checks on a finite measure family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sublin_core::finite_engine::{CheckReport, Event, RandomVariable};
use sublin_core::MeasureFamily;

use crate::config::Parameters;
use crate::report::{col, num, Outcome, Table, Verdict};
use crate::CliError;

#[derive(Debug, Serialize)]
struct Settings {
    seed: u64,
    samples: usize,
    threshold: f64,
    moment_order: u32,
}

fn settings(p: &Parameters) -> Settings {
    Settings {
        seed: p.seed.unwrap_or(1),
        samples: p.samples.unwrap_or(64),
        threshold: p.threshold.unwrap_or(1.0),
        moment_order: p.moment_order.unwrap_or(2),
    }
}

/// Half integer-valued (so ties and exact bounds occur), half continuous.
fn samples(k: usize, count: usize, seed: u64) -> Vec<RandomVariable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            RandomVariable::new(
                (0..k)
                    .map(|_| if i % 2 == 0 { f64::from(rng.gen_range(-3..=3)) } else { rng.gen_range(-3.0..3.0) })
                    .collect(),
            )
        })
        .collect()
}

pub fn run(family: &MeasureFamily, params: &Parameters) -> Result<Outcome, CliError> {
    let s = settings(params);
    let k = family.num_outcomes();
    let vars = samples(k, s.samples, s.seed);

    let mut groups: Vec<(&str, CheckReport)> = vec![
        ("expectation_axioms", family.check_axioms(&vars)),
        ("capacity_axioms", family.check_capacity_axioms()?),
    ];
    let mut markov = CheckReport::default();
    let mut tight = 0usize;
    for x in &vars {
        let r = family.markov_bound_check(x, s.threshold, s.moment_order)?;
        tight += usize::from(r.is_tight());
        markov.merge(r.report);
    }
    groups.push(("tail_bounds", markov));
    let singletons: Vec<Event> = (0..k).map(|i| Event::from_indices(k, &[i])).collect::<Result<_, _>>()?;
    groups.push(("union_bound", family.union_subadditivity_check(&singletons)?.report));

    let mut checks = Table::new(
        "checks.csv",
        vec![
            col("group", "family of properties checked"),
            col("checks", "number of comparisons"),
            col("violations", "comparisons failing beyond 1e-12"),
        ],
    );
    let mut violations = Table::new(
        "violations.csv",
        vec![
            col("group", "family of properties checked"),
            col("property", "property that failed"),
            col("excess", "amount by which the inequality or identity failed"),
            col("detail", "the values involved"),
        ],
    );
    let (mut total_checks, mut total_violations) = (0, 0);
    for (name, report) in &groups {
        checks.push(vec![name.to_string(), report.checks.to_string(), report.violations.len().to_string()]);
        for v in &report.violations {
            violations.push(vec![name.to_string(), v.property.to_string(), num(v.excess), v.detail.clone()]);
        }
        total_checks += report.checks;
        total_violations += report.violations.len();
    }

    let mut out = Outcome { settings: serde_json::to_value(&s)?, ..Default::default() };
    out.metric("outcomes", k);
    out.metric("measures", family.num_measures());
    out.metric("checks", total_checks);
    out.metric("violations", total_violations);
    out.metric("tight_moment_bounds", tight);
    out.verdicts.push(Verdict::at_most("violations", "checks failing beyond 1e-12", total_violations as f64, 0.0));
    out.tables.push(checks);
    out.tables.push(violations);
    Ok(out)
}
