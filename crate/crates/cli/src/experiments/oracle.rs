//! Backward recursion on the exact reachable grid against brute-force
//! enumeration of adapted strategies.

use serde::Serialize;
use sublin_core::lipschitz::FunctionSpec;
use sublin_core::recursion::{strategy_count, strategy_oracle, upper_value, RecursionConfig, DEFAULT_STRATEGY_CAP};
use sublin_core::SequenceModel;

use crate::config::Parameters;
use crate::report::{col, num, Outcome, Table, Verdict};
use crate::CliError;

#[derive(Debug, Serialize)]
struct Settings {
    n: Vec<usize>,
    mean_points: Vec<usize>,
    phi: FunctionSpec,
    tolerance: f64,
    strategy_cap: u64,
}

fn settings(p: &Parameters) -> Settings {
    Settings {
        n: p.n.clone().unwrap_or_else(|| vec![1, 2, 3]),
        mean_points: p.mean_points.clone().unwrap_or_else(|| vec![1, 2, 3]),
        phi: p.phi.clone().unwrap_or(FunctionSpec::Bump { center: 0.3, width: 1.0 }),
        tolerance: p.tolerance.unwrap_or(1e-10),
        strategy_cap: p.strategy_cap.unwrap_or(DEFAULT_STRATEGY_CAP),
    }
}

pub fn run(model: &SequenceModel, params: &Parameters) -> Result<Outcome, CliError> {
    let s = settings(params);
    let phi = s.phi.build()?;
    let mut table = Table::new(
        "oracle.csv",
        vec![
            col("n", "horizon"),
            col("mean_points", "means per step on the grid"),
            col("strategies", "number of adapted strategies (saturating)"),
            col("recursion", "backward recursion on the exact reachable grid"),
            col("oracle", "best expectation over all enumerated strategies"),
            col("abs_diff", "|recursion - oracle|"),
            col("status", "compared, or skipped when strategies exceed strategy_cap"),
        ],
    );
    let (mut compared, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
    for &n in &s.n {
        for &m in &s.mean_points {
            let count = strategy_count(model, n, m)?;
            if count > s.strategy_cap {
                skipped += 1;
                table.push(vec![n.to_string(), m.to_string(), count.to_string(), String::new(), String::new(), String::new(), "skipped".into()]);
                continue;
            }
            let rec = upper_value(model, n, &phi, &RecursionConfig::exact(m))?.value;
            let oracle = strategy_oracle(model, n, m, &phi)?;
            let diff = (rec - oracle).abs();
            worst = worst.max(diff);
            compared += 1;
            table.push(vec![n.to_string(), m.to_string(), count.to_string(), num(rec), num(oracle), num(diff), "compared".into()]);
        }
    }
    let mut out = Outcome { settings: serde_json::to_value(&s)?, ..Default::default() };
    out.metric("compared", compared);
    out.metric("skipped", skipped);
    out.metric("max_abs_diff", worst);
    out.verdicts.push(Verdict::at_least("compared", "number of (n, mean_points) cases compared", compared as f64, 1.0));
    out.verdicts.push(Verdict::at_most("agreement", "largest |recursion - oracle|", worst, s.tolerance));
    out.tables.push(table);
    Ok(out)
}
