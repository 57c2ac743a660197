//! Convergence of `E[φ(S_n/n)]` to the maximal expectation.

use serde::Serialize;
use sublin_core::lipschitz::FunctionSpec;
use sublin_core::models::maximal_expectation;
use sublin_core::recursion::{lower_value, upper_value, RecursionConfig};
use sublin_core::SequenceModel;

use crate::config::Parameters;
use crate::report::{col, num, Outcome, Table, Verdict};
use crate::svg::{Chart, Series};
use crate::CliError;

#[derive(Debug, Serialize)]
struct Settings {
    n: Vec<usize>,
    phi: FunctionSpec,
    recursion: RecursionConfig,
    gap_tolerance: f64,
}

fn settings(p: &Parameters) -> Settings {
    Settings {
        n: p.n.clone().unwrap_or_else(|| vec![8, 16, 32, 64, 128]),
        phi: p.phi.clone().unwrap_or(FunctionSpec::Bump { center: 0.3, width: 1.0 }),
        recursion: p.recursion.clone().unwrap_or_default(),
        gap_tolerance: p.gap_tolerance.unwrap_or(0.05),
    }
}

pub fn run(model: &SequenceModel, params: &Parameters) -> Result<Outcome, CliError> {
    let s = settings(params);
    let phi = s.phi.build()?;
    let eta = model.maximal();
    let limit = maximal_expectation(&eta, &phi)?;
    let floor = -maximal_expectation(&eta, &phi.negated())?;

    let mut table = Table::new(
        "lln.csv",
        vec![
            col("n", "horizon"),
            col("value", "upper expectation E[φ(S_n/n)] from the backward recursion"),
            col("error_bound", "certified bound on |value - exact upper expectation|"),
            col("gap", "|value - sup over [mu_lo, mu_hi] of φ|"),
            col("lower_value", "lower expectation -E[-φ(S_n/n)]"),
            col("lower_gap", "|lower_value - inf over [mu_lo, mu_hi] of φ|"),
            col("grid", "discretization used (exact, uniform or lattice)"),
            col("nodes", "largest number of grid nodes in any stage"),
        ],
    );
    let mut rows = Vec::new();
    for &n in &s.n {
        let up = upper_value(model, n, &phi, &s.recursion)?;
        let lo = lower_value(model, n, &phi, &s.recursion)?;
        let gap = (up.value - limit).abs();
        table.push(vec![
            n.to_string(),
            num(up.value),
            num(up.error_bound),
            num(gap),
            num(lo.value),
            num((lo.value - floor).abs()),
            up.grid.mode.clone(),
            up.grid.nodes.to_string(),
        ]);
        rows.push((n, gap, up.error_bound));
    }

    let mut out = Outcome { settings: serde_json::to_value(&s)?, ..Default::default() };
    out.metric("limit", limit);
    out.metric("lower_limit", floor);
    out.metric("gaps", rows.iter().map(|r| r.1).collect::<Vec<_>>());
    out.metric("error_bounds", rows.iter().map(|r| r.2).collect::<Vec<_>>());
    if let Some(&n_max) = s.n.iter().max() {
        if n_max >= 16 {
            out.metric("hypotheses", model.validate_hypotheses(n_max)?);
        }
    }

    let &(n_last, gap_last, eb_last) = rows.last().expect("n is nonempty");
    out.verdicts.push(Verdict::at_most(
        "final_gap",
        format!("gap at n={n_last} minus its error bound"),
        gap_last - eb_last,
        s.gap_tolerance,
    ));
    let excess = rows
        .windows(2)
        .map(|w| w[1].1 - w[0].1 - w[0].2 - w[1].2)
        .fold(f64::NEG_INFINITY, f64::max);
    if rows.len() > 1 {
        out.metric("monotonicity_excess", excess);
        out.verdicts.push(Verdict::at_most(
            "gap_non_increasing",
            "largest increase of the gap between consecutive n beyond both error bounds",
            excess,
            0.0,
        ));
    }

    let mut chart = Chart::new("Convergence to the maximal expectation", "n", "|value - limit|");
    chart.log_x = true;
    chart.log_y = true;
    chart.series.push(Series::line("gap", rows.iter().map(|r| (r.0 as f64, r.1)).collect()).with_markers());
    chart.series.push(Series::line("error bound", rows.iter().map(|r| (r.0 as f64, r.2)).collect()));
    out.plots.push(("convergence.svg".into(), chart.render()));
    out.tables.push(table);
    Ok(out)
}
