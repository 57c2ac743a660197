//! Finite-difference solution of the generator equation against its
//! closed form, over a sequence of resolutions.

use serde::Serialize;
use sublin_core::lipschitz::FunctionSpec;
use sublin_core::models::maximal_expectation;
use sublin_core::pde::{error_vs_closed_form, solve, Boundary, PdeProblem};
use sublin_core::SequenceModel;

use crate::config::Parameters;
use crate::report::{col, num, Outcome, Table, Verdict};
use crate::svg::{Chart, Series};
use crate::CliError;

#[derive(Debug, Serialize)]
struct Settings {
    h: f64,
    dx: Vec<f64>,
    cfl: f64,
    region: (f64, f64),
    functions: Vec<FunctionSpec>,
    boundary: Boundary,
    max_error: f64,
    min_ratio: f64,
    exact_floor: f64,
}

fn settings(p: &Parameters) -> Settings {
    Settings {
        h: p.h.unwrap_or(0.1),
        dx: p.dx.clone().unwrap_or_else(|| vec![0.01, 0.005]),
        cfl: p.cfl.unwrap_or(1.0),
        region: p.region.unwrap_or((-1.0, 1.0)),
        functions: p.functions.clone().unwrap_or_else(|| {
            vec![
                FunctionSpec::Linear { slope: 1.0, intercept: 0.0 },
                FunctionSpec::NegAbs {},
                FunctionSpec::ClippedQuadratic { cap: 1.0 },
            ]
        }),
        boundary: p.boundary.unwrap_or_default(),
        max_error: p.max_error.unwrap_or(0.02),
        min_ratio: p.min_ratio.unwrap_or(1.5),
        exact_floor: p.exact_floor.unwrap_or(1e-10),
    }
}

pub fn run(model: &SequenceModel, params: &Parameters) -> Result<Outcome, CliError> {
    let s = settings(params);
    let eta = model.maximal();
    let mut dxs = s.dx.clone();
    dxs.sort_by(|a, b| b.total_cmp(a));
    let mut table = Table::new(
        "pde.csv",
        vec![
            col("function", "terminal data φ"),
            col("dx", "requested space step"),
            col("dt", "time step used"),
            col("nodes", "space nodes compared inside the region"),
            col("max_error", "max over compared nodes and layers of |V_num - V_exact|"),
            col("worst_t", "time of the largest error"),
            col("worst_x", "position of the largest error"),
            col("value_h0", "numerical V(h, 0)"),
            col("exact_h0", "maximal expectation E[φ(η)]"),
            col("residual_flag", "1 when the discrete residual exceeds its a-priori bound"),
        ],
    );
    let mut out = Outcome { settings: serde_json::to_value(&s)?, ..Default::default() };
    let mut chart = Chart::new("Max-norm error against resolution", "dx", "max error");
    chart.log_x = true;
    chart.log_y = true;
    for spec in &s.functions {
        let phi = spec.build()?;
        let exact = maximal_expectation(&eta, &phi)?;
        let mut errors = Vec::new();
        for &dx in &dxs {
            let problem = PdeProblem::for_region(eta, s.h, phi.clone(), s.region, dx, s.cfl)?.with_boundary(s.boundary);
            let solution = solve(&problem)?;
            let report = error_vs_closed_form(&solution, &problem, s.region, 1)?;
            table.push(vec![
                phi.label().to_string(),
                num(dx),
                num(solution.dt),
                report.nodes_compared.to_string(),
                num(report.max_error),
                num(report.worst.0),
                num(report.worst.1),
                num(solution.value_at(s.h, 0.0)),
                num(exact),
                u8::from(solution.residual_flag).to_string(),
            ]);
            out.verdicts.push(Verdict::at_most(
                format!("{}.error.dx={dx}", phi.label()),
                format!("max-norm error on [{}, {}] at dx={dx}", s.region.0, s.region.1),
                report.max_error,
                s.max_error,
            ));
            errors.push((dx, report.max_error));
        }
        for w in errors.windows(2) {
            let ((dx0, e0), (dx1, e1)) = (w[0], w[1]);
            let key = format!("{}.ratio.dx={dx0}->{dx1}", phi.label());
            if e0 <= s.exact_floor {
                // Nothing left to reduce: the coarse grid already reproduces the solution.
                out.metric(format!("{key}.skipped_exact"), e0);
                continue;
            }
            let ratio = if e1 > 0.0 { e0 / e1 } else { f64::INFINITY };
            out.metric(key.clone(), ratio);
            out.verdicts.push(Verdict::at_least(
                key,
                format!("error reduction from dx={dx0} to dx={dx1}"),
                ratio,
                s.min_ratio,
            ));
        }
        // Exact families have errors at rounding level; lift them onto the log axis.
        chart.series.push(
            Series::line(phi.label(), errors.iter().map(|&(dx, e)| (dx, e.max(1e-16))).collect()).with_markers(),
        );
    }
    chart.references.push((format!("max {}", s.max_error), s.max_error));
    out.plots.push(("error_vs_resolution.svg".into(), chart.render()));
    out.tables.push(table);
    Ok(out)
}
