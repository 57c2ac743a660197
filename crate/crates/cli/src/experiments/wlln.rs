//! Capacity brackets for the running mean leaving `[μ̲−ε, μ̄+ε]`.

use serde::Serialize;
use sublin_core::recursion::{mean_event_capacity, MeanEvent, RecursionConfig, DEFAULT_LATTICE_SPACING};
use sublin_core::SequenceModel;

use crate::config::Parameters;
use crate::report::{col, num, Outcome, Relation, Table, Verdict};
use crate::svg::{Chart, Series};
use crate::CliError;

#[derive(Debug, Serialize)]
struct Settings {
    n: Vec<usize>,
    eps: f64,
    delta: f64,
    recursion: RecursionConfig,
    tail_max: f64,
    band_min: f64,
}

fn settings(p: &Parameters) -> Settings {
    Settings {
        n: p.n.clone().unwrap_or_else(|| vec![32, 64, 128]),
        eps: p.eps.unwrap_or(0.2),
        delta: p.delta.unwrap_or(0.05),
        recursion: p.recursion.clone().unwrap_or_else(|| RecursionConfig::lattice(DEFAULT_LATTICE_SPACING)),
        tail_max: p.tail_max.unwrap_or(0.05),
        band_min: p.band_min.unwrap_or(0.9),
    }
}

struct Row {
    n: usize,
    below: f64,
    above: f64,
    band: f64,
}

pub fn run(model: &SequenceModel, params: &Parameters) -> Result<Outcome, CliError> {
    let s = settings(params);
    let (lo, hi) = (model.mu_lo - s.eps, model.mu_hi + s.eps);
    let mut table = Table::new(
        "wlln.csv",
        vec![
            col("n", "horizon"),
            col("below_upper_lo", "lower bracket of V(S_n/n <= mu_lo - eps)"),
            col("below_upper_hi", "upper bracket of V(S_n/n <= mu_lo - eps)"),
            col("above_upper_lo", "lower bracket of V(S_n/n >= mu_hi + eps)"),
            col("above_upper_hi", "upper bracket of V(S_n/n >= mu_hi + eps)"),
            col("band_lower_lo", "lower bracket of v(mu_lo - eps < S_n/n < mu_hi + eps)"),
            col("band_lower_hi", "upper bracket of v(mu_lo - eps < S_n/n < mu_hi + eps)"),
            col("error_bound", "largest recursion error bound among the sandwich evaluations"),
        ],
    );
    let mut rows = Vec::new();
    for &n in &s.n {
        let below = mean_event_capacity(model, n, MeanEvent::AtMost { a: lo }, s.delta, &s.recursion)?;
        let above = mean_event_capacity(model, n, MeanEvent::AtLeast { a: hi }, s.delta, &s.recursion)?;
        let band = mean_event_capacity(model, n, MeanEvent::Between { lo, hi }, s.delta, &s.recursion)?;
        let eb = below.error_bound.max(above.error_bound).max(band.error_bound);
        table.push(vec![
            n.to_string(),
            num(below.upper_lo),
            num(below.upper_hi),
            num(above.upper_lo),
            num(above.upper_hi),
            num(band.lower_lo),
            num(band.lower_hi),
            num(eb),
        ]);
        rows.push(Row { n, below: below.upper_hi, above: above.upper_hi, band: band.lower_lo });
    }

    let mut out = Outcome { settings: serde_json::to_value(&s)?, ..Default::default() };
    out.metric("interval", (lo, hi));
    let last = rows.last().expect("n is nonempty");
    out.verdicts.push(Verdict::at_most(
        "lower_tail",
        format!("upper bracket of V(S_n/n <= {lo}) at n={}", last.n),
        last.below,
        s.tail_max,
    ));
    out.verdicts.push(Verdict::at_most(
        "upper_tail",
        format!("upper bracket of V(S_n/n >= {hi}) at n={}", last.n),
        last.above,
        s.tail_max,
    ));
    out.verdicts.push(Verdict::at_least(
        "band",
        format!("lower bracket of v({lo} < S_n/n < {hi}) at n={}", last.n),
        last.band,
        s.band_min,
    ));
    if rows.len() > 1 {
        let step = rows.windows(2).map(|w| w[1].band - w[0].band).fold(f64::INFINITY, f64::min);
        out.metric("band_min_increment", step);
        out.verdicts.push(Verdict::new(
            "band_increasing",
            "smallest increase of the band lower bracket between consecutive n",
            step,
            Relation::Above,
            0.0,
        ));
    }

    let mut chart = Chart::new("Capacity brackets against n", "n", "capacity");
    chart.log_x = true;
    chart.series.push(Series::line("V(below) upper", rows.iter().map(|r| (r.n as f64, r.below)).collect()).with_markers());
    chart.series.push(Series::line("V(above) upper", rows.iter().map(|r| (r.n as f64, r.above)).collect()).with_markers());
    chart.series.push(Series::line("v(band) lower", rows.iter().map(|r| (r.n as f64, r.band)).collect()).with_markers());
    chart.references.push((format!("tail {}", s.tail_max), s.tail_max));
    chart.references.push((format!("band {}", s.band_min), s.band_min));
    out.plots.push(("capacity.svg".into(), chart.render()));
    out.tables.push(table);
    Ok(out)
}
