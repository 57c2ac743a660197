//! Path witnesses for the strong law under explicit nature policies.

use serde::Serialize;
use sublin_core::montecarlo::{simulate, slln_statistics, subsequence_check, PathBatch, Policy, Subsequence};
use sublin_core::SequenceModel;

use crate::config::{NamedPolicy, Parameters};
use crate::report::{col, num, Outcome, Table, Verdict};
use crate::svg::{Chart, Series};
use crate::CliError;

pub const DEFAULT_HORIZON: usize = 10_000;
const CHECKPOINTS: usize = 64;

#[derive(Debug, Serialize)]
struct Settings {
    seed: u64,
    horizon: usize,
    paths: usize,
    eps: f64,
    band_start: usize,
    tail_start: usize,
    target: f64,
    policies: Vec<NamedPolicy>,
    band_fraction: f64,
    reach_fraction: f64,
    approach_fraction: f64,
    fan_paths: usize,
}

fn settings(p: &Parameters) -> Settings {
    let horizon = p.horizon.unwrap_or(DEFAULT_HORIZON);
    Settings {
        seed: p.seed.unwrap_or(20_240_601),
        horizon,
        paths: p.paths.unwrap_or(1000),
        eps: p.eps.unwrap_or(0.05),
        band_start: p.band_start.unwrap_or((horizon / 10).max(1)),
        tail_start: p.tail_start.unwrap_or((horizon / 2).max(1)),
        target: p.target.unwrap_or(0.0),
        policies: p.policies.clone().unwrap_or_else(|| {
            Policy::bundled().into_iter().map(|(name, policy)| NamedPolicy { name: name.into(), policy }).collect()
        }),
        band_fraction: p.band_fraction.unwrap_or(0.99),
        reach_fraction: p.reach_fraction.unwrap_or(0.99),
        approach_fraction: p.approach_fraction.unwrap_or(0.95),
        fan_paths: p.fan_paths.unwrap_or(20),
    }
}

/// Roughly log-spaced indices `1..=n`.
fn checkpoints(n: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (0..CHECKPOINTS)
        .map(|i| (n as f64).powf(i as f64 / (CHECKPOINTS - 1) as f64).round() as usize)
        .map(|k| k.clamp(1, n))
        .collect();
    ks.dedup();
    ks
}

fn fan(batch: &PathBatch, count: usize, ks: &[usize]) -> Vec<Series> {
    (0..count.min(batch.paths))
        .map(|p| Series::line(format!("path {p}"), ks.iter().map(|&k| (k as f64, batch.running_mean(p, k))).collect()))
        .collect()
}

pub fn run(model: &SequenceModel, params: &Parameters) -> Result<Outcome, CliError> {
    let s = settings(params);
    let ks = checkpoints(s.horizon);
    let mut summary = Table::new(
        "slln_summary.csv",
        vec![
            col("policy", "policy name"),
            col("paths", "number of simulated paths"),
            col("in_band", "fraction of paths with S_k/k in [mu_lo - eps, mu_hi + eps] for every k >= band_start"),
            col("reaches_upper", "fraction of paths whose max of S_k/k over k >= tail_start is at least mu_hi - eps"),
            col("approaches_target", "fraction of paths coming within eps of target for some k >= tail_start"),
            col("subsequence_hits", "fraction of paths within eps of target at some k = 2^j >= tail_start"),
            col("admissibility_violations", "chosen means outside their interval"),
            col("mean_final", "average of S_n/n over paths"),
        ],
    );
    let mut fan_table = Table::new(
        "slln_paths.csv",
        vec![
            col("policy", "policy name"),
            col("path", "path index"),
            col("k", "time index"),
            col("running_mean", "S_k/k"),
        ],
    );
    let mut out = Outcome { settings: serde_json::to_value(&s)?, ..Default::default() };
    let mut fan_series = None;
    for named in &s.policies {
        let batch = simulate(model, &named.policy, s.horizon, s.paths, s.seed)?;
        let band = slln_statistics(&batch, model, s.eps, s.band_start, s.target)?;
        let tail = slln_statistics(&batch, model, s.eps, s.tail_start, s.target)?;
        let late: Vec<usize> = Subsequence::Powers { base: 2 }
            .indices(s.horizon)?
            .into_iter()
            .filter(|&k| k >= s.tail_start)
            .collect();
        let hits = if late.is_empty() {
            f64::NAN
        } else {
            let r = subsequence_check(&batch, &Subsequence::Explicit { indices: late }, s.target, s.eps)?;
            r.within_eps as f64 / s.paths as f64
        };
        let finals = batch.final_means();
        let mean_final = finals.iter().sum::<f64>() / finals.len() as f64;
        summary.push(vec![
            named.name.clone(),
            s.paths.to_string(),
            num(band.fraction_in_band()),
            num(tail.fraction_reaching_upper()),
            num(tail.fraction_approaching_target()),
            num(hits),
            batch.admissibility_violations.to_string(),
            num(mean_final),
        ]);
        for p in 0..s.fan_paths.min(s.paths) {
            for &k in &ks {
                fan_table.push(vec![named.name.clone(), p.to_string(), k.to_string(), num(batch.running_mean(p, k))]);
            }
        }

        out.verdicts.push(Verdict::at_least(
            format!("{}.in_band", named.name),
            format!("fraction of paths staying in [{}, {}] from k={}", model.mu_lo - s.eps, model.mu_hi + s.eps, s.band_start),
            band.fraction_in_band(),
            s.band_fraction,
        ));
        out.verdicts.push(Verdict::at_most(
            format!("{}.admissible", named.name),
            "chosen means outside their interval",
            batch.admissibility_violations as f64,
            0.0,
        ));
        if named.policy == Policy::Upper {
            out.verdicts.push(Verdict::at_least(
                format!("{}.reaches_upper", named.name),
                format!("fraction of paths with tail max of S_k/k >= {} from k={}", model.mu_hi - s.eps, s.tail_start),
                tail.fraction_reaching_upper(),
                s.reach_fraction,
            ));
        }
        if named.policy == (Policy::Target { b: s.target }) {
            out.verdicts.push(Verdict::at_least(
                format!("{}.approaches_target", named.name),
                format!("fraction of paths within {} of {} for some k >= {}", s.eps, s.target, s.tail_start),
                tail.fraction_approaching_target(),
                s.approach_fraction,
            ));
        }
        if fan_series.is_none() || named.policy == Policy::Upper {
            fan_series = Some((named.name.clone(), fan(&batch, s.fan_paths, &ks)));
        }
    }

    if let Some((name, series)) = fan_series {
        let mut chart = Chart::new(format!("Running means under policy {name}"), "k", "S_k/k");
        chart.log_x = true;
        chart.legend = false;
        chart.series = series;
        chart.references.push(("mu_hi".into(), model.mu_hi));
        chart.references.push(("mu_lo".into(), model.mu_lo));
        out.plots.push(("path_fan.svg".into(), chart.render()));
    }
    out.tables.push(summary);
    out.tables.push(fan_table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_cover_both_ends() {
        let ks = checkpoints(10_000);
        assert_eq!(ks[0], 1);
        assert_eq!(*ks.last().unwrap(), 10_000);
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
    }
}
