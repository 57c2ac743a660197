use rayon::prelude::*;

use super::{check_finite, mean_grid_gap, GridReport, RecursionResult};
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::StepModel;

/// Raw sums merged per stage before deduplication, relative to the cap.
const RAW_FACTOR: usize = 16;

/// Reachable sums per stage with an `m`-point mean grid, or `None` when a
/// stage exceeds `max_points`.
fn reachable_sets(steps: &[StepModel], grids: &[Vec<f64>], max_points: usize) -> Option<Vec<Vec<f64>>> {
    let mut sets = vec![vec![0.0]];
    for (step, grid) in steps.iter().zip(grids) {
        let prev = sets.last().expect("stage 0 present");
        let raw = prev.len() * grid.len() * step.noise.support().len();
        if raw > RAW_FACTOR.saturating_mul(max_points) {
            return None;
        }
        // Each (mu, z) shift of `prev` is sorted; fold them in by linear
        // merges, dropping duplicates as they meet.
        let mut next: Vec<f64> = Vec::new();
        let mut run = Vec::with_capacity(prev.len());
        for &mu in grid {
            for &z in step.noise.support() {
                run.clear();
                run.extend(prev.iter().map(|&x| x + mu + z));
                next = merge_dedup(&next, &run);
                if next.len() > max_points {
                    return None;
                }
            }
        }
        sets.push(next);
    }
    Some(sets)
}

/// Sorted union of two non-decreasing slices, without repeats.
fn merge_dedup(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x.total_cmp(&y).is_le() => {
                i += 1;
                x
            }
            (_, Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, None) => unreachable!(),
        };
        if out.last().is_none_or(|l: &f64| l.total_cmp(&v).is_lt()) {
            out.push(v);
        }
    }
    out
}

/// Sums per parallel work unit; cursors are re-seated by binary search once
/// per chunk.
const CHUNK: usize = 1024;

/// Index of `target` in `set`, advancing `cursor` monotonically. The sums
/// `x + mu + z` for a fixed `(mu, z)` are non-decreasing in `x`, so each
/// cursor only moves forward within a chunk.
fn seek(set: &[f64], cursor: &mut usize, target: f64, stage: usize) -> Result<usize> {
    while *cursor < set.len() && set[*cursor].total_cmp(&target).is_lt() {
        *cursor += 1;
    }
    match set.get(*cursor) {
        Some(v) if v.total_cmp(&target).is_eq() => Ok(*cursor),
        _ => Err(Error::Numeric(format!("sum {target} missing from reachable set at stage {stage}"))),
    }
}

/// Exact enumeration; `Ok(None)` when the reachable set is too large.
pub(super) fn run(
    steps: &[StepModel],
    phi: &LipschitzFn,
    mean_points: usize,
    max_points: usize,
) -> Result<Option<RecursionResult>> {
    let n = steps.len();
    let grids: Vec<Vec<f64>> = steps.iter().map(|s| s.mean_grid(mean_points)).collect();
    let Some(sets) = reachable_sets(steps, &grids, max_points) else {
        return Ok(None);
    };
    let lip = phi.lipschitz() / n as f64;
    let nf = n as f64;

    let mut values = sets[n]
        .iter()
        .map(|&s| check_finite(phi.eval(s / nf), n))
        .collect::<Result<Vec<f64>>>()?;
    let mut mean_term = 0.0;
    for i in (1..=n).rev() {
        let step = &steps[i - 1];
        let grid = &grids[i - 1];
        let (set, vals) = (&sets[i], &values);
        let noise: Vec<(f64, f64)> = step.noise.iter().collect();
        let rows = sets[i - 1]
            .par_chunks(CHUNK)
            .map(|chunk| {
                let x0 = chunk[0];
                let mut cursors: Vec<usize> = grid
                    .iter()
                    .flat_map(|&mu| noise.iter().map(move |&(z, _)| x0 + mu + z))
                    .map(|t| set.partition_point(|p| p.total_cmp(&t).is_lt()))
                    .collect();
                let mut out = Vec::with_capacity(chunk.len());
                let mut f = vec![0.0; grid.len()];
                for &x in chunk {
                    let mut c = 0;
                    for (fj, &mu) in f.iter_mut().zip(grid) {
                        let mut acc = 0.0;
                        for &(z, p) in &noise {
                            acc += p * vals[seek(set, &mut cursors[c], x + mu + z, i)?];
                            c += 1;
                        }
                        *fj = acc;
                    }
                    let best = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let gap = mean_grid_gap(grid, &f, best, lip, step.mean_lo, step.mean_hi);
                    out.push((check_finite(best, i - 1)?, gap));
                }
                Ok(out)
            })
            .collect::<Result<Vec<Vec<(f64, f64)>>>>()?
            .concat();
        mean_term += rows.iter().map(|r| r.1).fold(0.0, f64::max);
        values = rows.into_iter().map(|r| r.0).collect();
    }

    let last = &sets[n];
    Ok(Some(RecursionResult {
        value: values[0],
        error_bound: mean_term,
        n,
        grid: GridReport {
            mode: "exact".into(),
            spacing: 0.0,
            domain: (last[0], last[last.len() - 1]),
            mu_grid_points: grids.iter().map(Vec::len).max().unwrap_or(0),
            nodes: sets.iter().map(Vec::len).max().unwrap_or(0),
            interpolation_term: 0.0,
            mean_term,
            truncation_term: 0.0,
        },
    }))
}
