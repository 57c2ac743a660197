use rayon::prelude::*;

use super::{check_finite, mean_grid_gap, reachable_ranges, GridReport, RecursionConfig, RecursionResult, ValueGrid};
use crate::error::{input, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::StepModel;

const GOLDEN_ITERATIONS: usize = 24;

/// Maximum of `f` over `[a, b]` by golden-section search (the largest value
/// seen, so never below `f(a)` or `f(b)` if those were probed elsewhere).
fn golden_max(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

/// Largest slope between neighbouring nodes.
fn node_slope(grid: &ValueGrid) -> f64 {
    grid.values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        / grid.spacing
}

fn stage_bounds(range: (f64, f64)) -> (f64, f64) {
    let (lo, hi) = range;
    let scale = lo.abs().max(hi.abs()).max(1.0);
    if hi - lo < 1e-9 * scale {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub(super) fn run(
    steps: &[StepModel],
    phi: &LipschitzFn,
    nodes: usize,
    domain: Option<(f64, f64)>,
    clamp: bool,
    config: &RecursionConfig,
) -> Result<RecursionResult> {
    let n = steps.len();
    let nf = n as f64;
    let lip = phi.lipschitz() / nf;
    let ranges = reachable_ranges(steps);

    let mut truncation_term = 0.0;
    let mut bounds = Vec::with_capacity(n);
    for (i, &range) in ranges.iter().enumerate().skip(1) {
        match domain {
            Some((a, b)) => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return input(format!("grid domain needs finite lo < hi, got [{a}, {b}]"));
                }
                let overflow = (a - range.0).max(range.1 - b).max(0.0);
                if overflow > 0.0 {
                    if !clamp {
                        return input(format!(
                            "grid domain [{a}, {b}] does not cover reachable sums [{}, {}] at stage {i}",
                            range.0, range.1
                        ));
                    }
                    truncation_term += lip * overflow;
                }
                bounds.push((a, b));
            }
            None => bounds.push(stage_bounds(range)),
        }
    }

    let (a, b) = bounds[n - 1];
    let mut next = ValueGrid::new(a, b, nodes)?;
    let xs: Vec<f64> = next.nodes().collect();
    for (v, x) in next.values.iter_mut().zip(xs) {
        *v = check_finite(phi.eval(x / nf), n)?;
    }

    let mut interpolation_term = 0.0;
    let mut mean_term = 0.0;
    let mut spacing: f64 = 0.0;
    let mut mu_points = 0;
    for i in (1..=n).rev() {
        let step = &steps[i - 1];
        let grid = step.mean_grid(config.mean_points);
        mu_points = mu_points.max(grid.len());
        spacing = spacing.max(next.spacing);
        interpolation_term += 0.5 * lip * next.spacing;
        let slope = lip.max(node_slope(&next));

        let targets: Vec<f64> = if i == 1 {
            vec![0.0]
        } else {
            let (a, b) = bounds[i - 2];
            ValueGrid::new(a, b, nodes)?.nodes().collect()
        };
        let lookup = &next;
        let rows: Vec<(f64, f64)> = targets
            .par_iter()
            .map(|&x| {
                let eval = |mu: f64| -> f64 { step.noise.iter().map(|(z, p)| p * lookup.interpolate(x + mu + z)).sum() };
                let f: Vec<f64> = grid.iter().map(|&mu| eval(mu)).collect();
                let (k, mut best) = f
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
                if config.refine && grid.len() > 1 {
                    let a = grid[k.saturating_sub(1)];
                    let b = grid[(k + 1).min(grid.len() - 1)];
                    best = best.max(golden_max(a, b, eval));
                }
                let gap = mean_grid_gap(&grid, &f, best, slope, step.mean_lo, step.mean_hi);
                (best, gap)
            })
            .collect();
        mean_term += rows.iter().map(|r| r.1).fold(0.0, f64::max);

        if i == 1 {
            let value = check_finite(rows[0].0, 0)?;
            return Ok(RecursionResult {
                value,
                error_bound: interpolation_term + mean_term + truncation_term,
                n,
                grid: GridReport {
                    mode: "uniform".into(),
                    spacing,
                    domain: bounds[n - 1],
                    mu_grid_points: mu_points,
                    nodes,
                    interpolation_term,
                    mean_term,
                    truncation_term,
                },
            });
        }
        let (a, b) = bounds[i - 2];
        let mut prev = ValueGrid::new(a, b, nodes)?;
        for (v, r) in prev.values.iter_mut().zip(rows) {
            *v = check_finite(r.0, i - 1)?;
        }
        next = prev;
    }
    unreachable!("loop returns at stage 1")
}
