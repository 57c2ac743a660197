use std::collections::VecDeque;

use rayon::prelude::*;

use super::{check_finite, GridReport, RecursionResult};
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::StepModel;

/// One step expressed in lattice units.
struct LatticeStep {
    /// Mean choices `m_lo..=m_hi` (times the spacing).
    m_lo: i64,
    m_hi: i64,
    /// Worst distance from a mean in the interval to its nearest choice.
    choice_gap: f64,
    /// `(k0, w, p)`: the noise atom sits at `(k0 + w)·h` with probability `p`.
    offsets: Vec<(i64, f64, f64)>,
    fractional: bool,
}

impl LatticeStep {
    fn new(step: &StepModel, h: f64) -> Self {
        let (lo, hi) = (step.mean_lo, step.mean_hi);
        let mut m_lo = (lo / h).ceil() as i64;
        let mut m_hi = (hi / h).floor() as i64;
        let choice_gap = if m_lo > m_hi {
            let m = (0.5 * (lo + hi) / h).round() as i64;
            m_lo = m;
            m_hi = m;
            let c = m as f64 * h;
            (c - lo).abs().max((hi - c).abs())
        } else {
            let inner = if m_hi > m_lo { 0.5 * h } else { 0.0 };
            (m_lo as f64 * h - lo).max(hi - m_hi as f64 * h).max(inner)
        };
        let offsets: Vec<(i64, f64, f64)> = step
            .noise
            .iter()
            .map(|(z, p)| {
                let t = z / h;
                let k0 = t.floor();
                (k0 as i64, t - k0, p)
            })
            .collect();
        let fractional = offsets.iter().any(|o| o.1 != 0.0);
        Self { m_lo, m_hi, choice_gap, offsets, fractional }
    }

    fn width(&self) -> usize {
        (self.m_hi - self.m_lo + 1) as usize
    }

    fn reach(&self) -> (i64, i64) {
        let lo = self.offsets.iter().map(|o| o.0).min().unwrap_or(0);
        let hi = self.offsets.iter().map(|o| o.0 + i64::from(o.1 != 0.0)).max().unwrap_or(0);
        (self.m_lo + lo, self.m_hi + hi)
    }
}

/// `out[k] = max(w[k..k + width])` with a monotone deque.
fn sliding_max(w: &[f64], width: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len() + width - 1, w.len());
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(width.min(w.len()));
    for (j, &v) in w.iter().enumerate() {
        while dq.back().is_some_and(|&b| w[b] <= v) {
            dq.pop_back();
        }
        dq.push_back(j);
        if j + 1 >= width {
            let start = j + 1 - width;
            while dq.front().is_some_and(|&f| f < start) {
                dq.pop_front();
            }
            out[start] = w[*dq.front().expect("window is non-empty")];
        }
    }
}

pub(super) fn run(steps: &[StepModel], phi: &LipschitzFn, h: f64, max_nodes: usize) -> Result<RecursionResult> {
    let n = steps.len();
    let nf = n as f64;
    let lip = phi.lipschitz() / nf;
    let lattice: Vec<LatticeStep> = steps.iter().map(|s| LatticeStep::new(s, h)).collect();

    let mut ranges = vec![(0i64, 0i64)];
    let mut nodes = 1usize;
    for (i, ls) in lattice.iter().enumerate() {
        let (a, b) = ls.reach();
        let prev = ranges[i];
        let next = (prev.0 + a, prev.1 + b);
        let len = (next.1 - next.0 + 1) as usize;
        if len > max_nodes {
            return Err(Error::Resource(format!(
                "stage {} needs {len} lattice nodes, cap is {max_nodes}",
                i + 1
            )));
        }
        nodes = nodes.max(len);
        ranges.push(next);
    }

    let (tn_lo, tn_hi) = ranges[n];
    let mut values = (tn_lo..=tn_hi)
        .into_par_iter()
        .map(|k| check_finite(phi.eval(k as f64 * h / nf), n))
        .collect::<Result<Vec<f64>>>()?;

    let mut mean_term = 0.0;
    let mut interpolation_term = 0.0;
    for i in (1..=n).rev() {
        let ls = &lattice[i - 1];
        let (cur_lo, _) = ranges[i];
        let (prev_lo, prev_hi) = ranges[i - 1];
        let prev_len = (prev_hi - prev_lo + 1) as usize;
        let width = ls.width();
        let base = prev_lo + ls.m_lo;
        let cur = &values;
        let w: Vec<f64> = (0..prev_len + width - 1)
            .into_par_iter()
            .map(|t| {
                let k = base + t as i64;
                ls.offsets
                    .iter()
                    .map(|&(k0, frac, p)| {
                        let j = (k + k0 - cur_lo) as usize;
                        if frac == 0.0 {
                            p * cur[j]
                        } else {
                            p * ((1.0 - frac) * cur[j] + frac * cur[j + 1])
                        }
                    })
                    .sum()
            })
            .collect();
        let mut next = vec![0.0; prev_len];
        sliding_max(&w, width, &mut next);
        if let Some(bad) = next.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value {bad} at stage {}", i - 1)));
        }
        mean_term += lip * ls.choice_gap;
        if ls.fractional {
            interpolation_term += 0.5 * lip * h;
        }
        values = next;
    }

    Ok(RecursionResult {
        value: values[0],
        error_bound: mean_term + interpolation_term,
        n,
        grid: GridReport {
            mode: "lattice".into(),
            spacing: h,
            domain: (tn_lo as f64 * h, tn_hi as f64 * h),
            mu_grid_points: lattice.iter().map(LatticeStep::width).max().unwrap_or(0),
            nodes,
            interpolation_term,
            mean_term,
            truncation_term: 0.0,
        },
    })
}
