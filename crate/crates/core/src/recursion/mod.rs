//! Backward induction for `E[φ(S_n/n)]` under Peng-independent steps.
//!
//! With `u_n(s) = φ(s/n)` and
//!
//! ```text
//! u_{i-1}(s) = sup_{μ ∈ [μ̲ᵢ, μ̄ᵢ]} Σ_j p_ij · u_i(s + μ + z_ij)
//! ```
//!
//! the upper expectation of `φ(S_n/n)` is `u_0(0)`. The state is the raw
//! partial sum, so every transition is a translation.
//!
//! Every `u_i` is `L/n`-Lipschitz when `φ` is `L`-Lipschitz, because
//! translations, averages and suprema preserve the constant. All error
//! bounds below are sums of per-step terms of the form `(L/n)·distance`.
//!
//! Three discretizations are available through [`GridMode`]:
//!
//! - **exact**: the set of sums reachable with a finite mean grid is
//!   enumerated, so no interpolation happens; only the mean grid gap
//!   contributes to the error.
//! - **uniform**: one uniform grid per stage spanning that stage's
//!   reachable range (or a caller-fixed domain), with linear interpolation
//!   and a golden-section polish of the best mean cell.
//! - **lattice**: sums restricted to multiples of a spacing `h`; means are
//!   chosen on the same lattice so the inner supremum is a sliding-window
//!   maximum. Cheap enough for the very fine grids needed by the
//!   large-Lipschitz ramps of capacity sandwiches.

mod capacity;
mod exact;
mod grid;
mod lattice;
mod oracle;
mod uniform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lipschitz::LipschitzFn;
use crate::models::{SequenceModel, StepModel};

pub use capacity::{mean_event_capacity, sandwich_functions, CapacityBounds, MeanEvent};
pub use grid::ValueGrid;
pub use oracle::{strategy_count, strategy_oracle, DEFAULT_STRATEGY_CAP};

/// Default number of means probed per step.
pub const DEFAULT_MEAN_POINTS: usize = 33;
/// Default node count of the uniform grid.
pub const DEFAULT_UNIFORM_NODES: usize = 4096;
/// Reachable-set size up to which the exact discretization is preferred.
pub const DEFAULT_MAX_EXACT_POINTS: usize = 200_000;
/// Default lattice spacing for capacity sandwiches.
pub const DEFAULT_LATTICE_SPACING: f64 = 1.0 / 2048.0;
/// Default per-stage node cap of the lattice discretization.
pub const DEFAULT_LATTICE_MAX_NODES: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridMode {
    /// Exact when the reachable set is small enough, uniform otherwise.
    Auto { nodes: usize },
    /// Exact reachable-sum enumeration; fails if the set is too large.
    Exact,
    /// Uniform grids. With `domain = None` each stage gets its own grid over
    /// its reachable range. A fixed `domain` that does not cover the
    /// reachable range is an error unless `clamp` is set, in which case a
    /// truncation term enters the error bound.
    Uniform {
        nodes: usize,
        #[serde(default)]
        domain: Option<(f64, f64)>,
        #[serde(default)]
        clamp: bool,
    },
    /// Partial sums and means on the lattice `spacing·ℤ`.
    Lattice { spacing: f64, max_nodes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecursionConfig {
    pub grid: GridMode,
    /// Means probed per step in exact and uniform modes.
    pub mean_points: usize,
    /// Golden-section polish of the best mean cell (uniform mode only).
    pub refine: bool,
    pub max_exact_points: usize,
}

impl Default for RecursionConfig {
    fn default() -> Self {
        Self {
            grid: GridMode::Auto { nodes: DEFAULT_UNIFORM_NODES },
            mean_points: DEFAULT_MEAN_POINTS,
            refine: true,
            max_exact_points: DEFAULT_MAX_EXACT_POINTS,
        }
    }
}

impl RecursionConfig {
    /// Exact enumeration on an `m`-point mean grid, as used against the
    /// strategy oracle.
    pub fn exact(mean_points: usize) -> Self {
        Self {
            grid: GridMode::Exact,
            mean_points,
            refine: false,
            ..Self::default()
        }
    }

    pub fn lattice(spacing: f64) -> Self {
        Self {
            grid: GridMode::Lattice {
                spacing,
                max_nodes: DEFAULT_LATTICE_MAX_NODES,
            },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mean_points == 0 {
            return Err(Error::Input("mean_points must be at least 1".into()));
        }
        match self.grid {
            GridMode::Auto { nodes } | GridMode::Uniform { nodes, .. } if nodes < 2 => {
                Err(Error::Input("uniform grids need at least two nodes".into()))
            }
            GridMode::Lattice { spacing, .. } if !(spacing > 0.0) || !spacing.is_finite() => {
                Err(Error::Input(format!("lattice spacing must be positive, got {spacing}")))
            }
            _ => Ok(()),
        }
    }
}

/// Discretization actually used by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub mode: String,
    /// Largest grid spacing over all stages (0 for exact mode).
    pub spacing: f64,
    /// Reachable range of the terminal stage.
    pub domain: (f64, f64),
    /// Largest number of means probed in one step.
    pub mu_grid_points: usize,
    /// Largest number of nodes in one stage.
    pub nodes: usize,
    pub interpolation_term: f64,
    pub mean_term: f64,
    pub truncation_term: f64,
}

/// `E[φ(S_n/n)]` together with a certified bound on its discretization
/// error: the exact value lies in `[value - error_bound, value + error_bound]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionResult {
    pub value: f64,
    pub error_bound: f64,
    pub n: usize,
    pub grid: GridReport,
}

impl RecursionResult {
    fn negated(mut self) -> Self {
        self.value = -self.value;
        self
    }
}

/// Reachable interval of the partial sum after each stage.
pub(crate) fn reachable_ranges(steps: &[StepModel]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    let (mut lo, mut hi) = (0.0_f64, 0.0_f64);
    out.push((lo, hi));
    for s in steps {
        lo += s.mean_lo + s.noise.min();
        hi += s.mean_hi + s.noise.max();
        out.push((lo, hi));
    }
    out
}

pub(crate) fn check_finite(v: f64, stage: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("non-finite value {v} at stage {stage}")))
    }
}

/// Largest excess of the Lipschitz cell bound over the best grid value, for
/// `values` sampled at consecutive means `grid`.
pub(crate) fn mean_grid_gap(grid: &[f64], values: &[f64], best: f64, lipschitz: f64, lo: f64, hi: f64) -> f64 {
    if grid.len() == 1 {
        let d = (grid[0] - lo).abs().max((hi - grid[0]).abs());
        return lipschitz * d;
    }
    let mut top = best;
    for (g, v) in grid.windows(2).zip(values.windows(2)) {
        top = top.max(0.5 * (v[0] + v[1] + lipschitz * (g[1] - g[0])));
    }
    (top - best).max(0.0)
}

/// Upper expectation `E[φ(S_n/n)]` by backward induction.
pub fn upper_value(
    model: &SequenceModel,
    n: usize,
    phi: &LipschitzFn,
    config: &RecursionConfig,
) -> Result<RecursionResult> {
    if n == 0 {
        return Err(Error::Input("horizon n must be at least 1".into()));
    }
    config.validate()?;
    let steps = model.steps(n)?;
    match &config.grid {
        GridMode::Exact => exact::run(&steps, phi, config.mean_points, config.max_exact_points)?
            .ok_or_else(|| {
                Error::Resource(format!(
                    "reachable set exceeds {} points; use a uniform or lattice grid",
                    config.max_exact_points
                ))
            }),
        GridMode::Auto { nodes } => {
            match exact::run(&steps, phi, config.mean_points, config.max_exact_points)? {
                Some(r) => Ok(r),
                None => uniform::run(&steps, phi, *nodes, None, false, config),
            }
        }
        GridMode::Uniform { nodes, domain, clamp } => {
            uniform::run(&steps, phi, *nodes, *domain, *clamp, config)
        }
        GridMode::Lattice { spacing, max_nodes } => lattice::run(&steps, phi, *spacing, *max_nodes),
    }
}

/// Lower expectation `-E[-φ(S_n/n)]`.
pub fn lower_value(
    model: &SequenceModel,
    n: usize,
    phi: &LipschitzFn,
    config: &RecursionConfig,
) -> Result<RecursionResult> {
    Ok(upper_value(model, n, &phi.negated(), config)?.negated())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_engine::FiniteDistribution;
    use crate::models::{RuleKind, StepSource};

    fn coin(a: f64) -> FiniteDistribution {
        FiniteDistribution::symmetric_pair(a).unwrap()
    }

    fn iid(lo: f64, hi: f64, noise: FiniteDistribution) -> SequenceModel {
        SequenceModel::constant(StepModel::new(lo, hi, noise).unwrap(), 0.0, 100.0).unwrap()
    }

    #[test]
    fn linear_phi_picks_upper_means() {
        let model = iid(0.0, 1.0, FiniteDistribution::point_mass(0.0));
        let r = upper_value(&model, 2, &LipschitzFn::linear(1.0, 0.0), &RecursionConfig::default()).unwrap();
        assert_eq!(r.grid.mode, "exact");
        assert_eq!(r.value, 1.0);
        assert_eq!(r.error_bound, 0.0);
    }

    #[test]
    fn linear_phi_lower_value_is_cesaro_lower_mean() {
        let model = SequenceModel::from_rule(RuleKind::Harmonic, coin(1.0), 1.0, -0.5, 1.0, 1.0, 10.0).unwrap();
        for config in [RecursionConfig::default(), RecursionConfig::lattice(1.0 / 256.0)] {
            let r = lower_value(&model, 40, &LipschitzFn::linear(1.0, 0.0), &config).unwrap();
            assert!((r.value - (-0.5)).abs() <= r.error_bound + 1e-12, "{r:?}");
            let u = upper_value(&model, 40, &LipschitzFn::linear(1.0, 0.0), &config).unwrap();
            let cesaro: f64 = (1..=40).map(|i| 1.0 + 1.0 / i as f64).sum::<f64>() / 40.0;
            assert!((u.value - cesaro).abs() <= u.error_bound + 1e-12, "{u:?} vs {cesaro}");
        }
    }

    #[test]
    fn constant_phi_is_preserved() {
        let model = iid(-1.0, 1.0, coin(1.0));
        for config in [
            RecursionConfig::default(),
            RecursionConfig::lattice(0.01),
            RecursionConfig { grid: GridMode::Uniform { nodes: 64, domain: None, clamp: false }, ..Default::default() },
        ] {
            let phi = LipschitzFn::constant(2.5);
            let u = upper_value(&model, 12, &phi, &config).unwrap();
            let l = lower_value(&model, 12, &phi, &config).unwrap();
            assert!((u.value - 2.5).abs() < 1e-12);
            assert!((l.value - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_never_exceeds_upper() {
        let model = SequenceModel::from_rule(RuleKind::AlternatingSqrt, coin(1.0), 1.0, -1.0, 1.0, 2.0, 5.0).unwrap();
        let phi = LipschitzFn::bump(0.3, 1.0).unwrap();
        let config = RecursionConfig::default();
        for n in [1, 3, 10, 50] {
            let u = upper_value(&model, n, &phi, &config).unwrap();
            let l = lower_value(&model, n, &phi, &config).unwrap();
            assert!(l.value <= u.value + 1e-12);
        }
    }

    #[test]
    fn fixed_domain_must_cover_reachable_range() {
        let model = iid(-1.0, 1.0, coin(1.0));
        let phi = LipschitzFn::linear(1.0, 0.0);
        let tight = RecursionConfig {
            grid: GridMode::Uniform { nodes: 200, domain: Some((-5.0, 5.0)), clamp: false },
            ..Default::default()
        };
        assert!(matches!(upper_value(&model, 10, &phi, &tight), Err(Error::Input(_))));
        let clamped = RecursionConfig {
            grid: GridMode::Uniform { nodes: 200, domain: Some((-5.0, 5.0)), clamp: true },
            ..Default::default()
        };
        let r = upper_value(&model, 10, &phi, &clamped).unwrap();
        assert!(r.grid.truncation_term > 0.0);
        assert!((r.value - 1.0).abs() <= r.error_bound);
        let wide = RecursionConfig {
            grid: GridMode::Uniform { nodes: 801, domain: Some((-20.0, 20.0)), clamp: false },
            ..Default::default()
        };
        let r = upper_value(&model, 10, &phi, &wide).unwrap();
        assert_eq!(r.grid.truncation_term, 0.0);
        assert!((r.value - 1.0).abs() <= r.error_bound + 1e-12);
    }

    #[test]
    fn exact_mode_reports_resource_error_when_too_large() {
        let model = iid(-1.0, 1.0, FiniteDistribution::new(vec![-1.0, 0.0, 1.0], vec![0.3, 0.4, 0.3]).unwrap());
        let config = RecursionConfig { max_exact_points: 50, ..RecursionConfig::exact(33) };
        let err = upper_value(&model, 4, &LipschitzFn::linear(1.0, 0.0), &config).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn explicit_model_too_short_is_an_input_error() {
        let step = StepModel::new(0.0, 1.0, coin(1.0)).unwrap();
        let model = SequenceModel::new(StepSource::Explicit(vec![step]), 0.0, 1.0, 0.0, 5.0).unwrap();
        assert!(upper_value(&model, 2, &LipschitzFn::linear(1.0, 0.0), &RecursionConfig::default()).is_err());
        assert!(upper_value(&model, 0, &LipschitzFn::linear(1.0, 0.0), &RecursionConfig::default()).is_err());
    }

    #[test]
    fn non_finite_terminal_value_is_a_numeric_error() {
        let model = iid(-1.0, 1.0, coin(1.0));
        let phi = LipschitzFn::new("log", 1.0, |x: f64| if x > 0.5 { f64::INFINITY } else { x }).unwrap();
        for config in [RecursionConfig::default(), RecursionConfig::lattice(0.01)] {
            let err = upper_value(&model, 60, &phi, &config).unwrap_err();
            assert!(matches!(err, Error::Numeric(_)), "{err:?}");
        }
    }

    #[test]
    fn result_serializes_with_documented_keys() {
        let model = iid(0.0, 1.0, FiniteDistribution::point_mass(0.0));
        let r = upper_value(&model, 1, &LipschitzFn::linear(1.0, 0.0), &RecursionConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["value", "error_bound", "n", "grid"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
