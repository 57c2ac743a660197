//! Test functions with a caller-declared Lipschitz constant.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function together with a declared Lipschitz constant and the
/// points where it may fail to be differentiable.
///
/// The constant is trusted, not inferred: every certified error bound in
/// the crate is proportional to it.
#[derive(Clone)]
pub struct LipschitzFn {
    f: Func,
    lipschitz: f64,
    breakpoints: Vec<f64>,
    label: String,
}

impl fmt::Debug for LipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzFn")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl LipschitzFn {
    pub fn new(
        label: impl Into<String>,
        lipschitz: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return input(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}"));
        }
        Ok(Self {
            f: Arc::new(f),
            lipschitz,
            breakpoints: Vec::new(),
            label: label.into(),
        })
    }

    /// Points that maximisers should always probe (kinks of piecewise
    /// smooth functions).
    pub fn with_breakpoints(mut self, mut points: Vec<f64>) -> Self {
        points.retain(|p| p.is_finite());
        points.sort_by(f64::total_cmp);
        points.dedup();
        self.breakpoints = points;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), 0.0, move |_| c).expect("zero constant")
    }

    /// `x ↦ slope·x + intercept`.
    pub fn linear(slope: f64, intercept: f64) -> Self {
        let label = match (slope, intercept) {
            (1.0, 0.0) => "x".to_string(),
            (s, 0.0) => format!("{s}x"),
            (s, c) if c < 0.0 => format!("{s}x{c}"),
            (s, c) => format!("{s}x+{c}"),
        };
        Self::new(label, slope.abs(), move |x| slope * x + intercept)
            .expect("finite slope")
    }

    /// `x ↦ -|x|`.
    pub fn neg_abs() -> Self {
        Self::new("-|x|", 1.0, |x: f64| -x.abs())
            .expect("unit constant")
            .with_breakpoints(vec![0.0])
    }

    /// `y ↦ max(0, 1 - exp(|y - center| - width))`, a bump of height
    /// `1 - e^{-width}` at `center` vanishing outside `|y - center| < width`.
    /// Lipschitz with constant 1.
    pub fn bump(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return input(format!("bump width must be positive, got {width}"));
        }
        Ok(Self::new(format!("bump({center},{width})"), 1.0, move |y: f64| {
            (1.0 - ((y - center).abs() - width).exp()).max(0.0)
        })?
        .with_breakpoints(vec![center - width, center, center + width]))
    }

    /// `x ↦ min(x², cap)`.
    pub fn clipped_quadratic(cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return input(format!("quadratic cap must be positive, got {cap}"));
        }
        let r = cap.sqrt();
        Ok(Self::new(format!("min(x^2,{cap})"), 2.0 * r, move |x: f64| (x * x).min(cap))?
            .with_breakpoints(vec![-r, 0.0, r]))
    }

    /// `x ↦ -φ(x)`.
    pub fn negated(&self) -> Self {
        let f = self.f.clone();
        Self {
            f: Arc::new(move |x| -f(x)),
            lipschitz: self.lipschitz,
            breakpoints: self.breakpoints.clone(),
            label: format!("-({})", self.label),
        }
    }

    /// `x ↦ φ(x - c)`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self {
            f: Arc::new(move |x| f(x - c)),
            lipschitz: self.lipschitz,
            breakpoints: self.breakpoints.iter().map(|b| b + c).collect(),
            label: format!("({})(x-{c})", self.label),
        }
    }

    /// `y ↦ φ(offset + scale·y)`.
    pub fn precompose(&self, scale: f64, offset: f64) -> Self {
        let f = self.f.clone();
        let breakpoints = if scale == 0.0 {
            Vec::new()
        } else {
            self.breakpoints.iter().map(|b| (b - offset) / scale).collect()
        };
        Self {
            f: Arc::new(move |y| f(offset + scale * y)),
            lipschitz: self.lipschitz * scale.abs(),
            breakpoints: Vec::new(),
            label: format!("({})({offset}+{scale}y)", self.label),
        }
        .with_breakpoints(breakpoints)
    }
}

/// Serializable description of the bundled test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Constant { value: f64 },
    Linear { slope: f64, #[serde(default)] intercept: f64 },
    NegAbs {},
    Bump { center: f64, width: f64 },
    ClippedQuadratic { cap: f64 },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<LipschitzFn> {
        match *self {
            FunctionSpec::Constant { value } => Ok(LipschitzFn::constant(value)),
            FunctionSpec::Linear { slope, intercept } => Ok(LipschitzFn::linear(slope, intercept)),
            FunctionSpec::NegAbs {} => Ok(LipschitzFn::neg_abs()),
            FunctionSpec::Bump { center, width } => LipschitzFn::bump(center, width),
            FunctionSpec::ClippedQuadratic { cap } => LipschitzFn::clipped_quadratic(cap),
        }
    }
}
