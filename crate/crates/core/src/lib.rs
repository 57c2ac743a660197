//! Sublinear expectations, their capacities, and numerical laws of large
//! numbers for independent but non-identically distributed sequences under
//! mean ambiguity.
//!
//! - [`finite_engine`]: exact upper/lower expectations and capacities over a
//!   finite family of probability vectors.
//! - [`models`]: ambiguous step models, the maximal distribution and its
//!   generator.
//! - [`recursion`]: backward induction for `E[φ(S_n/n)]` and capacity
//!   envelopes of sample-mean events.
//! - [`pde`]: monotone upwind solver for the maximal-distribution equation.
//! - [`montecarlo`]: path simulation under explicit nature policies.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod finite_engine;
pub mod fixtures;
pub mod lipschitz;
pub mod models;
pub mod montecarlo;
pub mod numeric;
pub mod pde;
pub mod recursion;

pub use error::{Error, Result};
pub use finite_engine::{CapacityPair, Event, FiniteDistribution, MeasureFamily, RandomVariable};
pub use lipschitz::{FunctionSpec, LipschitzFn};
pub use models::{MaximalDistribution, SequenceModel, StepModel};
