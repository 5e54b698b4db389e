//! Agent-based simulation of urban modal choice.
//!
//! Agents pick among car, bike, bus and walk by scoring each mode on six
//! criteria. Perceived values pass through a per-agent filter shaped by the
//! agent's habits, and a strong enough habit skips the evaluation entirely.
//! Population parameters come from survey statistics (embedded defaults or a
//! survey file), and a running simulation can be steered by interventions on
//! the urban layout, the population's priorities and the decision toggles.
//!
//! - [`model`]: domain types and the single-agent decision step.
//! - [`calibration`]: survey ingestion, derived statistics, population sampling.
//! - [`engine`]: simulation state, the tick loop and interventions.
//! - [`scenario`]: scenario files, batch runs and time-series export.
//! - [`steering`]: the live-session protocol used by the steering server.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod engine;
mod error;
pub mod model;
pub mod scenario;
pub mod steering;

pub use error::{Error, Result};
