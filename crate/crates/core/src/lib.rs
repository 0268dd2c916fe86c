//! Online learning to rank in stochastic click models.
//!
//! - [`click_models`]: cascade and position-based user simulators.
//! - [`kl_math`]: Bernoulli KL divergence and KL-UCB bounds.
//! - [`batchrank`]: the BatchRank learner.
//! - [`baselines`]: CascadeKL-UCB and RankedExp3.
//! - [`harness`]: regret simulation, sweeps, CSV output and the regret bound.
//! - [`config`] and [`plot`]: experiment files and SVG charts.

pub mod baselines;
pub mod batchrank;
pub mod click_models;
pub mod config;
mod error;
pub mod harness;
pub mod kl_math;
pub mod learner;
pub mod plot;

pub use baselines::{CascadeKlUcb, RankedExp3};
pub use batchrank::{stage_length, Batch, BatchEvent, BatchOutcome, BatchRank};
pub use click_models::{ClickModel, ModelKind, RankedList, SampleOutcome};
pub use error::{Error, Result};
pub use harness::{
    run_single, run_sweep, theorem1_bound, Algorithm, ExperimentConfig, RegretTrace,
};
pub use kl_math::{bernoulli_kl, delta_t, kl_ucb_lower, kl_ucb_upper, ConfidenceBounds};
pub use learner::{Learner, LearnerEvent};
