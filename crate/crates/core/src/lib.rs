//! Learning to bid when values are only observed on a win.
//!
//! This crate holds the allocation-free-of-IO core: exponential-weights
//! learners over a discrete bid grid, the family of importance-weighted
//! utility estimators that exploit allocation-curve feedback (win-only,
//! outcome-based, batch, feedback-graph) next to the EXP3 baseline, simulated
//! auction environments, feedback transformations, feedback graphs, and
//! discretization helpers.
//!
//! The crate is `no_std` and only needs `alloc`. Randomness is always supplied
//! by the caller through [`rand::Rng`], so every routine is deterministic given
//! its random source.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod auction;
pub mod discretization;
pub mod dist;
mod error;
pub mod estimators;
pub mod feedback;
pub mod graph;
pub mod grid;
pub mod learner;
pub mod outcome;

pub use error::{Error, Result};
pub use grid::{BidDistribution, BidGrid};
pub use learner::{EstimatorKind, Feedback, LearnerState};
pub use outcome::{AllocationCurve, BatchFeedback, OutcomeSet, PaymentCurve, RewardFunction, UtilityEstimate};
