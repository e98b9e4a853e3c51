//! Simulated auctions.
//!
//! Each round type holds one round's realized randomness (opponent bids,
//! scores, thresholds, values) and can evaluate any bid against it, which is
//! what the feedback curves and the ex-post hindsight utilities need.

mod gsp;
mod single;
mod unit_demand;

pub use gsp::{BatchSponsoredRound, GspRound};
pub use single::{all_pay_round, first_price_round, second_price_round, SingleItemFormat, SingleItemRound};
pub use unit_demand::UnitDemandRound;

use alloc::vec::Vec;
use rand::Rng;

use crate::dist::DistSpec;
use crate::error::{bail, Result};
use crate::outcome::{AllocationCurve, PaymentCurve, RewardFunction};

/// What the learner sees after one round on a given grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundFeedback {
    pub alloc: AllocationCurve,
    pub payment: PaymentCurve,
    pub rewards: RewardFunction,
    pub realized: usize,
    /// Present exactly when the win/click outcome occurred (or, with
    /// several items, when an item was allocated).
    pub value_revealed: Option<f64>,
    pub realized_utility: f64,
}

impl RoundFeedback {
    /// `r_t(·, o_t)`, the reward row revealed by the realized outcome.
    pub fn revealed_row(&self) -> Vec<f64> {
        self.rewards.column(self.realized)
    }
}

/// Running `Σ_t u_t(b)` for every grid bid.
#[derive(Debug, Clone, PartialEq)]
pub struct HindsightTracker {
    totals: Vec<f64>,
}

impl HindsightTracker {
    pub fn new(bids: usize) -> Self {
        Self { totals: alloc::vec![0.0; bids] }
    }

    pub fn add(&mut self, utilities: &[f64]) {
        for (t, u) in self.totals.iter_mut().zip(utilities) {
            *t += u;
        }
    }

    /// Adds `u(b)` computed by `f` for every grid index `b`.
    pub fn add_with(&mut self, mut f: impl FnMut(usize) -> f64) {
        for (b, t) in self.totals.iter_mut().enumerate() {
            *t += f(b);
        }
    }

    pub fn totals(&self) -> &[f64] {
        &self.totals
    }

    /// `max_b Σ_t u_t(b)`.
    pub fn best(&self) -> f64 {
        self.totals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn best_bid(&self) -> usize {
        let best = self.best();
        self.totals.iter().position(|&t| t == best).unwrap_or(0)
    }

    /// Regret of a realized cumulative utility against the best fixed bid.
    pub fn regret(&self, realized: f64) -> f64 {
        self.best() - realized
    }
}

/// The learner's value per round, fixed before the run starts.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueProcess {
    values: Vec<f64>,
}

impl ValueProcess {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            bail!(InvalidArgument, "value {v} outside [0, 1]");
        }
        Ok(Self { values })
    }

    /// I.i.d. draws from `dist`.
    pub fn iid<R: Rng + ?Sized>(dist: &DistSpec, horizon: usize, rng: &mut R) -> Self {
        Self { values: (0..horizon).map(|_| dist.sample(rng)).collect() }
    }

    /// Linear drift from `start` to `end` over the horizon.
    pub fn drift(start: f64, end: f64, horizon: usize) -> Result<Self> {
        let step = if horizon > 1 { (end - start) / (horizon - 1) as f64 } else { 0.0 };
        Self::from_values((0..horizon).map(|t| start + step * t as f64).collect())
    }

    pub fn get(&self, t: usize) -> f64 {
        self.values[t]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
