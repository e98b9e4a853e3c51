use alloc::vec::Vec;

use super::RoundFeedback;
use crate::error::{bail, Result};
use crate::grid::BidGrid;
use crate::outcome::{AllocationCurve, PaymentCurve, RewardFunction};

/// A unit-demand round over `K` items. Outcomes `0..K` are the items and
/// outcome `K` is "nothing"; the reward for item `k` is `v_k − p(b, k)` and
/// the reward for nothing is 0.
///
/// The realized outcome of any bid is found by inverting its outcome CDF at
/// one shared uniform draw, so hindsight utilities use the same randomness
/// as the played bid.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDemandRound {
    alloc: AllocationCurve,
    payment: PaymentCurve,
    values: Vec<f64>,
    draw: f64,
}

impl UnitDemandRound {
    /// `alloc` and `payment` are tables over `K + 1` outcomes on the grid.
    pub fn new(alloc: AllocationCurve, payment: PaymentCurve, values: Vec<f64>, draw: f64) -> Result<Self> {
        if values.len() + 1 != alloc.outcomes() || payment.outcomes() != alloc.outcomes() {
            bail!(InvalidArgument, "{} item values for {} outcomes", values.len(), alloc.outcomes());
        }
        if payment.bids() != alloc.bids() {
            bail!(InvalidArgument, "payment and allocation tables cover different grids");
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            bail!(InvalidArgument, "item values must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&draw) {
            bail!(InvalidArgument, "outcome draw {draw} outside [0, 1)");
        }
        Ok(Self { alloc, payment, values, draw })
    }

    /// Each item `k` has its own highest other bid `B_k`; a bid `b` is
    /// eligible for the items with `b > B_k`, receives one of them uniformly
    /// at random and pays that item's `B_k`.
    pub fn second_price_items(grid: &BidGrid, highest_others: &[f64], values: Vec<f64>, draw: f64) -> Result<Self> {
        let k = highest_others.len();
        if k == 0 {
            bail!(InvalidArgument, "a unit-demand round needs at least one item");
        }
        if highest_others.iter().any(|b| !(0.0..=1.0).contains(b)) {
            bail!(InvalidArgument, "highest other bids must lie in [0, 1]");
        }
        let mut alloc = Vec::with_capacity(grid.len() * (k + 1));
        let mut pay = Vec::with_capacity(grid.len() * (k + 1));
        for &b in grid.points() {
            let eligible = highest_others.iter().filter(|&&h| b > h).count();
            for &h in highest_others {
                alloc.push(if b > h { 1.0 / eligible as f64 } else { 0.0 });
                pay.push(h);
            }
            alloc.push(if eligible == 0 { 1.0 } else { 0.0 });
            pay.push(0.0);
        }
        Self::new(AllocationCurve::new(k + 1, alloc)?, PaymentCurve::new(k + 1, pay)?, values, draw)
    }

    pub fn items(&self) -> usize {
        self.values.len()
    }

    pub fn alloc(&self) -> &AllocationCurve {
        &self.alloc
    }

    pub fn rewards(&self) -> RewardFunction {
        let mut per_outcome = self.values.clone();
        per_outcome.push(0.0);
        RewardFunction::from_values(&per_outcome, &self.payment).expect("values lie in [0, 1]")
    }

    pub fn outcome(&self, bid: usize) -> usize {
        self.alloc.outcome_at(bid, self.draw)
    }

    /// Ex-post utility of grid bid `bid`.
    pub fn utility(&self, bid: usize) -> f64 {
        let o = self.outcome(bid);
        if o == self.items() {
            0.0
        } else {
            (self.values[o] - self.payment.payment(bid, o)).clamp(-1.0, 1.0)
        }
    }

    pub fn feedback(&self, bid: usize) -> RoundFeedback {
        let realized = self.outcome(bid);
        RoundFeedback {
            alloc: self.alloc.clone(),
            payment: self.payment.clone(),
            rewards: self.rewards(),
            realized,
            value_revealed: self.values.get(realized).copied(),
            realized_utility: self.utility(bid),
        }
    }
}
