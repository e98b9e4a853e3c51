use core::fmt;
use core::str::FromStr;

use alloc::vec::Vec;

use super::RoundFeedback;
use crate::error::{bail, Error, Result};
use crate::grid::BidGrid;
use crate::outcome::{AllocationCurve, PaymentCurve, RewardFunction, LOSE, WIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleItemFormat {
    SecondPrice,
    FirstPrice,
    AllPay,
}

impl SingleItemFormat {
    pub fn tag(self) -> &'static str {
        match self {
            Self::SecondPrice => "second-price",
            Self::FirstPrice => "first-price",
            Self::AllPay => "all-pay",
        }
    }
}

impl fmt::Display for SingleItemFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SingleItemFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "second-price" => Self::SecondPrice,
            "first-price" => Self::FirstPrice,
            "all-pay" => Self::AllPay,
            _ => bail!(Configuration, "unknown single-item format {s:?}"),
        })
    }
}

/// One single-item auction against the highest other bid `B_t`. The learner
/// loses ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleItemRound {
    pub format: SingleItemFormat,
    pub highest_other: f64,
    pub value: f64,
}

impl SingleItemRound {
    pub fn new(format: SingleItemFormat, other_bids: &[f64], value: f64) -> Result<Self> {
        if let Some(b) = other_bids.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            bail!(InvalidArgument, "opponent bid {b} outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&value) {
            bail!(InvalidArgument, "value {value} outside [0, 1]");
        }
        let highest_other = other_bids.iter().copied().fold(0.0, f64::max);
        Ok(Self { format, highest_other, value })
    }

    pub fn wins(&self, bid: f64) -> bool {
        bid > self.highest_other
    }

    /// Payment charged on a win and on a loss.
    fn charges(&self, bid: f64) -> (f64, f64) {
        match self.format {
            SingleItemFormat::SecondPrice => (self.highest_other, 0.0),
            SingleItemFormat::FirstPrice => (bid, 0.0),
            SingleItemFormat::AllPay => (bid, bid),
        }
    }

    pub fn utility(&self, bid: f64) -> f64 {
        let (on_win, on_loss) = self.charges(bid);
        let u = if self.wins(bid) { self.value - on_win } else { -on_loss };
        u.clamp(-1.0, 1.0)
    }

    pub fn alloc_curve(&self, grid: &BidGrid) -> AllocationCurve {
        let x: Vec<f64> = grid.points().iter().map(|&b| if self.wins(b) { 1.0 } else { 0.0 }).collect();
        AllocationCurve::binary(&x).expect("step curve is valid")
    }

    /// Payments per `(bid, outcome)`; only the charge of the outcome a bid
    /// can actually produce is meaningful, the other entry mirrors the rule.
    pub fn payment_curve(&self, grid: &BidGrid) -> PaymentCurve {
        let table = grid
            .points()
            .iter()
            .flat_map(|&b| {
                let (w, l) = self.charges(b);
                let w = if self.format == SingleItemFormat::SecondPrice && !self.wins(b) { 0.0 } else { w };
                [w, l]
            })
            .collect();
        PaymentCurve::new(2, table).expect("payments lie in [0, 1]")
    }

    pub fn rewards(&self, grid: &BidGrid) -> RewardFunction {
        let table = grid
            .points()
            .iter()
            .flat_map(|&b| {
                let (w, l) = self.charges(b);
                [(self.value - w).clamp(-1.0, 1.0), -l]
            })
            .collect();
        RewardFunction::new(2, table).expect("rewards lie in [-1, 1]")
    }

    /// Everything the learner observes after bidding `grid[bid]`.
    pub fn feedback(&self, grid: &BidGrid, bid: usize) -> RoundFeedback {
        let b = grid.get(bid);
        let won = self.wins(b);
        RoundFeedback {
            alloc: self.alloc_curve(grid),
            payment: self.payment_curve(grid),
            rewards: self.rewards(grid),
            realized: if won { WIN } else { LOSE },
            value_revealed: won.then_some(self.value),
            realized_utility: self.utility(b),
        }
    }
}

pub fn second_price_round(grid: &BidGrid, bid: usize, other_bids: &[f64], value: f64) -> Result<RoundFeedback> {
    Ok(SingleItemRound::new(SingleItemFormat::SecondPrice, other_bids, value)?.feedback(grid, bid))
}

pub fn first_price_round(grid: &BidGrid, bid: usize, other_bids: &[f64], value: f64) -> Result<RoundFeedback> {
    Ok(SingleItemRound::new(SingleItemFormat::FirstPrice, other_bids, value)?.feedback(grid, bid))
}

pub fn all_pay_round(grid: &BidGrid, bid: usize, other_bids: &[f64], value: f64) -> Result<RoundFeedback> {
    Ok(SingleItemRound::new(SingleItemFormat::AllPay, other_bids, value)?.feedback(grid, bid))
}
