use alloc::vec::Vec;

use super::RoundFeedback;
use crate::error::{bail, Result};
use crate::grid::BidGrid;
use crate::outcome::{AllocationCurve, BatchFeedback, PaymentCurve, RewardFunction, LOSE, WIN};

/// One weighted-GSP auction from the learner's seat.
///
/// Bidders are ranked by rank-score `s·b`; entrants whose rank-score is zero
/// or below the reserve are discarded; the learner loses ties. A slotted
/// learner pays, per click, the next rank-score below hers (or the reserve)
/// divided by her own score. She is clicked when her slot's CTR exceeds the
/// round's shared threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GspRound {
    learner_score: f64,
    others: Vec<f64>,
    reserve: f64,
    slot_ctrs: Vec<f64>,
    click_threshold: f64,
}

impl GspRound {
    /// `others` holds `(bid, score)` pairs for the other bidders.
    pub fn new(
        learner_score: f64,
        others: &[(f64, f64)],
        reserve: f64,
        slot_ctrs: Vec<f64>,
        click_threshold: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&learner_score) {
            bail!(InvalidArgument, "quality score {learner_score} outside [0, 1]");
        }
        if let Some(&(b, s)) = others.iter().find(|(b, s)| !(0.0..=1.0).contains(b) || !(0.0..=1.0).contains(s)) {
            bail!(InvalidArgument, "opponent (bid {b}, score {s}) outside [0, 1]");
        }
        if !(reserve >= 0.0) {
            bail!(InvalidArgument, "reserve must be ≥ 0, got {reserve}");
        }
        if slot_ctrs.is_empty() || slot_ctrs.len() > others.len() + 1 {
            bail!(InvalidArgument, "{} slots for {} bidders", slot_ctrs.len(), others.len() + 1);
        }
        if slot_ctrs.iter().any(|c| !(0.0..=1.0).contains(c)) || slot_ctrs.windows(2).any(|w| w[0] <= w[1]) {
            bail!(InvalidArgument, "slot CTRs must lie in [0, 1] and strictly decrease");
        }
        if !(0.0..=1.0).contains(&click_threshold) {
            bail!(InvalidArgument, "click threshold {click_threshold} outside [0, 1]");
        }
        let mut ranks: Vec<f64> = others.iter().map(|&(b, s)| b * s).filter(|&r| r > 0.0 && r >= reserve).collect();
        ranks.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { learner_score, others: ranks, reserve, slot_ctrs, click_threshold })
    }

    pub fn slots(&self) -> usize {
        self.slot_ctrs.len()
    }

    pub fn click_threshold(&self) -> f64 {
        self.click_threshold
    }

    pub fn with_threshold(&self, click_threshold: f64) -> Self {
        Self { click_threshold, ..self.clone() }
    }

    /// Eligible opponents' rank-scores, descending.
    pub fn rank_scores(&self) -> &[f64] {
        &self.others
    }

    /// The learner's slot (0 = top) at `bid`, if any.
    pub fn slot(&self, bid: f64) -> Option<usize> {
        let rho = self.learner_score * bid;
        if !(rho > 0.0) || rho < self.reserve {
            return None;
        }
        let position = self.others.partition_point(|&r| r >= rho);
        (position < self.slots()).then_some(position)
    }

    pub fn ctr(&self, bid: f64) -> f64 {
        self.slot(bid).map_or(0.0, |s| self.slot_ctrs[s])
    }

    /// Per-click price at `bid`; zero when unslotted.
    pub fn price(&self, bid: f64) -> f64 {
        let Some(position) = self.slot(bid) else {
            return 0.0;
        };
        let next = self.others.get(position).copied().unwrap_or(0.0).max(self.reserve);
        (next / self.learner_score).min(1.0)
    }

    pub fn clicked(&self, bid: f64) -> bool {
        self.ctr(bid) > self.click_threshold
    }

    /// Ex-post utility at `bid` under this round's threshold.
    pub fn utility(&self, bid: f64, value: f64) -> f64 {
        if self.clicked(bid) {
            (value - self.price(bid)).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn alloc_curve(&self, grid: &BidGrid) -> AllocationCurve {
        let x: Vec<f64> = grid.points().iter().map(|&b| self.ctr(b)).collect();
        AllocationCurve::binary(&x).expect("CTRs lie in [0, 1]")
    }

    pub fn payment_curve(&self, grid: &BidGrid) -> PaymentCurve {
        let p: Vec<f64> = grid.points().iter().map(|&b| self.price(b)).collect();
        PaymentCurve::per_unit(&p).expect("prices lie in [0, 1]")
    }

    pub fn feedback(&self, grid: &BidGrid, bid: usize, value: f64) -> RoundFeedback {
        let b = grid.get(bid);
        let clicked = self.clicked(b);
        let payment = self.payment_curve(grid);
        let rewards = RewardFunction::from_values(&[value, 0.0], &payment).expect("values lie in [0, 1]");
        RoundFeedback {
            alloc: self.alloc_curve(grid),
            payment,
            rewards,
            realized: if clicked { WIN } else { LOSE },
            value_revealed: clicked.then_some(value),
            realized_utility: self.utility(b, value),
        }
    }
}

/// A period of several GSP contests that share the allocation and payment
/// curves but draw their own click thresholds and values.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSponsoredRound {
    auction: GspRound,
    thresholds: Vec<f64>,
    values: Vec<f64>,
}

impl BatchSponsoredRound {
    pub fn new(auction: GspRound, thresholds: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            bail!(InvalidArgument, "a batch needs at least one contest");
        }
        if thresholds.len() != values.len() {
            bail!(InvalidArgument, "one value per contest is required");
        }
        if thresholds.iter().chain(&values).any(|x| !(0.0..=1.0).contains(x)) {
            bail!(InvalidArgument, "thresholds and values must lie in [0, 1]");
        }
        Ok(Self { auction, thresholds, values })
    }

    pub fn auction(&self) -> &GspRound {
        &self.auction
    }

    pub fn size(&self) -> usize {
        self.thresholds.len()
    }

    fn clicks(&self, bid: f64) -> impl Iterator<Item = f64> + '_ {
        let ctr = self.auction.ctr(bid);
        self.thresholds.iter().zip(&self.values).filter(move |(&th, _)| ctr > th).map(|(_, &v)| v)
    }

    /// Average realized utility over the contests at `bid`.
    pub fn utility(&self, bid: f64) -> f64 {
        let price = self.auction.price(bid);
        self.clicks(bid).map(|v| (v - price).clamp(-1.0, 1.0)).sum::<f64>() / self.size() as f64
    }

    /// Batch feedback after bidding `grid[bid]`: click frequency and
    /// `Q(b, click) = v̂ − p(b)` with `v̂` the mean value over clicked contests.
    pub fn feedback(&self, grid: &BidGrid, bid: usize) -> (AllocationCurve, BatchFeedback, f64) {
        let b = grid.get(bid);
        let clicked: Vec<f64> = self.clicks(b).collect();
        let f_click = clicked.len() as f64 / self.size() as f64;
        let q: Vec<f64> = if clicked.is_empty() {
            alloc::vec![0.0; 2 * grid.len()]
        } else {
            let v_hat = clicked.iter().sum::<f64>() / clicked.len() as f64;
            grid.points().iter().flat_map(|&g| [(v_hat - self.auction.price(g)).clamp(-1.0, 1.0), 0.0]).collect()
        };
        let freq = alloc::vec![f_click, 1.0 - f_click];
        let batch = BatchFeedback::new(self.size(), freq, q).expect("frequencies are consistent");
        (self.auction.alloc_curve(grid), batch, self.utility(b))
    }
}
