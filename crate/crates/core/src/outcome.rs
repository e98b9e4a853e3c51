//! Outcome sets and the per-round curves revealed to the learner.
//!
//! Curves are tables indexed by `(grid bid, outcome)`, stored row-major per
//! bid. Binary environments use outcome `0` for the win (click) and outcome
//! `1` for the loss.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::grid::BidDistribution;

pub const WIN: usize = 0;
pub const LOSE: usize = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSet {
    labels: Vec<String>,
}

impl OutcomeSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            bail!(InvalidArgument, "an outcome set needs at least 2 outcomes");
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                bail!(InvalidArgument, "duplicate outcome label {l:?}");
            }
        }
        Ok(Self { labels })
    }

    pub fn binary() -> Self {
        Self { labels: alloc::vec!["win".to_string(), "lose".to_string()] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// `x_t(b, o)`: for each grid bid, a distribution over outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationCurve {
    outcomes: usize,
    table: Vec<f64>,
}

impl AllocationCurve {
    pub fn new(outcomes: usize, table: Vec<f64>) -> Result<Self> {
        if outcomes < 2 {
            bail!(InvalidArgument, "allocation curves need at least 2 outcomes");
        }
        if table.is_empty() || !table.len().is_multiple_of(outcomes) {
            bail!(InvalidArgument, "allocation table length {} is not a multiple of {outcomes}", table.len());
        }
        for row in table.chunks(outcomes) {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                bail!(InvalidArgument, "allocation probabilities must lie in [0, 1]");
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                bail!(InvalidArgument, "allocation row sums to {total}, expected 1");
            }
        }
        Ok(Self { outcomes, table })
    }

    /// Binary curve from win (click) probabilities; the loss column is the complement.
    pub fn binary(win_probs: &[f64]) -> Result<Self> {
        if win_probs.is_empty() {
            bail!(InvalidArgument, "allocation curve over an empty grid");
        }
        if let Some(p) = win_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!(InvalidArgument, "win probability {p} outside [0, 1]");
        }
        let table = win_probs.iter().flat_map(|&x| [x, 1.0 - x]).collect();
        Ok(Self { outcomes: 2, table })
    }

    pub fn bids(&self) -> usize {
        self.table.len() / self.outcomes
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn prob(&self, bid: usize, outcome: usize) -> f64 {
        self.table[bid * self.outcomes + outcome]
    }

    pub fn row(&self, bid: usize) -> &[f64] {
        &self.table[bid * self.outcomes..(bid + 1) * self.outcomes]
    }

    pub fn win_prob(&self, bid: usize) -> f64 {
        self.prob(bid, WIN)
    }

    pub fn win_probs(&self) -> Vec<f64> {
        (0..self.bids()).map(|b| self.win_prob(b)).collect()
    }

    /// `Pr_t[o] = Σ_b π(b) x(b, o)`.
    pub fn marginal(&self, dist: &BidDistribution, outcome: usize) -> f64 {
        dist.mass().iter().enumerate().map(|(b, &p)| p * self.prob(b, outcome)).sum()
    }

    pub fn marginals(&self, dist: &BidDistribution) -> Vec<f64> {
        (0..self.outcomes).map(|o| self.marginal(dist, o)).collect()
    }

    /// Samples an outcome for `bid` by inverting its CDF at `u ∈ [0, 1)`.
    pub fn outcome_at(&self, bid: usize, u: f64) -> usize {
        let mut acc = 0.0;
        let row = self.row(bid);
        for (o, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return o;
            }
        }
        row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
    }
}

/// Per-unit payments `p_t(b, o)`; `0` on outcomes that carry no charge.
#[derive(Debug, Clone, PartialEq)]
pub struct PaymentCurve {
    outcomes: usize,
    table: Vec<f64>,
}

impl PaymentCurve {
    pub fn new(outcomes: usize, table: Vec<f64>) -> Result<Self> {
        if outcomes < 2 || table.is_empty() || !table.len().is_multiple_of(outcomes) {
            bail!(InvalidArgument, "payment table shape does not match {outcomes} outcomes");
        }
        if let Some(p) = table.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!(InvalidArgument, "payment {p} outside [0, 1]");
        }
        Ok(Self { outcomes, table })
    }

    /// Binary curve charging `per_unit[b]` on a win and nothing on a loss.
    pub fn per_unit(per_unit: &[f64]) -> Result<Self> {
        Self::new(2, per_unit.iter().flat_map(|&p| [p, 0.0]).collect())
    }

    pub fn bids(&self) -> usize {
        self.table.len() / self.outcomes
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn payment(&self, bid: usize, outcome: usize) -> f64 {
        self.table[bid * self.outcomes + outcome]
    }

    pub fn win_payments(&self) -> Vec<f64> {
        (0..self.bids()).map(|b| self.payment(b, WIN)).collect()
    }
}

/// `r_t(b, o)` with entries in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardFunction {
    outcomes: usize,
    table: Vec<f64>,
}

impl RewardFunction {
    pub fn new(outcomes: usize, table: Vec<f64>) -> Result<Self> {
        if outcomes < 2 || table.is_empty() || !table.len().is_multiple_of(outcomes) {
            bail!(InvalidArgument, "reward table shape does not match {outcomes} outcomes");
        }
        if let Some(r) = table.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
            bail!(InvalidArgument, "reward {r} outside [-1, 1]");
        }
        Ok(Self { outcomes, table })
    }

    /// `r(b, o) = value(o) − p(b, o)`, clipped to `[-1, 1]`.
    pub fn from_values(values: &[f64], payment: &PaymentCurve) -> Result<Self> {
        if values.len() != payment.outcomes() {
            bail!(InvalidArgument, "{} outcome values for {} outcomes", values.len(), payment.outcomes());
        }
        let table = (0..payment.bids())
            .flat_map(|b| values.iter().enumerate().map(move |(o, &v)| (b, o, v)))
            .map(|(b, o, v)| (v - payment.payment(b, o)).clamp(-1.0, 1.0))
            .collect();
        Self::new(payment.outcomes(), table)
    }

    pub fn bids(&self) -> usize {
        self.table.len() / self.outcomes
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn get(&self, bid: usize, outcome: usize) -> f64 {
        self.table[bid * self.outcomes + outcome]
    }

    /// `r(·, o)` across the grid.
    pub fn column(&self, outcome: usize) -> Vec<f64> {
        (0..self.bids()).map(|b| self.get(b, outcome)).collect()
    }

    /// `u(b) = Σ_o r(b, o) x(b, o)`.
    pub fn expected_utility(&self, alloc: &AllocationCurve) -> Vec<f64> {
        (0..self.bids()).map(|b| (0..self.outcomes).map(|o| self.get(b, o) * alloc.prob(b, o)).sum()).collect()
    }
}

/// One utility estimate `ũ_t(b)` per grid bid.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEstimate(Vec<f64>);

impl UtilityEstimate {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(alloc::vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, bid: usize) -> f64 {
        self.0[bid]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for v in &mut self.0 {
            *v *= factor;
        }
    }
}

/// Feedback from a batch of reward contests sharing one allocation curve:
/// realized outcome frequencies `f_t(o)` and conditional average rewards
/// `Q_t(b, o)` (zero for outcomes that never occurred).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchFeedback {
    size: usize,
    freq: Vec<f64>,
    q: Vec<f64>,
}

impl BatchFeedback {
    /// `q` is row-major per bid, one entry per outcome.
    pub fn new(size: usize, freq: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::build(size, freq, q, false)
    }

    /// Like [`BatchFeedback::new`], but `Q` may be non-zero for outcomes
    /// that did not occur, for settings where the reward of every outcome is
    /// known regardless of the realization.
    pub fn with_known_rewards(size: usize, freq: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::build(size, freq, q, true)
    }

    fn build(size: usize, freq: Vec<f64>, q: Vec<f64>, known: bool) -> Result<Self> {
        let outcomes = freq.len();
        if outcomes < 2 {
            bail!(InvalidArgument, "batch feedback needs at least 2 outcomes");
        }
        if q.is_empty() || !q.len().is_multiple_of(outcomes) {
            bail!(InvalidArgument, "batch reward table does not match {outcomes} outcomes");
        }
        if freq.iter().any(|f| !(0.0..=1.0).contains(f)) {
            bail!(InvalidArgument, "outcome frequencies must lie in [0, 1]");
        }
        if size > 0 {
            let total: f64 = freq.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                bail!(InvalidArgument, "outcome frequencies sum to {total}, expected 1");
            }
        } else if freq.iter().any(|&f| f != 0.0) {
            bail!(InvalidArgument, "an empty batch must have zero frequencies");
        }
        for row in q.chunks(outcomes) {
            for (o, &v) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&v) {
                    bail!(InvalidArgument, "batch reward {v} outside [-1, 1]");
                }
                if !known && freq[o] == 0.0 && v != 0.0 {
                    bail!(InvalidArgument, "Q must be zero for unobserved outcome {o}");
                }
            }
        }
        Ok(Self { size, freq, q })
    }

    /// Aggregates per-contest realized outcomes and reward rows.
    ///
    /// `contest_rewards[τ]` is `r_τ(·, o_τ)` across the grid.
    pub fn from_contests(outcomes: usize, realized: &[usize], contest_rewards: &[Vec<f64>]) -> Result<Self> {
        if realized.len() != contest_rewards.len() {
            bail!(InvalidArgument, "one reward row per contest is required");
        }
        let bids = contest_rewards.first().map_or(0, Vec::len);
        if bids == 0 {
            bail!(InvalidArgument, "batch feedback needs at least one contest");
        }
        let mut counts = alloc::vec![0usize; outcomes];
        let mut q = alloc::vec![0.0; bids * outcomes];
        for (&o, row) in realized.iter().zip(contest_rewards) {
            if o >= outcomes || row.len() != bids {
                bail!(InvalidArgument, "contest feedback does not match the outcome set or grid");
            }
            counts[o] += 1;
            for (b, &r) in row.iter().enumerate() {
                q[b * outcomes + o] += r;
            }
        }
        for b in 0..bids {
            for o in 0..outcomes {
                if counts[o] > 0 {
                    q[b * outcomes + o] /= counts[o] as f64;
                }
            }
        }
        let n = realized.len();
        let freq = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::new(n, freq, q)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn outcomes(&self) -> usize {
        self.freq.len()
    }

    pub fn bids(&self) -> usize {
        self.q.len() / self.freq.len()
    }

    pub fn freq(&self, outcome: usize) -> f64 {
        self.freq[outcome]
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freq
    }

    pub fn q(&self, bid: usize, outcome: usize) -> f64 {
        self.q[bid * self.freq.len() + outcome]
    }
}
