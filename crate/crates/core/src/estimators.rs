//! Importance-weighted utility estimators.
//!
//! Every estimator returns `ũ_t(b)`, an estimate of the translated utility
//! `u_t(b) − 1` for each grid bid. Rewards live in `[-1, 1]`, so all
//! estimates are non-positive, which is what the second-order bound on the
//! exponential-weights update needs.
//!
//! The WIN-EXP estimators reuse the allocation curve `x_t(·)`, which the
//! learner always observes: the probability of the realized outcome under
//! bid `b` is divided by its marginal probability under the current mixed
//! strategy. The EXP3 baseline only uses the realized utility of the
//! submitted bid.
//!
//! The `*_second_moments` functions evaluate `E[ũ_t(b)²]` exactly from full
//! knowledge of the round; the harness uses them for regret-bound audits.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::graph::FeedbackGraph;
use crate::grid::{BidDistribution, BidGrid};
use crate::outcome::{AllocationCurve, BatchFeedback, RewardFunction, UtilityEstimate, LOSE, WIN};

fn check_shapes(dist: &BidDistribution, alloc: &AllocationCurve) -> Result<()> {
    if dist.len() != alloc.bids() {
        bail!(InvalidArgument, "distribution covers {} bids, allocation curve {}", dist.len(), alloc.bids());
    }
    Ok(())
}

fn check_row(row: &[f64], bids: usize, what: &str) -> Result<()> {
    if row.len() != bids {
        bail!(InvalidArgument, "{what} has {} entries, expected {bids}", row.len());
    }
    if let Some(r) = row.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
        bail!(InvalidArgument, "{what} entry {r} outside [-1, 1]");
    }
    Ok(())
}

/// Win-only feedback: `x_t(·)` is always seen, `r_t(·)` only after a win.
///
/// Won: `ũ(b) = (r(b) − 1)·x(b) / Pr[A]`. Lost: `ũ(b) = −(1 − x(b)) / Pr[¬A]`.
pub fn win_only_estimate(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    won: bool,
    reward: Option<&[f64]>,
) -> Result<UtilityEstimate> {
    check_shapes(dist, alloc)?;
    if alloc.outcomes() != 2 {
        bail!(InvalidArgument, "win-only feedback needs a binary allocation curve");
    }
    let p_win = alloc.marginal(dist, WIN);
    let values = if won {
        let Some(reward) = reward else {
            bail!(InvalidArgument, "a won round must reveal the reward function");
        };
        check_row(reward, dist.len(), "reward row")?;
        if !(p_win > 0.0) {
            bail!(InconsistentFeedback, "won a reward whose probability is zero");
        }
        (0..dist.len()).map(|b| (reward[b] - 1.0) * alloc.win_prob(b) / p_win).collect()
    } else {
        let p_lose = alloc.marginal(dist, LOSE);
        if !(p_lose > 0.0) {
            bail!(InconsistentFeedback, "lost although winning has probability one");
        }
        (0..dist.len()).map(|b| -alloc.prob(b, LOSE) / p_lose).collect()
    };
    Ok(UtilityEstimate::new(values))
}

/// Outcome-based feedback: `ũ(b) = (r(b, o_t) − 1)·x(b, o_t) / Pr_t[o_t]`.
pub fn outcome_estimate(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    realized: usize,
    reward_row: &[f64],
) -> Result<UtilityEstimate> {
    check_shapes(dist, alloc)?;
    if realized >= alloc.outcomes() {
        bail!(InvalidArgument, "realized outcome {realized} out of range");
    }
    check_row(reward_row, dist.len(), "reward row")?;
    let marginal = alloc.marginal(dist, realized);
    if !(marginal > 0.0) {
        bail!(InconsistentFeedback, "outcome {realized} has zero marginal probability");
    }
    Ok(UtilityEstimate::new(
        (0..dist.len()).map(|b| (reward_row[b] - 1.0) * alloc.prob(b, realized) / marginal).collect(),
    ))
}

/// The closed form for a second-price auction where the learner sees the
/// highest other bid `B_t` and loses ties.
///
/// Won: `(v − B_t − 1)·1{b > B_t} / Σ_{b' > B_t} π(b')`.
/// Lost: `−1{b ≤ B_t} / Σ_{b' ≤ B_t} π(b')`.
pub fn second_price_estimate(
    grid: &BidGrid,
    dist: &BidDistribution,
    highest_other: f64,
    value: Option<f64>,
    won: bool,
) -> Result<UtilityEstimate> {
    if grid.len() != dist.len() {
        bail!(InvalidArgument, "grid and distribution sizes differ");
    }
    let wins = |b: usize| grid.get(b) > highest_other;
    let mass_above: f64 = (0..grid.len()).filter(|&b| wins(b)).map(|b| dist.prob(b)).sum();
    let values = if won {
        let Some(v) = value else {
            bail!(InvalidArgument, "a won round must reveal the value");
        };
        if !(mass_above > 0.0) {
            bail!(InconsistentFeedback, "won although no grid bid beats {highest_other}");
        }
        let reward = (v - highest_other).clamp(-1.0, 1.0);
        (0..grid.len()).map(|b| if wins(b) { (reward - 1.0) / mass_above } else { 0.0 }).collect()
    } else {
        let mass_below: f64 = (0..grid.len()).filter(|&b| !wins(b)).map(|b| dist.prob(b)).sum();
        if !(mass_below > 0.0) {
            bail!(InconsistentFeedback, "lost although every grid bid beats {highest_other}");
        }
        (0..grid.len()).map(|b| if wins(b) { 0.0 } else { -1.0 / mass_below }).collect()
    };
    Ok(UtilityEstimate::new(values))
}

/// Batch rewards: `ũ(b) = Σ_o x(b, o)/Pr_t[o] · f_t(o)·(Q_t(b, o) − 1)`.
pub fn batch_estimate(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    batch: &BatchFeedback,
) -> Result<UtilityEstimate> {
    check_batch(dist, alloc, batch)?;
    let marginals = alloc.marginals(dist);
    for (o, &f) in batch.frequencies().iter().enumerate() {
        if f > 0.0 && !(marginals[o] > 0.0) {
            bail!(InconsistentFeedback, "outcome {o} observed with zero marginal probability");
        }
    }
    let values = (0..dist.len())
        .map(|b| {
            (0..alloc.outcomes())
                .filter(|&o| batch.freq(o) > 0.0)
                .map(|o| alloc.prob(b, o) / marginals[o] * batch.freq(o) * (batch.q(b, o) - 1.0))
                .sum()
        })
        .collect();
    Ok(UtilityEstimate::new(values))
}

/// Batch estimate with `f_t(o)` replaced by its mean `x_t(b_t, o)`; the
/// realized frequencies are never read.
pub fn batch_estimate_mean_variant(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    batch: &BatchFeedback,
    submitted: usize,
) -> Result<UtilityEstimate> {
    check_batch(dist, alloc, batch)?;
    if submitted >= dist.len() {
        bail!(InvalidArgument, "submitted bid index {submitted} out of range");
    }
    let marginals = alloc.marginals(dist);
    let values = (0..dist.len())
        .map(|b| {
            (0..alloc.outcomes())
                .filter(|&o| alloc.prob(submitted, o) > 0.0)
                .map(|o| alloc.prob(b, o) * alloc.prob(submitted, o) / marginals[o] * (batch.q(b, o) - 1.0))
                .sum()
        })
        .collect();
    Ok(UtilityEstimate::new(values))
}

/// Mean-variant batch estimate scaled by `|I_t| / I_max`, for periods with
/// varying numbers of contests.
pub fn scaled_batch_estimate(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    batch: &BatchFeedback,
    submitted: usize,
    max_batch: usize,
) -> Result<UtilityEstimate> {
    if max_batch == 0 {
        bail!(InvalidArgument, "maximum batch size must be positive");
    }
    if batch.size() > max_batch {
        bail!(InvalidArgument, "batch of {} exceeds the maximum {max_batch}", batch.size());
    }
    if batch.size() == 0 {
        check_batch(dist, alloc, batch)?;
        return Ok(UtilityEstimate::zeros(dist.len()));
    }
    let mut est = batch_estimate_mean_variant(dist, alloc, batch, submitted)?;
    est.scale(batch.size() as f64 / max_batch as f64);
    Ok(est)
}

fn check_batch(dist: &BidDistribution, alloc: &AllocationCurve, batch: &BatchFeedback) -> Result<()> {
    check_shapes(dist, alloc)?;
    if batch.outcomes() != alloc.outcomes() || batch.bids() != alloc.bids() {
        bail!(InvalidArgument, "batch feedback shape does not match the allocation curve");
    }
    Ok(())
}

/// Feedback-graph estimate over the `ε`-subgraph of outcomes whose marginal
/// is at least `threshold`:
///
/// `ũ(b) = 1{o_t ∈ O_ε} Σ_{o ∈ N^out_ε(o_t)} (r(b, o) − 1)·x(b, o) / Σ_{o' ∈ N^in_ε(o)} Pr_t[o']`.
///
/// `rewards[o]` must hold `r_t(·, o)` for every out-neighbour of `o_t`;
/// other entries are ignored.
pub fn graph_estimate(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    realized: usize,
    rewards: &[Option<Vec<f64>>],
    graph: &FeedbackGraph,
    threshold: f64,
) -> Result<UtilityEstimate> {
    check_shapes(dist, alloc)?;
    graph.check_self_loops()?;
    if graph.len() != alloc.outcomes() || rewards.len() != alloc.outcomes() {
        bail!(InvalidArgument, "graph, rewards and allocation curve disagree on the number of outcomes");
    }
    if realized >= alloc.outcomes() {
        bail!(InvalidArgument, "realized outcome {realized} out of range");
    }
    if !(threshold > 0.0 && threshold < 0.5) {
        bail!(InvalidArgument, "graph threshold must lie in (0, 1/2), got {threshold}");
    }
    let marginals = alloc.marginals(dist);
    if !(marginals[realized] > 0.0) {
        bail!(InconsistentFeedback, "outcome {realized} has zero marginal probability");
    }
    let sub = graph.epsilon_subgraph(&marginals, threshold);
    if !sub.contains(realized) {
        return Ok(UtilityEstimate::zeros(dist.len()));
    }
    let mut values = alloc::vec![0.0; dist.len()];
    for o in sub.out_neighbors(realized) {
        let Some(row) = rewards[o].as_deref() else {
            bail!(InvalidArgument, "missing reward row for observed outcome {o}");
        };
        check_row(row, dist.len(), "reward row")?;
        let cover: f64 = sub.in_neighbors(o).map(|src| marginals[src]).sum();
        for (b, v) in values.iter_mut().enumerate() {
            *v += (row[b] - 1.0) * alloc.prob(b, o) / cover;
        }
    }
    Ok(UtilityEstimate::new(values))
}

/// EXP3's importance-weighted estimate of `u − 1`:
/// `ũ(b_t) = (u_t − 1)/π(b_t)`, zero elsewhere.
pub fn exp3_estimate(dist: &BidDistribution, submitted: usize, realized_utility: f64) -> Result<UtilityEstimate> {
    if submitted >= dist.len() {
        bail!(InvalidArgument, "submitted bid index {submitted} out of range");
    }
    if !(-1.0..=1.0).contains(&realized_utility) {
        bail!(InvalidArgument, "realized utility {realized_utility} outside [-1, 1]");
    }
    let mut values = alloc::vec![0.0; dist.len()];
    values[submitted] = (realized_utility - 1.0) / dist.prob(submitted);
    Ok(UtilityEstimate::new(values))
}

/// Exact `E[ũ(b)²]` of the outcome (and win-only) estimator:
/// `Σ_o (r(b, o) − 1)² x(b, o)² / Pr_t[o]`.
pub fn outcome_second_moments(dist: &BidDistribution, alloc: &AllocationCurve, rewards: &RewardFunction) -> Vec<f64> {
    let marginals = alloc.marginals(dist);
    (0..dist.len())
        .map(|b| {
            (0..alloc.outcomes())
                .filter(|&o| marginals[o] > 0.0)
                .map(|o| {
                    let d = rewards.get(b, o) - 1.0;
                    let x = alloc.prob(b, o);
                    d * d * x * x / marginals[o]
                })
                .sum()
        })
        .collect()
}

/// Exact `E[ũ(b)²]` of the EXP3 estimator: `Σ_o x(b, o)(r(b, o) − 1)² / π(b)`.
pub fn exp3_second_moments(dist: &BidDistribution, alloc: &AllocationCurve, rewards: &RewardFunction) -> Vec<f64> {
    (0..dist.len())
        .map(|b| {
            let s: f64 = (0..alloc.outcomes())
                .map(|o| {
                    let d = rewards.get(b, o) - 1.0;
                    alloc.prob(b, o) * d * d
                })
                .sum();
            s / dist.prob(b)
        })
        .collect()
}

/// Exact `E[ũ(b)²]` of the feedback-graph estimator, summing over realized
/// outcomes inside the `ε`-subgraph.
pub fn graph_second_moments(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    rewards: &RewardFunction,
    graph: &FeedbackGraph,
    threshold: f64,
) -> Vec<f64> {
    let marginals = alloc.marginals(dist);
    let sub = graph.epsilon_subgraph(&marginals, threshold);
    let mut moments = alloc::vec![0.0; dist.len()];
    for realized in sub.nodes() {
        for (b, m) in moments.iter_mut().enumerate() {
            let inner: f64 = sub
                .out_neighbors(realized)
                .map(|o| {
                    let cover: f64 = sub.in_neighbors(o).map(|src| marginals[src]).sum();
                    (rewards.get(b, o) - 1.0) * alloc.prob(b, o) / cover
                })
                .sum();
            *m += marginals[realized] * inner * inner;
        }
    }
    moments
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn win_only_examples() {
        let d = BidDistribution::uniform(2).unwrap();
        let x = AllocationCurve::binary(&[0.2, 0.8]).unwrap();
        let won = win_only_estimate(&d, &x, true, Some(&[0.5, 0.1])).unwrap();
        close(won.values(), &[-0.2, -1.44], 1e-12);
        let lost = win_only_estimate(&d, &x, false, None).unwrap();
        close(lost.values(), &[-1.6, -0.4], 1e-12);
        let flat = win_only_estimate(&d, &x, true, Some(&[1.0, 1.0])).unwrap();
        assert!(flat.values().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn win_only_impossible_win() {
        let d = BidDistribution::uniform(2).unwrap();
        let x = AllocationCurve::binary(&[0.0, 0.0]).unwrap();
        let err = win_only_estimate(&d, &x, true, Some(&[0.5, 0.5]));
        assert!(matches!(err, Err(crate::Error::InconsistentFeedback(_))));
        let x = AllocationCurve::binary(&[1.0, 1.0]).unwrap();
        assert!(matches!(win_only_estimate(&d, &x, false, None), Err(crate::Error::InconsistentFeedback(_))));
    }

    #[test]
    fn outcome_three_outcome_example() {
        let d = BidDistribution::uniform(2).unwrap();
        let x = AllocationCurve::new(3, vec![0.5, 0.3, 0.2, 0.1, 0.6, 0.3]).unwrap();
        let est = outcome_estimate(&d, &x, 1, &[0.0, 0.5]).unwrap();
        close(est.values(), &[-0.3 / 0.45, -0.3 / 0.45], 1e-12);
        let zero = outcome_estimate(&d, &x, 1, &[1.0, 1.0]).unwrap();
        assert!(zero.values().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn outcome_zero_marginal() {
        let d = BidDistribution::uniform(2).unwrap();
        let x = AllocationCurve::new(3, vec![0.5, 0.5, 0.0, 0.1, 0.9, 0.0]).unwrap();
        assert!(matches!(outcome_estimate(&d, &x, 2, &[0.0, 0.0]), Err(crate::Error::InconsistentFeedback(_))));
    }

    #[test]
    fn second_price_examples() {
        let grid = BidGrid::uniform(0.25).unwrap();
        let d = BidDistribution::uniform(grid.len()).unwrap();
        let lost = second_price_estimate(&grid, &d, 1.0, None, false).unwrap();
        assert!(lost.values().iter().all(|&u| (u + 1.0).abs() < 1e-15));
        let won = second_price_estimate(&grid, &d, 0.0, Some(1.0), true).unwrap();
        assert!(won.values().iter().all(|&u| u == 0.0));
        assert!(second_price_estimate(&grid, &d, 1.0, Some(1.0), true).is_err());
    }

    #[test]
    fn batch_examples() {
        let d = BidDistribution::uniform(1).unwrap();
        let x = AllocationCurve::binary(&[0.5]).unwrap();
        let batch = BatchFeedback::new(10, vec![0.6, 0.4], vec![0.5, 0.0]).unwrap();
        let est = batch_estimate(&d, &x, &batch).unwrap();
        close(est.values(), &[-0.7], 1e-12);

        let ones = BatchFeedback::new(3, vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        let est = batch_estimate(&d, &x, &ones).unwrap();
        assert_eq!(est.values(), &[0.0]);
    }

    #[test]
    fn batch_singleton_matches_outcome() {
        let d = BidDistribution::from_weights(&[0.2, 0.5, 0.3]).unwrap();
        let x = AllocationCurve::new(3, vec![0.2, 0.5, 0.3, 0.6, 0.1, 0.3, 0.1, 0.1, 0.8]).unwrap();
        let row = vec![0.3, -0.2, 0.9];
        let batch = BatchFeedback::from_contests(3, &[2], core::slice::from_ref(&row)).unwrap();
        close(
            batch_estimate(&d, &x, &batch).unwrap().values(),
            outcome_estimate(&d, &x, 2, &row).unwrap().values(),
            1e-12,
        );
    }

    #[test]
    fn mean_variant_substitution_and_hand_formula() {
        let d = BidDistribution::from_weights(&[0.3, 0.7]).unwrap();
        let x = AllocationCurve::binary(&[0.4, 0.9]).unwrap();
        // x(b_t = 1, ·) = (0.9, 0.1) equals the realized frequencies.
        let batch = BatchFeedback::new(10, vec![0.9, 0.1], vec![0.2, 0.0, 0.5, 0.0]).unwrap();
        close(
            batch_estimate_mean_variant(&d, &x, &batch, 1).unwrap().values(),
            batch_estimate(&d, &x, &batch).unwrap().values(),
            1e-12,
        );
        // Q ≡ 1 on the click outcome: only the no-click term remains.
        let ones = BatchFeedback::new(4, vec![0.5, 0.5], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let est = batch_estimate_mean_variant(&d, &x, &ones, 0).unwrap();
        let p_lose = 0.3 * 0.6 + 0.7 * 0.1;
        close(est.values(), &[-(0.6 * 0.6) / p_lose, -(0.1 * 0.6) / p_lose], 1e-12);
    }

    #[test]
    fn scaled_examples() {
        let d = BidDistribution::from_weights(&[0.3, 0.7]).unwrap();
        let x = AllocationCurve::binary(&[0.4, 0.9]).unwrap();
        let batch = BatchFeedback::new(4, vec![0.5, 0.5], vec![0.2, 0.0, 0.5, 0.0]).unwrap();
        let full = batch_estimate_mean_variant(&d, &x, &batch, 1).unwrap();
        close(scaled_batch_estimate(&d, &x, &batch, 1, 4).unwrap().values(), full.values(), 0.0);
        let half: Vec<f64> = full.values().iter().map(|v| v * 0.5).collect();
        close(scaled_batch_estimate(&d, &x, &batch, 1, 8).unwrap().values(), &half, 0.0);
        let empty = BatchFeedback::new(0, vec![0.0, 0.0], vec![0.0; 4]).unwrap();
        assert_eq!(scaled_batch_estimate(&d, &x, &empty, 1, 8).unwrap().values(), &[0.0, 0.0]);
        assert!(scaled_batch_estimate(&d, &x, &batch, 1, 0).is_err());
        assert!(scaled_batch_estimate(&d, &x, &batch, 1, 3).is_err());
    }

    #[test]
    fn exp3_examples() {
        let d = BidDistribution::uniform(4).unwrap();
        assert_eq!(exp3_estimate(&d, 2, 1.0).unwrap().values(), &[0.0; 4]);
        assert_eq!(exp3_estimate(&d, 1, 0.5).unwrap().values(), &[0.0, -2.0, 0.0, 0.0]);
    }

    #[test]
    fn graph_self_loops_match_outcome_and_gate() {
        let d = BidDistribution::from_weights(&[0.2, 0.8]).unwrap();
        let x = AllocationCurve::new(3, vec![0.5, 0.3, 0.2, 0.1, 0.6, 0.3]).unwrap();
        let g = FeedbackGraph::self_loops(3);
        let row = vec![0.2, -0.4];
        let rewards = vec![None, Some(row.clone()), None];
        close(
            graph_estimate(&d, &x, 1, &rewards, &g, 0.01).unwrap().values(),
            outcome_estimate(&d, &x, 1, &row).unwrap().values(),
            1e-12,
        );
        // Pr[o = 2] = 0.28 is below the threshold 0.3: the gate zeroes the estimate.
        let rewards = vec![None, None, Some(row)];
        assert_eq!(graph_estimate(&d, &x, 2, &rewards, &g, 0.3).unwrap().values(), &[0.0, 0.0]);
    }

    #[test]
    fn graph_missing_self_loop() {
        let d = BidDistribution::uniform(1).unwrap();
        let x = AllocationCurve::binary(&[0.5]).unwrap();
        let g = FeedbackGraph::from_masks(vec![0b11, 0b00]);
        let rewards = vec![Some(vec![0.0]), Some(vec![0.0])];
        assert!(matches!(graph_estimate(&d, &x, 0, &rewards, &g, 0.1), Err(crate::Error::InvalidGraph(_))));
    }
}
