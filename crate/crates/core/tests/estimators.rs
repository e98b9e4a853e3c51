mod common;

use bidlab_core::estimators::{
    batch_estimate, exp3_second_moments, graph_second_moments, outcome_estimate, outcome_second_moments,
    scaled_batch_estimate, win_only_estimate,
};
use bidlab_core::outcome::WIN;
use bidlab_core::{AllocationCurve, BatchFeedback, BidDistribution, BidGrid, EstimatorKind, LearnerState};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: usize = 1000;
const TOL: f64 = 1e-10;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn win_only_is_unbiased() {
    let mut r = rng(1);
    for _ in 0..INSTANCES {
        let inst = Instance::random_binary(&mut r);
        assert!(win_only_bias(&inst) < TOL, "{inst:?}");
    }
}

#[test]
fn outcome_is_unbiased() {
    let mut r = rng(2);
    for _ in 0..INSTANCES {
        let inst = Instance::random_small(&mut r);
        assert!(outcome_bias(&inst) < TOL, "{inst:?}");
    }
}

#[test]
fn exp3_is_unbiased() {
    let mut r = rng(3);
    for _ in 0..INSTANCES {
        let inst = Instance::random_small(&mut r);
        assert!(exp3_bias(&inst) < TOL, "{inst:?}");
    }
}

#[test]
fn batch_is_unbiased_for_contest_averages() {
    let mut r = rng(4);
    for _ in 0..INSTANCES {
        let inst = Instance::random_small(&mut r);
        let n = r.random_range(1..=3);
        let tables = contest_tables(&mut r, &inst, n);
        assert!(batch_bias(&inst, &tables) < TOL, "{inst:?}");
    }
}

#[test]
fn scaled_batch_is_unbiased_after_rescaling() {
    let mut r = rng(5);
    for _ in 0..INSTANCES {
        let inst = Instance::random_small(&mut r);
        let max = r.random_range(1..=20);
        let n = r.random_range(0..=max);
        assert!(scaled_batch_bias(&inst, n, max) < TOL, "{inst:?}");
    }
}

#[test]
fn second_price_closed_form_is_unbiased() {
    let mut r = rng(6);
    for _ in 0..INSTANCES {
        assert!(second_price_bias(&mut r) < TOL);
    }
}

#[test]
fn second_price_closed_form_matches_outcome_estimate() {
    let grid = BidGrid::uniform(0.25).unwrap();
    let dist = BidDistribution::from_weights(&[0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
    let (other, value) = (0.4, 0.9);
    let win: Vec<f64> = grid.points().iter().map(|&b| if b > other { 1.0 } else { 0.0 }).collect();
    let alloc = AllocationCurve::binary(&win).unwrap();
    let reward = vec![value - other; grid.len()];
    let closed = bidlab_core::estimators::second_price_estimate(&grid, &dist, other, Some(value), true).unwrap();
    let general = win_only_estimate(&dist, &alloc, true, Some(&reward)).unwrap();
    assert!(max_abs_diff(closed.values(), general.values()) < 1e-12);
}

#[test]
fn mean_variant_is_biased_when_unobserved_rewards_read_as_zero() {
    // One bid, two equally likely outcomes, reward 1 on both: u − 1 = 0,
    // but every realization charges −1 to the unobserved outcome.
    let inst = Instance { pi: vec![1.0], x: vec![vec![0.5, 0.5]], r: vec![vec![1.0, 1.0]] };
    let mean = scaled_batch_expectation(&inst, 1, 1, false);
    assert!((mean[0] + 0.5).abs() < 1e-12);
    let known = scaled_batch_expectation(&inst, 1, 1, true);
    assert!(known[0].abs() < 1e-12);
}

#[test]
fn second_moment_bounds_hold() {
    let mut r = rng(7);
    for _ in 0..INSTANCES {
        let bin = Instance::random_binary(&mut r);
        assert!(win_only_moment_excess(&bin) <= TOL, "{bin:?}");
        let inst = Instance::random_small(&mut r);
        assert!(outcome_moment_excess(&inst) <= TOL, "{inst:?}");
        let n = r.random_range(1..=3);
        let tables = contest_tables(&mut r, &inst, n);
        assert!(batch_moment_excess(&inst, &tables) <= TOL, "{inst:?}");
    }
}

#[test]
fn exact_moment_functions_match_enumeration() {
    let mut r = rng(8);
    for _ in 0..300 {
        let inst = Instance::random_small(&mut r);
        let (dist, alloc, rewards) = (inst.dist(), inst.alloc(), inst.rewards());
        let (_, second) = outcome_expectation(&inst);
        assert!(max_abs_diff(&outcome_second_moments(&dist, &alloc, &rewards), &second) < 1e-9);
        let (_, second) = exp3_expectation(&inst);
        assert!(max_abs_diff(&exp3_second_moments(&dist, &alloc, &rewards), &second) < 1e-9);
        let g = random_graph(&mut r, inst.outcomes(), 0.4);
        let threshold = r.random_range(0.01..0.3);
        let (_, second) = graph_expectation(&inst, &g, threshold);
        assert!(max_abs_diff(&graph_second_moments(&dist, &alloc, &rewards, &g, threshold), &second) < 1e-9);
    }
}

fn graph_instance(r: &mut ChaCha8Rng) -> (Instance, bidlab_core::graph::FeedbackGraph, f64) {
    let outcomes = r.random_range(2..=6);
    let bids = r.random_range(1..=10);
    let inst = Instance::random(r, bids, outcomes);
    let density = r.random_range(0.0..0.8);
    let g = random_graph(r, outcomes, density);
    let threshold = r.random_range(0.01..0.3);
    (inst, g, threshold)
}

#[test]
fn graph_bias_is_small_on_average_over_the_mixed_strategy() {
    let mut r = rng(9);
    for _ in 0..INSTANCES {
        let (inst, g, eps) = graph_instance(&mut r);
        let (_, weighted) = graph_bias(&inst, &g, eps);
        assert!(weighted <= 2.0 * eps * inst.outcomes() as f64 + TOL, "{inst:?}");
    }
}

#[test]
fn graph_bias_can_exceed_the_per_bid_bound() {
    // A rarely played bid that always lands in a rare outcome loses that
    // outcome's whole contribution when the outcome drops out of O_ε.
    let inst = Instance {
        pi: vec![0.99, 0.01],
        x: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        r: vec![vec![0.5, 0.5], vec![-1.0, -1.0]],
    };
    let g = bidlab_core::graph::FeedbackGraph::self_loops(2);
    let eps = 0.05;
    let (per_bid, weighted) = graph_bias(&inst, &g, eps);
    assert!(per_bid > 2.0 * eps * 2.0);
    assert!((per_bid - 2.0).abs() < 1e-12);
    assert!(weighted <= 2.0 * eps * 2.0);
}

#[test]
fn graph_second_moment_bound_holds() {
    let mut r = rng(10);
    for _ in 0..INSTANCES {
        let (inst, g, eps) = graph_instance(&mut r);
        assert!(graph_moment_excess(&inst, &g, eps) <= TOL, "{inst:?}");
    }
}

#[test]
fn self_loop_graph_above_threshold_is_the_outcome_estimator() {
    let mut r = rng(11);
    for _ in 0..200 {
        let inst = Instance::random_small(&mut r);
        let threshold = 1e-9;
        if (0..inst.outcomes()).any(|o| inst.marginal(o) > 0.0 && inst.marginal(o) < threshold) {
            continue;
        }
        let g = bidlab_core::graph::FeedbackGraph::self_loops(inst.outcomes());
        let (graph_mean, _) = graph_expectation(&inst, &g, threshold);
        let (outcome_mean, _) = outcome_expectation(&inst);
        assert!(max_abs_diff(&graph_mean, &outcome_mean) < 1e-10);
    }
}

#[test]
fn exponential_weights_favour_higher_estimates() {
    let grid = BidGrid::uniform(0.5).unwrap();
    let learner = LearnerState::with_eta(grid, EstimatorKind::Outcome, 10, 0.5).unwrap();
    let alloc = AllocationCurve::new(2, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    let est = outcome_estimate(learner.dist(), &alloc, WIN, &[1.0, 0.0, -1.0]).unwrap();
    let mut dist = learner.dist().clone();
    dist.exp_weights_update(&est, 0.5).unwrap();
    assert!(dist.prob(0) > dist.prob(1) && dist.prob(1) > dist.prob(2));
    let expected: Vec<f64> = est.values().iter().map(|v| (0.5 * v).exp()).collect();
    let total: f64 = expected.iter().sum();
    for b in 0..3 {
        assert!((dist.prob(b) - expected[b] / total).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn estimates_are_non_positive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = Instance::random_small(&mut r);
        let (dist, alloc) = (inst.dist(), inst.alloc());
        for (b, o, _) in inst.events() {
            let est = outcome_estimate(&dist, &alloc, o, &inst.column(o)).unwrap();
            prop_assert!(est.values().iter().all(|&v| v <= 0.0));
            let exp3 = bidlab_core::estimators::exp3_estimate(&dist, b, inst.r[b][o]).unwrap();
            prop_assert!(exp3.values().iter().all(|&v| v <= 0.0));
            let fb = BatchFeedback::from_contests(inst.outcomes(), &[o], &[inst.column(o)]).unwrap();
            prop_assert!(batch_estimate(&dist, &alloc, &fb).unwrap().values().iter().all(|&v| v <= 0.0));
            let scaled = scaled_batch_estimate(&dist, &alloc, &fb, b, 4).unwrap();
            prop_assert!(scaled.values().iter().all(|&v| v <= 0.0));
        }
        let bin = Instance::random_binary(&mut r);
        let (dist, alloc) = (bin.dist(), bin.alloc());
        for o in 0..2 {
            if bin.marginal(o) > 0.0 {
                let reward = bin.column(WIN);
                let est = win_only_estimate(&dist, &alloc, o == WIN, Some(&reward)).unwrap();
                prop_assert!(est.values().iter().all(|&v| v <= 0.0));
            }
        }
    }

    #[test]
    fn updates_keep_a_distribution(seed in any::<u64>(), eta in 1e-4f64..5.0) {
        let mut r = rng(seed);
        let inst = Instance::random_small(&mut r);
        let mut dist = inst.dist();
        for _ in 0..20 {
            let (b, o, _) = inst.events()[r.random_range(0..inst.events().len())];
            let est = bidlab_core::estimators::exp3_estimate(&dist, b, inst.r[b][o]).unwrap();
            dist.exp_weights_update(&est, eta).unwrap();
            let total: f64 = dist.mass().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(dist.mass().iter().all(|&p| p >= 0.0 && p.is_finite()));
        }
    }
}
