mod common;

use bidlab_core::graph::{graph_threshold, FeedbackGraph};
use common::{brute_force_alpha, random_graph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn five_cycle_has_independence_number_two() {
    let g = FeedbackGraph::cycle(5);
    assert_eq!(g.independence_number().unwrap(), 2);
    assert_eq!(brute_force_alpha(&g), 2);
}

#[test]
fn simple_families() {
    for n in 1..=8 {
        assert_eq!(FeedbackGraph::self_loops(n).independence_number().unwrap(), n);
        assert_eq!(FeedbackGraph::complete(n).independence_number().unwrap(), 1);
    }
}

#[test]
fn edges_count_in_either_direction() {
    let g = FeedbackGraph::new(3, &[(0, 1)]).unwrap();
    assert_eq!(g.independence_number().unwrap(), 2);
    assert!(g.has_edge(0, 0) && g.has_edge(0, 1) && !g.has_edge(1, 0));
    assert_eq!(g.in_neighbors(1).collect::<Vec<_>>(), vec![0, 1]);
    assert_eq!(g.out_neighbors(0).collect::<Vec<_>>(), vec![0, 1]);
}

#[test]
fn threshold_is_one_over_four_o_t() {
    assert!((graph_threshold(5, 2000).unwrap() - 1.0 / 40_000.0).abs() < 1e-18);
    assert!(graph_threshold(0, 10).is_err());
}

#[test]
fn alon_lemma_holds_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..2000 {
        let n = rng.random_range(1..=8);
        let density = rng.random::<f64>();
        let g = random_graph(&mut rng, n, density);
        let eps = rng.random_range(0.001..(1.0 / n as f64));
        // Marginals on the simplex, each at least ε.
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let marginals: Vec<f64> = raw.iter().map(|r| eps + (1.0 - n as f64 * eps) * r / total).collect();
        let alpha = g.independence_number().unwrap() as f64;
        let bound = 4.0 * alpha * (4.0 * n as f64 / (alpha * eps)).ln();
        assert!(g.coverage_ratio(&marginals) <= bound + 1e-12);
    }
}

proptest! {
    #[test]
    fn independence_number_matches_brute_force(seed in any::<u64>(), n in 1usize..=10, p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, p);
        prop_assert_eq!(g.independence_number().unwrap(), brute_force_alpha(&g));
    }

    #[test]
    fn subgraphs_never_raise_independence(seed in any::<u64>(), n in 1usize..=10, p in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, n, p);
        let marginals: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let sub = g.epsilon_subgraph(&marginals, rng.random::<f64>());
        let alpha = sub.independence_number().unwrap();
        prop_assert!(alpha <= g.independence_number().unwrap());
        prop_assert_eq!(alpha, brute_force_alpha(&sub));
        prop_assert!(sub.nodes().all(|o| marginals[o] >= 0.0 && g.contains(o)));
    }
}
