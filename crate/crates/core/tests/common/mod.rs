//! Random small instances and exhaustive-expectation oracles.
//!
//! The oracles work on plain tables and never call the estimator-side
//! helpers (marginals, expected utilities, second moments) they are used to
//! check.

#![allow(dead_code)]

use bidlab_core::estimators::{
    batch_estimate, exp3_estimate, graph_estimate, outcome_estimate, scaled_batch_estimate, second_price_estimate,
    win_only_estimate,
};
use bidlab_core::graph::FeedbackGraph;
use bidlab_core::outcome::{LOSE, WIN};
use bidlab_core::{AllocationCurve, BatchFeedback, BidDistribution, BidGrid, RewardFunction};
use rand::Rng;

/// `π`, `x(b, o)` and `r(b, o)` for one round.
#[derive(Debug, Clone)]
pub struct Instance {
    pub pi: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

fn random_simplex<R: Rng>(rng: &mut R, n: usize, zero_prob: f64) -> Vec<f64> {
    let mut w: Vec<f64> =
        (0..n).map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { rng.random::<f64>() + 1e-3 }).collect();
    if w.iter().all(|&v| v == 0.0) {
        w[rng.random_range(0..n)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

fn random_reward<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 1.0,
        1 => -1.0,
        _ => rng.random_range(-1.0..=1.0),
    }
}

impl Instance {
    pub fn random<R: Rng>(rng: &mut R, bids: usize, outcomes: usize) -> Self {
        let pi = random_simplex(rng, bids, 0.0);
        let x = (0..bids).map(|_| random_simplex(rng, outcomes, 0.3)).collect();
        let r = (0..bids).map(|_| (0..outcomes).map(|_| random_reward(rng)).collect()).collect();
        Self { pi, x, r }
    }

    /// `|B| ∈ [1, 10]`, `|O| ∈ [2, 5]`.
    pub fn random_small<R: Rng>(rng: &mut R) -> Self {
        let b = rng.random_range(1..=10);
        let o = rng.random_range(2..=5);
        Self::random(rng, b, o)
    }

    /// Win/lose outcomes with a reward only on the win.
    pub fn random_binary<R: Rng>(rng: &mut R) -> Self {
        let bids = rng.random_range(1..=10);
        let mut inst = Self::random(rng, bids, 2);
        for row in &mut inst.r {
            row[1] = 0.0;
        }
        inst
    }

    pub fn bids(&self) -> usize {
        self.pi.len()
    }

    pub fn outcomes(&self) -> usize {
        self.x[0].len()
    }

    pub fn dist(&self) -> BidDistribution {
        BidDistribution::from_weights(&self.pi).unwrap()
    }

    pub fn alloc(&self) -> AllocationCurve {
        AllocationCurve::new(self.outcomes(), self.x.concat()).unwrap()
    }

    pub fn rewards(&self) -> RewardFunction {
        RewardFunction::new(self.outcomes(), self.r.concat()).unwrap()
    }

    pub fn column(&self, o: usize) -> Vec<f64> {
        self.r.iter().map(|row| row[o]).collect()
    }

    /// `u(b) = Σ_o x(b, o) r(b, o)`.
    pub fn utility(&self, b: usize) -> f64 {
        self.x[b].iter().zip(&self.r[b]).map(|(x, r)| x * r).sum()
    }

    /// `Pr[o] = Σ_b π(b) x(b, o)`.
    pub fn marginal(&self, o: usize) -> f64 {
        self.pi.iter().zip(&self.x).map(|(p, row)| p * row[o]).sum()
    }

    /// Every `(submitted bid, realized outcome, probability)` with positive
    /// probability.
    pub fn events(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for b in 0..self.bids() {
            for o in 0..self.outcomes() {
                let p = self.pi[b] * self.x[b][o];
                if p > 0.0 {
                    out.push((b, o, p));
                }
            }
        }
        out
    }
}

/// `x / y`, reading `0 / 0` as 0.
pub fn ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / y
    }
}

/// First and second moments of a vector-valued random variable given as
/// weighted outcomes.
pub fn moments(events: impl IntoIterator<Item = (f64, Vec<f64>)>, len: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; len];
    let mut second = vec![0.0; len];
    for (p, v) in events {
        for i in 0..len {
            mean[i] += p * v[i];
            second[i] += p * v[i] * v[i];
        }
    }
    (mean, second)
}

/// A random graph over `n` outcomes with self-loops and edge density `p`.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> FeedbackGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    FeedbackGraph::new(n, &edges).unwrap()
}

/// Independence number by enumerating every subset of active nodes.
pub fn brute_force_alpha(g: &FeedbackGraph) -> usize {
    let nodes: Vec<usize> = g.nodes().collect();
    let mut best = 0;
    for mask in 0u32..(1u32 << nodes.len()) {
        let chosen: Vec<usize> = (0..nodes.len()).filter(|i| mask & (1 << i) != 0).map(|i| nodes[i]).collect();
        let independent =
            chosen.iter().all(|&a| chosen.iter().all(|&b| a == b || (!g.has_edge(a, b) && !g.has_edge(b, a))));
        if independent {
            best = best.max(chosen.len());
        }
    }
    best
}

/// All length-`n` sequences over `0..k`.
pub fn sequences(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|s| {
                (0..k).map(move |o| {
                    let mut t = s.clone();
                    t.push(o);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Draws an instance with `|B| ≤ 10`, `|O| ≤ 5` for estimator checks.
pub fn instance_for<R: Rng>(rng: &mut R, binary: bool) -> Instance {
    if binary {
        Instance::random_binary(rng)
    } else {
        Instance::random_small(rng)
    }
}

fn expected_per_outcome(inst: &Instance, mut est: impl FnMut(usize) -> Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = inst.bids();
    let events: Vec<(f64, Vec<f64>)> = (0..inst.outcomes())
        .map(|o| (inst.marginal(o), o))
        .filter(|(p, _)| *p > 0.0)
        .map(|(p, o)| (p, est(o)))
        .collect();
    moments(events, n)
}

fn translated_utilities(inst: &Instance) -> Vec<f64> {
    (0..inst.bids()).map(|b| inst.utility(b) - 1.0).collect()
}

/// `E[ũ] − (u − 1)` for win-only feedback on a binary instance, with the
/// exact second moment.
pub fn win_only_expectation(inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let (dist, alloc) = (inst.dist(), inst.alloc());
    let win = inst.column(WIN);
    expected_per_outcome(inst, |o| {
        let reward = (o == WIN).then_some(win.as_slice());
        win_only_estimate(&dist, &alloc, o == WIN, reward).unwrap().into_inner()
    })
}

pub fn outcome_expectation(inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let (dist, alloc) = (inst.dist(), inst.alloc());
    expected_per_outcome(inst, |o| outcome_estimate(&dist, &alloc, o, &inst.column(o)).unwrap().into_inner())
}

pub fn exp3_expectation(inst: &Instance) -> (Vec<f64>, Vec<f64>) {
    let dist = inst.dist();
    let events: Vec<(f64, Vec<f64>)> = inst
        .events()
        .into_iter()
        .map(|(b, o, p)| (p, exp3_estimate(&dist, b, inst.r[b][o]).unwrap().into_inner()))
        .collect();
    moments(events, inst.bids())
}

pub fn win_only_bias(inst: &Instance) -> f64 {
    max_abs_diff(&win_only_expectation(inst).0, &translated_utilities(inst))
}

pub fn outcome_bias(inst: &Instance) -> f64 {
    max_abs_diff(&outcome_expectation(inst).0, &translated_utilities(inst))
}

pub fn exp3_bias(inst: &Instance) -> f64 {
    max_abs_diff(&exp3_expectation(inst).0, &translated_utilities(inst))
}

/// Per-contest reward tables `r_τ(b, o)` for a batch of `n` contests.
pub fn contest_tables<R: Rng>(rng: &mut R, inst: &Instance, n: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n)
        .map(|_| (0..inst.bids()).map(|_| (0..inst.outcomes()).map(|_| random_reward(rng)).collect()).collect())
        .collect()
}

/// Mean and second moment of the batch estimate over the submitted bid and
/// every tuple of contest outcomes.
pub fn batch_expectation(inst: &Instance, tables: &[Vec<Vec<f64>>]) -> (Vec<f64>, Vec<f64>) {
    let (dist, alloc) = (inst.dist(), inst.alloc());
    let n = tables.len();
    let mut events = Vec::new();
    for b in 0..inst.bids() {
        for seq in sequences(inst.outcomes(), n) {
            let p = seq.iter().fold(inst.pi[b], |acc, &o| acc * inst.x[b][o]);
            if p == 0.0 {
                continue;
            }
            let rows: Vec<Vec<f64>> =
                seq.iter().zip(tables).map(|(&o, table)| table.iter().map(|row| row[o]).collect()).collect();
            let fb = BatchFeedback::from_contests(inst.outcomes(), &seq, &rows).unwrap();
            events.push((p, batch_estimate(&dist, &alloc, &fb).unwrap().into_inner()));
        }
    }
    moments(events, inst.bids())
}

/// Average translated utility over the contests.
pub fn batch_target(inst: &Instance, tables: &[Vec<Vec<f64>>]) -> Vec<f64> {
    (0..inst.bids())
        .map(|b| {
            let total: f64 = tables.iter().map(|t| inst.x[b].iter().zip(&t[b]).map(|(x, r)| x * r).sum::<f64>()).sum();
            total / tables.len() as f64 - 1.0
        })
        .collect()
}

pub fn batch_bias(inst: &Instance, tables: &[Vec<Vec<f64>>]) -> f64 {
    max_abs_diff(&batch_expectation(inst, tables).0, &batch_target(inst, tables))
}

/// Expectation of the mean-variant batch estimate scaled by `n / max`.
/// With `known`, `Q(b, o) = r(b, o)` for every outcome; otherwise `Q` is
/// zero for outcomes other than the realized one.
pub fn scaled_batch_expectation(inst: &Instance, n: usize, max: usize, known: bool) -> Vec<f64> {
    let (dist, alloc) = (inst.dist(), inst.alloc());
    let mut events = Vec::new();
    for (b, o, p) in inst.events() {
        let mut freq = vec![0.0; inst.outcomes()];
        if n > 0 {
            freq[o] = 1.0;
        }
        let q: Vec<f64> = if known {
            inst.r.concat()
        } else {
            inst.r.iter().flat_map(|row| (0..row.len()).map(move |j| if j == o { row[j] } else { 0.0 })).collect()
        };
        let fb = if known {
            BatchFeedback::with_known_rewards(n, freq, q).unwrap()
        } else {
            BatchFeedback::new(n, freq, q).unwrap()
        };
        events.push((p, scaled_batch_estimate(&dist, &alloc, &fb, b, max).unwrap().into_inner()));
    }
    moments(events, inst.bids()).0
}

pub fn scaled_batch_bias(inst: &Instance, n: usize, max: usize) -> f64 {
    let scale = n as f64 / max as f64;
    let target: Vec<f64> = translated_utilities(inst).iter().map(|v| scale * v).collect();
    max_abs_diff(&scaled_batch_expectation(inst, n, max, true), &target)
}

/// Bias of the second-price closed form on a random grid, highest other
/// bid and value.
pub fn second_price_bias<R: Rng>(rng: &mut R) -> f64 {
    let eps = [0.125, 0.2, 0.25, 0.5][rng.random_range(0..4)];
    let grid = BidGrid::uniform(eps).unwrap();
    let pi = random_simplex(rng, grid.len(), 0.0);
    let dist = BidDistribution::from_weights(&pi).unwrap();
    let other = if rng.random_bool(0.3) { grid.get(rng.random_range(0..grid.len())) } else { rng.random::<f64>() };
    let value = rng.random::<f64>();
    let utility = |b: usize| if grid.get(b) > other { (value - other).clamp(-1.0, 1.0) } else { 0.0 };
    let events = (0..grid.len()).map(|b| {
        let won = grid.get(b) > other;
        (pi[b], second_price_estimate(&grid, &dist, other, Some(value), won).unwrap().into_inner())
    });
    let (mean, _) = moments(events, grid.len());
    let target: Vec<f64> = (0..grid.len()).map(|b| utility(b) - 1.0).collect();
    max_abs_diff(&mean, &target)
}

/// `Σ_o x(b, o) / Pr[o]` over outcomes with positive marginal.
pub fn coverage_sum(inst: &Instance, b: usize) -> f64 {
    (0..inst.outcomes()).map(|o| ratio(inst.x[b][o], inst.marginal(o))).sum()
}

/// Largest `E[ũ(b)²] − bound(b)` for win-only feedback.
pub fn win_only_moment_excess(inst: &Instance) -> f64 {
    let (_, second) = win_only_expectation(inst);
    let (pw, pl) = (inst.marginal(WIN), inst.marginal(LOSE));
    (0..inst.bids())
        .map(|b| second[b] - (4.0 * ratio(inst.x[b][WIN], pw) + ratio(inst.x[b][LOSE], pl)))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn outcome_moment_excess(inst: &Instance) -> f64 {
    let (_, second) = outcome_expectation(inst);
    (0..inst.bids()).map(|b| second[b] - 4.0 * coverage_sum(inst, b)).fold(f64::NEG_INFINITY, f64::max)
}

pub fn batch_moment_excess(inst: &Instance, tables: &[Vec<Vec<f64>>]) -> f64 {
    let (_, second) = batch_expectation(inst, tables);
    (0..inst.bids()).map(|b| second[b] - 4.0 * coverage_sum(inst, b)).fold(f64::NEG_INFINITY, f64::max)
}

/// Outcomes whose marginal is at least `threshold`, with their in-cover
/// `Σ_{o' ∈ N^in_ε(o)} Pr[o']` inside that subgraph.
fn graph_cover(inst: &Instance, g: &FeedbackGraph, threshold: f64) -> Vec<Option<f64>> {
    let kept: Vec<bool> = (0..inst.outcomes()).map(|o| inst.marginal(o) >= threshold).collect();
    (0..inst.outcomes())
        .map(|o| {
            kept[o]
                .then(|| (0..inst.outcomes()).filter(|&s| kept[s] && g.has_edge(s, o)).map(|s| inst.marginal(s)).sum())
        })
        .collect()
}

/// Mean and second moment of the graph estimate.
pub fn graph_expectation(inst: &Instance, g: &FeedbackGraph, threshold: f64) -> (Vec<f64>, Vec<f64>) {
    let (dist, alloc) = (inst.dist(), inst.alloc());
    let rewards: Vec<Option<Vec<f64>>> = (0..inst.outcomes()).map(|o| Some(inst.column(o))).collect();
    expected_per_outcome(inst, |o| graph_estimate(&dist, &alloc, o, &rewards, g, threshold).unwrap().into_inner())
}

/// Per-bid and `π`-weighted absolute bias of the graph estimator.
pub fn graph_bias(inst: &Instance, g: &FeedbackGraph, threshold: f64) -> (f64, f64) {
    let (mean, _) = graph_expectation(inst, g, threshold);
    let target = translated_utilities(inst);
    let per_bid = max_abs_diff(&mean, &target);
    let weighted = inst.pi.iter().enumerate().map(|(b, p)| p * (mean[b] - target[b])).sum::<f64>().abs();
    (per_bid, weighted)
}

pub fn graph_moment_excess(inst: &Instance, g: &FeedbackGraph, threshold: f64) -> f64 {
    let (_, second) = graph_expectation(inst, g, threshold);
    let cover = graph_cover(inst, g, threshold);
    (0..inst.bids())
        .map(|b| {
            let bound: f64 = cover.iter().enumerate().filter_map(|(o, c)| c.map(|c| ratio(inst.x[b][o], c))).sum();
            second[b] - 4.0 * bound
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A second-price trace of `(B_t, v_t)` whose highest other bids sit on a
/// shifted lattice of random step, so that the realized gaps are controlled.
pub fn second_price_trace<R: Rng>(rng: &mut R, rounds: usize) -> Vec<(f64, f64)> {
    let step: f64 = rng.random_range(0.02..0.25);
    let shift = rng.random_range(0.0..step);
    let levels = ((1.0 - shift) / step).floor() as usize + 1;
    (0..rounds)
        .map(|_| {
            let b = shift + step * rng.random_range(0..levels) as f64;
            (b.min(1.0), rng.random::<f64>())
        })
        .collect()
}

/// Shortest piece of `[0, 1]` cut at the realized highest other bids,
/// counting the end pieces `[0, B_(1)]` and `(B_(n), 1]`.
pub fn piece_gap(trace: &[(f64, f64)]) -> f64 {
    let mut cuts: Vec<f64> = trace.iter().map(|t| t.0).chain([0.0, 1.0]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Best continuous-bid hindsight utility by direct evaluation just above
/// every breakpoint and at the ends of `[0, 1]`.
pub fn continuous_optimum_oracle(trace: &[(f64, f64)]) -> f64 {
    let utility = |bid: f64| -> f64 { trace.iter().map(|&(b, v)| if bid > b { v - b } else { 0.0 }).sum() };
    trace
        .iter()
        .map(|t| t.0 + 1e-12)
        .filter(|&b| b <= 1.0)
        .chain([0.0, 1.0])
        .map(utility)
        .fold(f64::NEG_INFINITY, f64::max)
}
