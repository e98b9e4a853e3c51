//! Directed feedback graphs over outcomes.
//!
//! An edge `o → o'` means that when `o` is realized the reward conditional on
//! `o'` is revealed too. Nodes are stored as bitmasks, so a graph has at most
//! 64 outcomes; sub-graphs keep the full adjacency and restrict an active
//! node mask.

use alloc::vec::Vec;

use crate::error::{bail, Result};

const MAX_NODES: usize = 64;

/// Exact independence numbers are only computed up to this many nodes.
pub const INDEPENDENCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackGraph {
    out: Vec<u64>,
    active: u64,
}

fn bits(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    core::iter::from_fn(move || {
        if m == 0 {
            return None;
        }
        let i = m.trailing_zeros() as usize;
        m &= m - 1;
        Some(i)
    })
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl FeedbackGraph {
    /// A graph over `n` outcomes with the given directed edges; self-loops
    /// are added automatically.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(crate::Error::SizeLimit { size: n, limit: MAX_NODES });
        }
        let mut out: Vec<u64> = (0..n).map(|o| 1u64 << o).collect();
        for &(a, b) in edges {
            if a >= n || b >= n {
                bail!(InvalidGraph, "edge ({a}, {b}) references a missing outcome");
            }
            out[a] |= 1u64 << b;
        }
        Ok(Self { out, active: full_mask(n) })
    }

    /// Raw adjacency masks, taken as given (self-loops are not added).
    pub fn from_masks(out: Vec<u64>) -> Self {
        let n = out.len().min(MAX_NODES);
        let mask = full_mask(n);
        Self { out: out.into_iter().take(n).map(|m| m & mask).collect(), active: mask }
    }

    pub fn self_loops(n: usize) -> Self {
        Self::from_masks((0..n).map(|o| 1u64 << o).collect())
    }

    pub fn complete(n: usize) -> Self {
        Self::from_masks(alloc::vec![full_mask(n); n])
    }

    /// Undirected cycle `0 – 1 – … – (n−1) – 0`, edges in both directions.
    pub fn cycle(n: usize) -> Self {
        Self::from_masks((0..n).map(|o| (1u64 << o) | (1u64 << ((o + 1) % n)) | (1u64 << ((o + n - 1) % n))).collect())
    }

    /// Total number of outcomes, active or not.
    pub fn len(&self) -> usize {
        self.out.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active == 0
    }

    pub fn node_count(&self) -> usize {
        self.active.count_ones() as usize
    }

    pub fn contains(&self, o: usize) -> bool {
        o < self.out.len() && self.active & (1u64 << o) != 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        bits(self.active)
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.contains(from) && self.contains(to) && self.out[from] & (1u64 << to) != 0
    }

    pub fn check_self_loops(&self) -> Result<()> {
        if let Some(o) = self.nodes().find(|&o| self.out[o] & (1u64 << o) == 0) {
            bail!(InvalidGraph, "outcome {o} has no self-loop");
        }
        Ok(())
    }

    /// Active out-neighbours of an active node, including itself.
    pub fn out_neighbors(&self, o: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = if self.contains(o) { self.out[o] & self.active } else { 0 };
        bits(mask)
    }

    /// Active in-neighbours of an active node, including itself.
    pub fn in_neighbors(&self, o: usize) -> impl Iterator<Item = usize> + '_ {
        let bit = 1u64 << o;
        let here = self.contains(o);
        self.nodes().filter(move |&src| here && self.out[src] & bit != 0)
    }

    /// The sub-graph induced by outcomes with `marginals[o] ≥ threshold`.
    pub fn epsilon_subgraph(&self, marginals: &[f64], threshold: f64) -> Self {
        let mut active = 0u64;
        for o in self.nodes() {
            if marginals.get(o).is_some_and(|&p| p >= threshold) {
                active |= 1u64 << o;
            }
        }
        Self { out: self.out.clone(), active }
    }

    /// Size of a maximum independent set of active nodes, where two nodes
    /// conflict if an edge joins them in either direction.
    pub fn independence_number(&self) -> Result<usize> {
        let n = self.node_count();
        if n > INDEPENDENCE_LIMIT {
            return Err(crate::Error::SizeLimit { size: n, limit: INDEPENDENCE_LIMIT });
        }
        let conflicts: Vec<u64> = (0..self.len())
            .map(|o| {
                let incoming = (0..self.len()).filter(|&s| self.out[s] & (1u64 << o) != 0);
                let mask = incoming.fold(self.out[o], |m, s| m | (1u64 << s));
                mask & !(1u64 << o)
            })
            .collect();
        let mut best = 0;
        max_independent(&conflicts, self.active, 0, &mut best);
        Ok(best)
    }

    /// `Σ_{o ∈ O_ε} Pr[o] / Σ_{o' ∈ N^in_ε(o)} Pr[o']` over the active nodes.
    pub fn coverage_ratio(&self, marginals: &[f64]) -> f64 {
        self.nodes()
            .map(|o| {
                let cover: f64 = self.in_neighbors(o).map(|s| marginals[s]).sum();
                marginals[o] / cover
            })
            .sum()
    }
}

fn max_independent(conflicts: &[u64], candidates: u64, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    let v = candidates.trailing_zeros() as usize;
    let rest = candidates & !(1u64 << v);
    max_independent(conflicts, rest & !conflicts[v], size + 1, best);
    // Excluding v only helps if some neighbour of v can then be taken.
    if rest & conflicts[v] != 0 {
        max_independent(conflicts, rest, size, best);
    }
}

/// The sub-graph threshold `1 / (4|O|T)`.
pub fn graph_threshold(outcomes: usize, horizon: usize) -> Result<f64> {
    if outcomes == 0 || horizon == 0 {
        bail!(InvalidArgument, "graph threshold needs |O| ≥ 1 and T ≥ 1");
    }
    Ok(1.0 / (4.0 * outcomes as f64 * horizon as f64))
}
