//! Choosing the grid for continuous bids, discretization error, and the
//! closed-form regret bounds used by the audits. All logarithms are natural.

use core::fmt;
use core::str::FromStr;

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::grid::BidGrid;

/// Utility regularity assumed when discretizing: average utilities are
/// `L`-Lipschitz on pieces of width at least `Δ°`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationConfig {
    pub lipschitz: f64,
    pub piece_width: f64,
    pub horizon: usize,
}

impl DiscretizationConfig {
    pub fn new(lipschitz: f64, piece_width: f64, horizon: usize) -> Result<Self> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            bail!(InvalidArgument, "Lipschitz constant must be finite and ≥ 0, got {lipschitz}");
        }
        if !(piece_width > 0.0 && piece_width <= 1.0) {
            bail!(InvalidArgument, "piece width must lie in (0, 1], got {piece_width}");
        }
        if horizon == 0 {
            bail!(InvalidArgument, "horizon must be at least 1");
        }
        Ok(Self { lipschitz, piece_width, horizon })
    }
}

/// `ε = min{1/(LT), Δ°}`, or `Δ°` when `L = 0`.
pub fn choose_epsilon(cfg: &DiscretizationConfig) -> f64 {
    if cfg.lipschitz == 0.0 {
        return cfg.piece_width;
    }
    (1.0 / (cfg.lipschitz * cfg.horizon as f64)).min(cfg.piece_width)
}

pub fn make_grid(epsilon: f64) -> Result<BidGrid> {
    BidGrid::uniform(epsilon)
}

/// `DE ≤ εLT`, valid only when the grid is finer than the pieces.
pub fn discretization_error_bound(epsilon: f64, lipschitz: f64, horizon: usize, piece_width: f64) -> Result<f64> {
    if epsilon >= piece_width {
        bail!(PreconditionViolated, "ε = {epsilon} is not below the piece width {piece_width}");
    }
    Ok(epsilon * lipschitz * horizon as f64)
}

/// Lipschitz constant `2nL/r` of a bidder's expected utility in weighted GSP
/// with `n` bidders, `L`-Lipschitz score CDFs and rank-score reserve `r`.
pub fn gsp_lipschitz_constant(bidders: usize, cdf_lipschitz: f64, reserve: f64) -> Result<f64> {
    if !(reserve > 0.0) {
        bail!(InvalidArgument, "the GSP Lipschitz bound needs a positive reserve, got {reserve}");
    }
    Ok(2.0 * bidders as f64 * cdf_lipschitz / reserve)
}

/// Which closed-form regret bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `4√(T ln|B|)`.
    WinOnly,
    /// `2√(2T|O| ln|B|)`, also the batch bound.
    Outcome,
    /// `2√(2T|O| ln max{1/Δ°, LT}) + 1` for a tuned grid.
    Continuous,
    /// `2√(8αT ln|B| ln(16|O|²T/α)) + 1`.
    Graph,
    /// `25√(2T|O| ln max{LT, 1/Δ°}) + 1` for the doubling trick.
    Doubling,
}

impl BoundKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::WinOnly => "win-only",
            Self::Outcome => "outcome",
            Self::Continuous => "continuous",
            Self::Graph => "graph",
            Self::Doubling => "doubling",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "win-only" => Self::WinOnly,
            "outcome" | "batch" => Self::Outcome,
            "continuous" => Self::Continuous,
            "graph" => Self::Graph,
            "doubling" => Self::Doubling,
            _ => bail!(Configuration, "no regret bound for kind {s:?}"),
        })
    }
}

/// Inputs to [`regret_bound`]; each kind reads only what its formula needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub horizon: usize,
    pub bids: usize,
    pub outcomes: usize,
    pub lipschitz: f64,
    pub piece_width: f64,
    pub alpha: usize,
}

impl BoundInputs {
    pub fn new(horizon: usize, bids: usize, outcomes: usize) -> Self {
        Self { horizon, bids, outcomes, lipschitz: 0.0, piece_width: 1.0, alpha: outcomes }
    }
}

pub fn regret_bound(kind: BoundKind, x: &BoundInputs) -> Result<f64> {
    if x.horizon == 0 || x.outcomes < 2 {
        bail!(InvalidArgument, "regret bounds need T ≥ 1 and |O| ≥ 2");
    }
    let t = x.horizon as f64;
    let o = x.outcomes as f64;
    let ln_b = || -> Result<f64> {
        if x.bids < 2 {
            bail!(InvalidArgument, "regret bounds need |B| ≥ 2");
        }
        Ok(libm::log(x.bids as f64))
    };
    let complexity = || -> Result<f64> {
        if !(x.piece_width > 0.0) || !(x.lipschitz >= 0.0) {
            bail!(InvalidArgument, "need Δ° > 0 and L ≥ 0");
        }
        Ok(libm::log((1.0 / x.piece_width).max(x.lipschitz * t)))
    };
    Ok(match kind {
        BoundKind::WinOnly => 4.0 * libm::sqrt(t * ln_b()?),
        BoundKind::Outcome => 2.0 * libm::sqrt(2.0 * t * o * ln_b()?),
        BoundKind::Continuous => 2.0 * libm::sqrt(2.0 * t * o * complexity()?) + 1.0,
        BoundKind::Graph => {
            if x.alpha == 0 {
                bail!(InvalidArgument, "independence number must be ≥ 1");
            }
            let a = x.alpha as f64;
            2.0 * libm::sqrt(8.0 * a * t * ln_b()? * libm::log(16.0 * o * o * t / a)) + 1.0
        }
        BoundKind::Doubling => 25.0 * libm::sqrt(2.0 * t * o * complexity()?) + 1.0,
    })
}

/// Smallest positive difference between distinct values, if there are two.
pub fn min_gap(values: &[f64]) -> Option<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted.windows(2).map(|w| w[1] - w[0]).min_by(f64::total_cmp)
}

/// `Σ_t (v_t − B_t)·1{b > B_t}` for a second-price trace of `(B_t, v_t)`.
pub fn second_price_hindsight(trace: &[(f64, f64)], bid: f64) -> f64 {
    trace.iter().filter(|&&(b, _)| bid > b).map(|&(b, v)| v - b).sum()
}

/// The supremum over continuous bids `b ∈ [0, 1]` of the second-price
/// hindsight utility. The utility is constant on `[0, B_(1)]` and on each
/// interval `(B_(k), B_(k+1)]`, so one interior point per piece suffices.
pub fn second_price_continuous_optimum(trace: &[(f64, f64)]) -> f64 {
    let mut breaks: Vec<f64> = trace.iter().map(|&(b, _)| b).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut best = second_price_hindsight(trace, 0.0);
    for (k, &lo) in breaks.iter().enumerate() {
        let hi = breaks.get(k + 1).copied().unwrap_or(1.0);
        if hi > lo {
            best = best.max(second_price_hindsight(trace, hi));
        }
    }
    best
}

/// Best hindsight utility over the points of `grid`.
pub fn second_price_grid_optimum(trace: &[(f64, f64)], grid: &BidGrid) -> f64 {
    grid.points().iter().map(|&b| second_price_hindsight(trace, b)).fold(f64::NEG_INFINITY, f64::max)
}
