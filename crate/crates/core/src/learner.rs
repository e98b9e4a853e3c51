//! Exponential-weights learners over a bid grid and the doubling-trick wrapper.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::error::{bail, Error, Result};
use crate::estimators;
use crate::graph::{graph_threshold, FeedbackGraph};
use crate::grid::{BidDistribution, BidGrid};
use crate::outcome::{AllocationCurve, BatchFeedback, UtilityEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    WinOnly,
    Outcome,
    Batch,
    BatchMean,
    BatchScaled,
    Graph,
    Exp3,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] =
        [Self::WinOnly, Self::Outcome, Self::Batch, Self::BatchMean, Self::BatchScaled, Self::Graph, Self::Exp3];

    pub fn tag(self) -> &'static str {
        match self {
            Self::WinOnly => "win-only",
            Self::Outcome => "outcome",
            Self::Batch => "batch",
            Self::BatchMean => "batch-mean",
            Self::BatchScaled => "batch-scaled",
            Self::Graph => "graph",
            Self::Exp3 => "exp3",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match Self::ALL.into_iter().find(|k| k.tag() == s) {
            Some(k) => Ok(k),
            None => bail!(Configuration, "unknown estimator kind {s:?}"),
        }
    }
}

/// The step size each estimator's regret guarantee is tuned for.
///
/// EXP3 uses the classical `√(2 ln|B| / (T|B|))`; `alpha` is only read for
/// the graph estimator.
pub fn step_size(
    kind: EstimatorKind,
    horizon: usize,
    bids: usize,
    outcomes: usize,
    alpha: Option<usize>,
) -> Result<f64> {
    if bids < 2 {
        bail!(InvalidArgument, "step sizes need at least 2 bids, got {bids}");
    }
    if horizon == 0 {
        bail!(InvalidArgument, "horizon must be at least 1");
    }
    if outcomes < 2 {
        bail!(InvalidArgument, "step sizes need at least 2 outcomes, got {outcomes}");
    }
    let t = horizon as f64;
    let ln_b = libm::log(bids as f64);
    let o = outcomes as f64;
    Ok(match kind {
        EstimatorKind::WinOnly => libm::sqrt(2.0 * ln_b / (5.0 * t)),
        EstimatorKind::Outcome | EstimatorKind::Batch | EstimatorKind::BatchMean | EstimatorKind::BatchScaled => {
            libm::sqrt(ln_b / (2.0 * t * o))
        }
        EstimatorKind::Graph => {
            let Some(alpha) = alpha.filter(|&a| a >= 1) else {
                bail!(InvalidArgument, "the graph step size needs an independence number ≥ 1");
            };
            let a = alpha as f64;
            libm::sqrt(ln_b / (8.0 * t * a * libm::log(16.0 * o * o * t / a)))
        }
        EstimatorKind::Exp3 => libm::sqrt(2.0 * ln_b / (t * bids as f64)),
    })
}

/// One round of feedback, shaped for a particular estimator.
#[derive(Debug, Clone, Copy)]
pub enum Feedback<'a> {
    WinOnly { alloc: &'a AllocationCurve, won: bool, reward: Option<&'a [f64]> },
    Outcome { alloc: &'a AllocationCurve, realized: usize, reward_row: &'a [f64] },
    Batch { alloc: &'a AllocationCurve, batch: &'a BatchFeedback },
    BatchMean { alloc: &'a AllocationCurve, batch: &'a BatchFeedback, submitted: usize },
    BatchScaled { alloc: &'a AllocationCurve, batch: &'a BatchFeedback, submitted: usize, max_batch: usize },
    Graph { alloc: &'a AllocationCurve, realized: usize, rewards: &'a [Option<Vec<f64>>], graph: &'a FeedbackGraph },
    Exp3 { submitted: usize, utility: f64 },
}

impl Feedback<'_> {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            Self::WinOnly { .. } => EstimatorKind::WinOnly,
            Self::Outcome { .. } => EstimatorKind::Outcome,
            Self::Batch { .. } => EstimatorKind::Batch,
            Self::BatchMean { .. } => EstimatorKind::BatchMean,
            Self::BatchScaled { .. } => EstimatorKind::BatchScaled,
            Self::Graph { .. } => EstimatorKind::Graph,
            Self::Exp3 { .. } => EstimatorKind::Exp3,
        }
    }
}

/// A WIN-EXP (or EXP3) learner: grid, mixed strategy, step size and round
/// counter for a fixed horizon.
#[derive(Debug, Clone)]
pub struct LearnerState {
    grid: BidGrid,
    dist: BidDistribution,
    eta: f64,
    round: usize,
    horizon: usize,
    kind: EstimatorKind,
    threshold: f64,
}

impl LearnerState {
    /// A learner with the tuned step size for `kind`.
    pub fn new(
        grid: BidGrid,
        kind: EstimatorKind,
        horizon: usize,
        outcomes: usize,
        alpha: Option<usize>,
    ) -> Result<Self> {
        let eta = step_size(kind, horizon, grid.len(), outcomes, alpha)?;
        let mut state = Self::with_eta(grid, kind, horizon, eta)?;
        if kind == EstimatorKind::Graph {
            state.threshold = graph_threshold(outcomes, horizon)?;
        }
        Ok(state)
    }

    pub fn with_eta(grid: BidGrid, kind: EstimatorKind, horizon: usize, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            bail!(InvalidArgument, "step size must be positive and finite, got {eta}");
        }
        if horizon == 0 {
            bail!(InvalidArgument, "horizon must be at least 1");
        }
        let dist = BidDistribution::uniform(grid.len())?;
        Ok(Self { grid, dist, eta, round: 0, horizon, kind, threshold: 0.25 })
    }

    /// Overrides the `ε`-subgraph threshold of a graph learner.
    pub fn set_graph_threshold(&mut self, threshold: f64) -> Result<()> {
        if !(threshold > 0.0 && threshold < 0.5) {
            bail!(InvalidArgument, "graph threshold must lie in (0, 1/2), got {threshold}");
        }
        self.threshold = threshold;
        Ok(())
    }

    pub fn grid(&self) -> &BidGrid {
        &self.grid
    }

    pub fn dist(&self) -> &BidDistribution {
        &self.dist
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn graph_threshold(&self) -> f64 {
        self.threshold
    }

    pub fn sample_bid<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    /// The estimate `ũ_t` the learner would build from `feedback`.
    pub fn estimate(&self, feedback: &Feedback<'_>) -> Result<UtilityEstimate> {
        if feedback.kind() != self.kind {
            bail!(Configuration, "{} learner received {} feedback", self.kind, feedback.kind());
        }
        let d = &self.dist;
        match *feedback {
            Feedback::WinOnly { alloc, won, reward } => estimators::win_only_estimate(d, alloc, won, reward),
            Feedback::Outcome { alloc, realized, reward_row } => {
                estimators::outcome_estimate(d, alloc, realized, reward_row)
            }
            Feedback::Batch { alloc, batch } => estimators::batch_estimate(d, alloc, batch),
            Feedback::BatchMean { alloc, batch, submitted } => {
                estimators::batch_estimate_mean_variant(d, alloc, batch, submitted)
            }
            Feedback::BatchScaled { alloc, batch, submitted, max_batch } => {
                estimators::scaled_batch_estimate(d, alloc, batch, submitted, max_batch)
            }
            Feedback::Graph { alloc, realized, rewards, graph } => {
                estimators::graph_estimate(d, alloc, realized, rewards, graph, self.threshold)
            }
            Feedback::Exp3 { submitted, utility } => estimators::exp3_estimate(d, submitted, utility),
        }
    }

    /// Builds the estimate, applies the exponential-weights update and
    /// advances the round counter. Returns the estimate that was applied.
    pub fn step(&mut self, feedback: &Feedback<'_>) -> Result<UtilityEstimate> {
        if self.round >= self.horizon {
            bail!(
                PreconditionViolated,
                "learner tuned for {} rounds cannot play round {}",
                self.horizon,
                self.round + 1
            );
        }
        let est = self.estimate(feedback)?;
        self.dist.exp_weights_update(&est, self.eta)?;
        self.round += 1;
        Ok(est)
    }

    /// Counts a round without updating the distribution, e.g. when feedback
    /// had to be discarded.
    pub fn skip(&mut self) {
        self.round += 1;
    }
}

/// Constants the doubling trick needs but cannot learn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingConfig {
    /// Lipschitz constant of the average utility between breakpoints.
    pub lipschitz: f64,
    pub outcomes: usize,
    pub kind: EstimatorKind,
    /// Upper bound `T_M` on the horizon.
    pub max_horizon: usize,
    /// Upper bound on `log max{LT, 1/Δ°}`.
    pub log_cap: f64,
}

impl DoublingConfig {
    pub fn new(lipschitz: f64, outcomes: usize, kind: EstimatorKind) -> Self {
        Self { lipschitz, outcomes, kind, max_horizon: 1 << 20, log_cap: 64.0 }
    }
}

/// WIN-EXP without prior knowledge of `T`, `L` or `Δ°`.
///
/// Two stage bounds start at 1: `B_T` on the round count and `B_log` on
/// `log max{tL, 1/Δ°_t}`, where `Δ°_t` is the smallest gap between distinct
/// breakpoints observed so far. Each stage runs a fresh learner on the grid
/// with `ε = e^{−B_log}` and step size `√(B_log / (2 B_T |O|))`; when either
/// bound fails it is doubled and the learner restarts from uniform.
#[derive(Debug, Clone)]
pub struct DoublingLearner {
    cfg: DoublingConfig,
    bound_t: usize,
    bound_log: f64,
    t: usize,
    stage_start: usize,
    inner: LearnerState,
    breakpoints: BTreeSet<u64>,
    min_gap: Option<f64>,
    restarts_t: usize,
    restarts_log: usize,
}

impl DoublingLearner {
    pub fn new(cfg: DoublingConfig) -> Result<Self> {
        if !(cfg.lipschitz >= 0.0) || cfg.outcomes < 2 || cfg.max_horizon == 0 || !(cfg.log_cap >= 1.0) {
            bail!(InvalidArgument, "invalid doubling configuration {cfg:?}");
        }
        let inner = Self::stage_learner(&cfg, 1, 1.0)?;
        Ok(Self {
            cfg,
            bound_t: 1,
            bound_log: 1.0,
            t: 0,
            stage_start: 0,
            inner,
            breakpoints: BTreeSet::new(),
            min_gap: None,
            restarts_t: 0,
            restarts_log: 0,
        })
    }

    fn stage_learner(cfg: &DoublingConfig, bound_t: usize, bound_log: f64) -> Result<LearnerState> {
        let grid = BidGrid::uniform(libm::exp(-bound_log))?;
        let eta = libm::sqrt(bound_log / (2.0 * bound_t as f64 * cfg.outcomes as f64));
        LearnerState::with_eta(grid, cfg.kind, bound_t, eta)
    }

    /// Records a breakpoint of the average utility, e.g. a realized highest
    /// other bid, for the running estimate of `Δ°`.
    pub fn observe_breakpoint(&mut self, x: f64) {
        let key = x.max(0.0).to_bits();
        if !self.breakpoints.insert(key) {
            return;
        }
        let below = self.breakpoints.range(..key).next_back();
        let above = self.breakpoints.range(key + 1..).next();
        for other in below.into_iter().chain(above) {
            let gap = (f64::from_bits(*other) - x).abs();
            self.min_gap = Some(self.min_gap.map_or(gap, |g| g.min(gap)));
        }
    }

    /// The observed `Δ°`, defaulting to 1 before two breakpoints are seen.
    pub fn observed_gap(&self) -> f64 {
        self.min_gap.unwrap_or(1.0)
    }

    /// Starts global round `t + 1`, restarting the inner learner if a stage
    /// bound no longer holds. Returns whether a restart happened.
    pub fn begin_round(&mut self) -> Result<bool> {
        let t = self.t + 1;
        if t > self.cfg.max_horizon {
            bail!(PreconditionViolated, "round {t} exceeds the horizon cap {}", self.cfg.max_horizon);
        }
        let mut restart = false;
        while t > self.bound_t {
            self.bound_t = (self.bound_t * 2).min(self.cfg.max_horizon);
            self.restarts_t += 1;
            restart = true;
        }
        let tl = t as f64 * self.cfg.lipschitz;
        let complexity = libm::log(tl.max(1.0 / self.observed_gap())).min(self.cfg.log_cap);
        while complexity > self.bound_log {
            self.bound_log = (self.bound_log * 2.0).min(self.cfg.log_cap);
            self.restarts_log += 1;
            restart = true;
        }
        if restart {
            self.inner = Self::stage_learner(&self.cfg, self.bound_t, self.bound_log)?;
            self.stage_start = t - 1;
        }
        self.t = t;
        Ok(restart)
    }

    /// The current stage's learner; its grid changes across restarts.
    pub fn learner(&self) -> &LearnerState {
        &self.inner
    }

    pub fn sample_bid<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.inner.sample_bid(rng)
    }

    pub fn step(&mut self, feedback: &Feedback<'_>) -> Result<UtilityEstimate> {
        self.inner.step(feedback)
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn stage_start(&self) -> usize {
        self.stage_start
    }

    pub fn bounds(&self) -> (usize, f64) {
        (self.bound_t, self.bound_log)
    }

    /// Restarts caused by `B_T` and by `B_log` respectively.
    pub fn restarts(&self) -> (usize, usize) {
        (self.restarts_t, self.restarts_log)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tags_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.tag().parse::<EstimatorKind>().unwrap(), k);
        }
        assert!("winexp".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn step_size_examples() {
        let eta = step_size(EstimatorKind::WinOnly, 5000, 101, 2, None).unwrap();
        assert!((eta - 0.019_21).abs() < 1e-5, "{eta}");
        let eta = step_size(EstimatorKind::Outcome, 5000, 101, 2, None).unwrap();
        assert!((eta - 0.015_19).abs() < 1e-5, "{eta}");
        let eta = step_size(EstimatorKind::Graph, 5000, 101, 4, Some(4)).unwrap();
        assert!(eta > 0.0 && eta.is_finite());
        assert!(step_size(EstimatorKind::WinOnly, 10, 1, 2, None).is_err());
        assert!(step_size(EstimatorKind::Graph, 10, 5, 2, None).is_err());
    }

    #[test]
    fn mismatched_feedback_is_rejected() {
        let grid = BidGrid::uniform(0.5).unwrap();
        let mut l = LearnerState::new(grid, EstimatorKind::WinOnly, 10, 2, None).unwrap();
        let err = l.step(&Feedback::Exp3 { submitted: 0, utility: 0.0 });
        assert!(matches!(err, Err(Error::Configuration(_))));
    }

    #[test]
    fn zero_information_round_keeps_distribution() {
        let grid = BidGrid::uniform(0.5).unwrap();
        let mut l = LearnerState::new(grid, EstimatorKind::Exp3, 10, 2, None).unwrap();
        let before = l.dist().clone();
        l.step(&Feedback::Exp3 { submitted: 1, utility: 1.0 }).unwrap();
        assert_eq!(l.dist(), &before);
        assert_eq!(l.round(), 1);
    }

    #[test]
    fn favoured_bid_gains_mass_every_round() {
        let grid = BidGrid::uniform(1.0).unwrap();
        let mut l = LearnerState::new(grid, EstimatorKind::WinOnly, 50, 2, None).unwrap();
        let alloc = AllocationCurve::binary(&[1.0, 1.0]).unwrap();
        let reward = [0.2, 0.9];
        let mut last = l.dist().prob(1);
        for _ in 0..50 {
            l.step(&Feedback::WinOnly { alloc: &alloc, won: true, reward: Some(&reward) }).unwrap();
            assert!(l.dist().prob(1) > last);
            last = l.dist().prob(1);
        }
        assert!(l.step(&Feedback::WinOnly { alloc: &alloc, won: true, reward: Some(&reward) }).is_err());
    }

    #[test]
    fn trajectories_are_reproducible() {
        let run = || {
            let grid = BidGrid::uniform(0.1).unwrap();
            let mut l = LearnerState::new(grid, EstimatorKind::Exp3, 200, 2, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for _ in 0..200 {
                let b = l.sample_bid(&mut rng);
                let u = if b > 4 { 0.3 } else { -0.1 };
                l.step(&Feedback::Exp3 { submitted: b, utility: u }).unwrap();
            }
            l.dist().mass().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn doubling_restart_counts() {
        let mut d = DoublingLearner::new(DoublingConfig::new(0.0, 2, EstimatorKind::Outcome)).unwrap();
        assert!(!d.begin_round().unwrap());
        assert_eq!(d.restarts(), (0, 0));
        for _ in 1..8 {
            d.begin_round().unwrap();
        }
        assert_eq!(d.restarts(), (3, 0));
        assert_eq!(d.bounds().0, 8);
    }

    #[test]
    fn doubling_tracks_the_gap() {
        let mut d = DoublingLearner::new(DoublingConfig::new(0.0, 2, EstimatorKind::Outcome)).unwrap();
        for x in [0.5, 0.2, 0.25, 0.5] {
            d.observe_breakpoint(x);
        }
        assert!((d.observed_gap() - 0.05).abs() < 1e-12);
        d.begin_round().unwrap();
        // log(1/0.05) ≈ 3.0 forces B_log from 1 to 4.
        assert_eq!(d.restarts(), (0, 2));
        assert_eq!(d.bounds().1, 4.0);
        assert!(d.learner().grid().resolution() < 0.05);
    }
}
