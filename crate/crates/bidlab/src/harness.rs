//! Scenario execution.
//!
//! A replication owns one ChaCha8 key derived from the base seed and the
//! replication index, with a separate stream for the environment, the
//! learner's values, the market seat, each adaptive adversary and each
//! tracked learner. Environment draws never depend on what the tracked
//! learners do, so every tracked learner faces the same realized rounds.
//!
//! Adaptive adversaries compete against a "market" learner that occupies the
//! tracked seat; tracked learners are counterfactual occupants of that seat
//! and do not influence the adversaries.

use bidlab_core::auction::{
    BatchSponsoredRound, GspRound, HindsightTracker, RoundFeedback, SingleItemRound, UnitDemandRound, ValueProcess,
};
use bidlab_core::dist::DistSpec;
use bidlab_core::estimators::{exp3_second_moments, graph_estimate, graph_second_moments, outcome_second_moments};
use bidlab_core::feedback::{
    linear_model, logistic_model, noisy_curves, LogisticModel, NoiseSpec, Observation, RegressionHistory,
};
use bidlab_core::graph::FeedbackGraph;
use bidlab_core::learner::{DoublingConfig, DoublingLearner};
use bidlab_core::outcome::WIN;
use bidlab_core::{AllocationCurve, BidDistribution, BidGrid, EstimatorKind, Feedback, LearnerState, RewardFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Adversary, EnvKind, FeedbackMode, LearnerSpec, ScenarioConfig, ValueSpec};
use crate::error::{Error, Result};

const STREAM_ENV: u64 = 0;
const STREAM_VALUES: u64 = 1;
const STREAM_MARKET: u64 = 2;
const STREAM_ADVERSARY: u64 = 1 << 8;
const STREAM_LEARNER: u64 = 1 << 16;

/// The random source for one role in one replication.
pub fn replication_rng(base_seed: u64, replication: usize, stream: u64) -> ChaCha8Rng {
    let key = base_seed ^ (replication as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// Per-round quantities of the exponential-weights regret lemma, summed
/// over the run: `(η/2) Σ_t Σ_b π_t(b) E[ũ_t(b)²]` and `Σ_t κ_t` with `κ_t`
/// the largest per-bid bias of round `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditLog {
    pub eta: f64,
    pub bids: usize,
    pub variance: f64,
    pub bias: f64,
}

impl AuditLog {
    /// `(η/2) ΣΣ π E[ũ²] + ln|B|/η + 2 Σ κ_t`.
    pub fn bound(&self) -> f64 {
        self.variance + (self.bids as f64).ln() / self.eta + 2.0 * self.bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerTrace {
    pub learner: String,
    /// Cumulative ex-post regret after rounds `1..=T`.
    pub cum_regret: Vec<f64>,
    /// Updates discarded because the shown curves gave the realized outcome
    /// zero probability.
    pub skipped: usize,
    pub audit: Option<AuditLog>,
}

impl LearnerTrace {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub scenario: String,
    pub replication: usize,
    pub learners: Vec<LearnerTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerAggregate {
    pub learner: String,
    pub mean: Vec<f64>,
    pub p10: Vec<f64>,
    pub p90: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTrace {
    pub scenario: String,
    pub learners: Vec<LearnerAggregate>,
}

impl AggregateTrace {
    pub fn learner(&self, tag: &str) -> Option<&LearnerAggregate> {
        self.learners.iter().find(|l| l.learner == tag)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub traces: Vec<RegretTrace>,
    pub aggregate: AggregateTrace,
}

impl ScenarioRun {
    /// Final regret of `learner` in every replication.
    pub fn final_regrets(&self, learner: &str) -> Vec<f64> {
        self.traces
            .iter()
            .filter_map(|t| t.learners.iter().find(|l| l.learner == learner))
            .map(LearnerTrace::final_regret)
            .collect()
    }
}

enum Agent {
    Fixed(LearnerState),
    Doubling(DoublingLearner),
}

struct Tracked {
    tag: String,
    agent: Agent,
    rng: ChaCha8Rng,
    realized: f64,
    regret: Vec<f64>,
    skipped: usize,
    audit: Option<AuditLog>,
    history: Option<RegressionHistory>,
    fitted: Option<LogisticModel>,
}

struct Adaptive {
    learner: LearnerState,
    rng: ChaCha8Rng,
}

/// Everything fixed for the whole replication.
struct Setup<'a> {
    cfg: &'a ScenarioConfig,
    grid: BidGrid,
    graph: Option<FeedbackGraph>,
    alpha: Option<usize>,
}

impl<'a> Setup<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = BidGrid::uniform(cfg.epsilon)?;
        let needs_graph = cfg.learners.contains(&LearnerSpec::Fixed(EstimatorKind::Graph));
        let (graph, alpha) = if needs_graph {
            let g = cfg.graph.build(&cfg.outcome_labels())?;
            let a = g.independence_number()?;
            (Some(g), Some(a))
        } else {
            (None, None)
        };
        Ok(Self { cfg, grid, graph, alpha })
    }

    fn learner(&self, kind: EstimatorKind) -> Result<LearnerState> {
        Ok(LearnerState::new(self.grid.clone(), kind, self.cfg.horizon, self.cfg.outcomes(), self.alpha)?)
    }
}

/// Independence number of the scenario's feedback graph.
pub fn scenario_alpha(cfg: &ScenarioConfig) -> Result<usize> {
    Ok(cfg.graph.build(&cfg.outcome_labels())?.independence_number()?)
}

fn value_process(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<ValueProcess> {
    let t = cfg.horizon;
    Ok(match &cfg.values {
        ValueSpec::Iid(d) => ValueProcess::iid(d, t, rng),
        ValueSpec::Drift(a, b) => ValueProcess::drift(*a, *b, t)?,
        ValueSpec::Constant(x) => ValueProcess::from_values(vec![*x; t])?,
        ValueSpec::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let values = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| Error::config(format!("{}: bad value {s:?}", path.display()))))
                .collect::<Result<Vec<_>>>()?;
            if values.len() < t {
                return Err(Error::config(format!("{} holds {} values for {t} rounds", path.display(), values.len())));
            }
            ValueProcess::from_values(values[..t].to_vec())?
        }
    })
}

/// Several values for one round: fresh draws for i.i.d. values, otherwise
/// the round's value repeated.
fn round_values(cfg: &ScenarioConfig, base: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match &cfg.values {
        ValueSpec::Iid(d) => (0..n).map(|_| d.sample(rng)).collect(),
        _ => vec![base; n],
    }
}

fn slot_ctrs(dist: &DistSpec, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut c: Vec<f64> = (0..k).map(|_| dist.sample(rng)).collect();
    c.sort_by(|a, b| b.total_cmp(a));
    for i in 1..k {
        if c[i] >= c[i - 1] {
            c[i] = (c[i - 1] - 1e-9).max(0.0);
        }
    }
    c
}

/// `max_b |E[ũ(b)] − (u(b) − 1)|` of the graph estimator, by enumerating the
/// realized outcome.
fn graph_bias(
    dist: &BidDistribution,
    alloc: &AllocationCurve,
    rewards: &RewardFunction,
    graph: &FeedbackGraph,
    threshold: f64,
) -> Result<f64> {
    let n = alloc.outcomes();
    let rows: Vec<Option<Vec<f64>>> = (0..n).map(|o| Some(rewards.column(o))).collect();
    let marginals = alloc.marginals(dist);
    let mut mean = vec![0.0; dist.len()];
    for (o, &m) in marginals.iter().enumerate() {
        if m > 0.0 {
            let est = graph_estimate(dist, alloc, o, &rows, graph, threshold)?;
            for (acc, e) in mean.iter_mut().zip(est.values()) {
                *acc += m * e;
            }
        }
    }
    let u = rewards.expected_utility(alloc);
    Ok(mean.iter().zip(&u).map(|(e, u)| (e - (u - 1.0)).abs()).fold(0.0, f64::max))
}

/// Adds this round's lemma terms for a learner about to update on exact
/// feedback `fb`.
fn log_moments(
    log: &mut AuditLog,
    learner: &LearnerState,
    fb: &RoundFeedback,
    graph: Option<&FeedbackGraph>,
) -> Result<()> {
    let dist = learner.dist();
    let moments = match (learner.kind(), graph) {
        (EstimatorKind::WinOnly | EstimatorKind::Outcome, _) => outcome_second_moments(dist, &fb.alloc, &fb.rewards),
        (EstimatorKind::Exp3, _) => exp3_second_moments(dist, &fb.alloc, &fb.rewards),
        (EstimatorKind::Graph, Some(g)) => {
            let th = learner.graph_threshold();
            log.bias += graph_bias(dist, &fb.alloc, &fb.rewards, g, th)?;
            graph_second_moments(dist, &fb.alloc, &fb.rewards, g, th)
        }
        _ => return Ok(()),
    };
    let weighted: f64 = dist.mass().iter().zip(&moments).map(|(p, m)| p * m).sum();
    log.variance += 0.5 * learner.eta() * weighted;
    Ok(())
}

/// Updates `learner` from a round's feedback. Returns `false` when the
/// update had to be skipped.
fn update(
    learner: &mut LearnerState,
    fb: &RoundFeedback,
    submitted: usize,
    graph: Option<&FeedbackGraph>,
) -> Result<bool> {
    let row = fb.revealed_row();
    let result = match learner.kind() {
        EstimatorKind::WinOnly => {
            let won = fb.realized == WIN;
            learner.step(&Feedback::WinOnly { alloc: &fb.alloc, won, reward: won.then_some(&row[..]) })
        }
        EstimatorKind::Outcome => {
            learner.step(&Feedback::Outcome { alloc: &fb.alloc, realized: fb.realized, reward_row: &row })
        }
        EstimatorKind::Graph => {
            let graph = graph.ok_or_else(|| Error::config("graph learner without a feedback graph"))?;
            let rewards: Vec<Option<Vec<f64>>> = (0..fb.alloc.outcomes())
                .map(|o| graph.has_edge(fb.realized, o).then(|| fb.rewards.column(o)))
                .collect();
            learner.step(&Feedback::Graph { alloc: &fb.alloc, realized: fb.realized, rewards: &rewards, graph })
        }
        EstimatorKind::Exp3 => learner.step(&Feedback::Exp3 { submitted, utility: fb.realized_utility }),
        other => return Err(Error::config(format!("{other} learner needs batch feedback"))),
    };
    match result {
        Ok(_) => Ok(true),
        Err(bidlab_core::Error::InconsistentFeedback(_)) => {
            learner.skip();
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

/// The curves a tracked learner sees in regression mode: fits over its own
/// bid history, falling back to the exact curves while a fit is degenerate.
fn regressed_feedback(
    history: &mut RegressionHistory,
    fitted: &mut Option<LogisticModel>,
    grid: &BidGrid,
    fb: &RoundFeedback,
    bid: usize,
    t: usize,
) -> Result<RoundFeedback> {
    let clicked = fb.realized == WIN;
    history.push(Observation {
        round: t,
        bid: grid.get(bid),
        ctr: fb.alloc.win_prob(bid),
        payment: clicked.then(|| fb.payment.payment(bid, WIN)),
    })?;
    let alloc = match logistic_model(history, *fitted) {
        Ok(m) => {
            *fitted = Some(m);
            m.curve(grid)
        }
        Err(bidlab_core::Error::FitDegenerate(_)) => fb.alloc.clone(),
        Err(e) => return Err(e.into()),
    };
    let payment = match linear_model(history) {
        Ok(m) => m.curve(grid),
        Err(bidlab_core::Error::FitDegenerate(_)) => fb.payment.clone(),
        Err(e) => return Err(e.into()),
    };
    let rewards = RewardFunction::from_values(&[fb.value_revealed.unwrap_or(0.0), 0.0], &payment)?;
    Ok(RoundFeedback { alloc, payment, rewards, ..fb.clone() })
}

/// One realized round, able to evaluate any bid on the reference grid.
enum Realized {
    Single(SingleItemRound),
    Unit(UnitDemandRound),
    Gsp { round: GspRound, value: f64, noisy: Option<AllocationCurve> },
    Batch(BatchSponsoredRound),
}

impl Realized {
    fn utility(&self, grid: &BidGrid, b: usize) -> f64 {
        match self {
            Self::Single(r) => r.utility(grid.get(b)),
            Self::Unit(r) => r.utility(b),
            Self::Gsp { round, value, .. } => round.utility(grid.get(b), *value),
            Self::Batch(r) => r.utility(grid.get(b)),
        }
    }

    fn feedback(&self, grid: &BidGrid, b: usize) -> RoundFeedback {
        match self {
            Self::Single(r) => r.feedback(grid, b),
            Self::Unit(r) => r.feedback(b),
            Self::Gsp { round, value, .. } => round.feedback(grid, b, *value),
            Self::Batch(_) => unreachable!("batch rounds produce batch feedback"),
        }
    }
}

/// Runs one replication and reports every round's hindsight utilities on the
/// reference grid to `observer`.
pub fn run_replication_with(
    cfg: &ScenarioConfig,
    replication: usize,
    observer: &mut dyn FnMut(usize, &[f64]),
) -> Result<RegretTrace> {
    let setup = Setup::new(cfg)?;
    let grid = &setup.grid;
    let horizon = cfg.horizon;
    let seed = cfg.seed;
    let mut env = replication_rng(seed, replication, STREAM_ENV);
    let mut value_rng = replication_rng(seed, replication, STREAM_VALUES);
    let values = value_process(cfg, &mut value_rng)?;
    let exact = cfg.feedback == FeedbackMode::Exact;

    let mut tracked = Vec::with_capacity(cfg.learners.len());
    for (i, spec) in cfg.learners.iter().enumerate() {
        let agent = match spec {
            LearnerSpec::Fixed(kind) => Agent::Fixed(setup.learner(*kind)?),
            LearnerSpec::Doubling => Agent::Doubling(DoublingLearner::new(DoublingConfig::new(
                cfg.lipschitz,
                cfg.outcomes(),
                EstimatorKind::Outcome,
            ))?),
        };
        let audit = match &agent {
            Agent::Fixed(l)
                if exact
                    && matches!(
                        l.kind(),
                        EstimatorKind::WinOnly | EstimatorKind::Outcome | EstimatorKind::Graph | EstimatorKind::Exp3
                    ) =>
            {
                Some(AuditLog { eta: l.eta(), bids: grid.len(), variance: 0.0, bias: 0.0 })
            }
            _ => None,
        };
        let history = match (cfg.feedback, spec) {
            (FeedbackMode::BanditRegression(g), LearnerSpec::Fixed(k)) if *k != EstimatorKind::Exp3 => {
                Some(RegressionHistory::new(g)?)
            }
            _ => None,
        };
        tracked.push(Tracked {
            tag: spec.tag().to_string(),
            agent,
            rng: replication_rng(seed, replication, STREAM_LEARNER + i as u64),
            realized: 0.0,
            regret: Vec::with_capacity(horizon),
            skipped: 0,
            audit,
            history,
            fitted: None,
        });
    }

    let adaptive_kind = match cfg.adversary {
        Adversary::Stochastic => None,
        Adversary::AdaptiveExp3 => Some(EstimatorKind::Exp3),
        Adversary::AdaptiveWinExp => Some(EstimatorKind::WinOnly),
    };
    let mut market = match adaptive_kind {
        Some(_) => Some((setup.learner(cfg.market)?, replication_rng(seed, replication, STREAM_MARKET))),
        None => None,
    };
    let mut adversaries = Vec::new();
    if let Some(kind) = adaptive_kind {
        for j in 0..cfg.adaptive {
            adversaries.push(Adaptive {
                learner: setup.learner(kind)?,
                rng: replication_rng(seed, replication, STREAM_ADVERSARY + j as u64),
            });
        }
    }
    let fixed_ctrs = cfg.fixed_ctrs.then(|| slot_ctrs(&cfg.ctr, cfg.slots, &mut env));
    let noise = match cfg.feedback {
        FeedbackMode::Noisy(m) => Some(NoiseSpec::new(m)?),
        _ => None,
    };

    let mut hindsight = HindsightTracker::new(grid.len());
    let mut utilities = vec![0.0; grid.len()];
    for t in 0..horizon {
        let value = values.get(t);
        let realized = match cfg.env {
            EnvKind::SingleItem(format) => {
                let others: Vec<f64> = (1..cfg.bidders).map(|_| cfg.opponent_bids.sample(&mut env)).collect();
                Realized::Single(SingleItemRound::new(format, &others, value)?)
            }
            EnvKind::UnitDemand => {
                let highest: Vec<f64> = (0..cfg.items)
                    .map(|_| (1..cfg.bidders).map(|_| cfg.opponent_bids.sample(&mut env)).fold(0.0, f64::max))
                    .collect();
                let item_values = round_values(cfg, value, cfg.items, &mut value_rng);
                let draw: f64 = env.random();
                Realized::Unit(UnitDemandRound::second_price_items(grid, &highest, item_values, draw)?)
            }
            EnvKind::Gsp | EnvKind::GspBatch => {
                let scores: Vec<f64> = (0..cfg.bidders).map(|_| cfg.scores.sample(&mut env)).collect();
                let ctrs = match &fixed_ctrs {
                    Some(c) => c.clone(),
                    None => slot_ctrs(&cfg.ctr, cfg.slots, &mut env),
                };
                let n_adaptive = adversaries.len();
                let mut others: Vec<(f64, f64)> = Vec::with_capacity(cfg.bidders - 1);
                let mut adaptive_bids = Vec::with_capacity(n_adaptive);
                for (j, adv) in adversaries.iter_mut().enumerate() {
                    let idx = adv.learner.sample_bid(&mut adv.rng);
                    adaptive_bids.push(idx);
                    others.push((grid.get(idx), scores[1 + j]));
                }
                for i in 1 + n_adaptive..cfg.bidders {
                    others.push((cfg.opponent_bids.sample(&mut env), scores[i]));
                }
                if cfg.env == EnvKind::GspBatch {
                    let n = env.random_range(cfg.batch_size.min..=cfg.batch_size.max);
                    let thresholds: Vec<f64> = (0..n).map(|_| env.random()).collect();
                    let contest_values = round_values(cfg, value, n, &mut value_rng);
                    let round = GspRound::new(scores[0], &others, cfg.reserve, ctrs, 0.0)?;
                    Realized::Batch(BatchSponsoredRound::new(round, thresholds, contest_values)?)
                } else {
                    let threshold: f64 = env.random();
                    let adversary_values: Vec<f64> =
                        (0..n_adaptive).map(|_| cfg.adversary_values.sample(&mut env)).collect();
                    let round = GspRound::new(scores[0], &others, cfg.reserve, ctrs.clone(), threshold)?;
                    let noisy = match &noise {
                        Some(spec) => {
                            let (x, _) =
                                noisy_curves(&round.alloc_curve(grid), &round.payment_curve(grid), spec, &mut env)?;
                            Some(x)
                        }
                        None => None,
                    };
                    if let Some((market_learner, market_rng)) = market.as_mut() {
                        let m = market_learner.sample_bid(market_rng);
                        let fb = round.feedback(grid, m, value);
                        update(market_learner, &fb, m, None)?;
                        for (j, adv) in adversaries.iter_mut().enumerate() {
                            let mut view: Vec<(f64, f64)> = Vec::with_capacity(cfg.bidders - 1);
                            view.push((grid.get(m), scores[0]));
                            view.extend(others.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &o)| o));
                            let own = GspRound::new(scores[1 + j], &view, cfg.reserve, ctrs.clone(), threshold)?;
                            let fb = own.feedback(grid, adaptive_bids[j], adversary_values[j]);
                            update(&mut adv.learner, &fb, adaptive_bids[j], None)?;
                        }
                    }
                    Realized::Gsp { round, value, noisy }
                }
            }
        };

        for (b, u) in utilities.iter_mut().enumerate() {
            *u = realized.utility(grid, b);
        }
        hindsight.add(&utilities);
        observer(t, &utilities);
        let best = hindsight.best();

        for tr in tracked.iter_mut() {
            let utility = play(tr, &realized, &setup, t)?;
            tr.realized += utility;
            tr.regret.push(best - tr.realized);
        }
    }

    Ok(RegretTrace {
        scenario: cfg.name.clone(),
        replication,
        learners: tracked
            .into_iter()
            .map(|tr| LearnerTrace { learner: tr.tag, cum_regret: tr.regret, skipped: tr.skipped, audit: tr.audit })
            .collect(),
    })
}

/// Plays one tracked learner for round `t`; returns its realized utility.
fn play(tr: &mut Tracked, realized: &Realized, setup: &Setup<'_>, t: usize) -> Result<f64> {
    let grid = &setup.grid;
    match &mut tr.agent {
        Agent::Doubling(d) => {
            d.begin_round()?;
            let own = d.learner().grid().clone();
            let bid = d.sample_bid(&mut tr.rng);
            let fb = realized.feedback(&own, bid);
            let row = fb.revealed_row();
            match d.step(&Feedback::Outcome { alloc: &fb.alloc, realized: fb.realized, reward_row: &row }) {
                Ok(_) => {}
                Err(bidlab_core::Error::InconsistentFeedback(_)) => tr.skipped += 1,
                Err(e) => return Err(e.into()),
            }
            if let Realized::Single(r) = realized {
                d.observe_breakpoint(r.highest_other);
            }
            Ok(fb.realized_utility)
        }
        Agent::Fixed(learner) => {
            let bid = learner.sample_bid(&mut tr.rng);
            if let Realized::Batch(batch) = realized {
                let (alloc, fb, utility) = batch.feedback(grid, bid);
                let max_batch = setup.cfg.batch_size.max;
                let feedback = match learner.kind() {
                    EstimatorKind::Batch => Feedback::Batch { alloc: &alloc, batch: &fb },
                    EstimatorKind::BatchMean => Feedback::BatchMean { alloc: &alloc, batch: &fb, submitted: bid },
                    EstimatorKind::BatchScaled => {
                        Feedback::BatchScaled { alloc: &alloc, batch: &fb, submitted: bid, max_batch }
                    }
                    _ => Feedback::Exp3 { submitted: bid, utility },
                };
                match learner.step(&feedback) {
                    Ok(_) => {}
                    Err(bidlab_core::Error::InconsistentFeedback(_)) => {
                        learner.skip();
                        tr.skipped += 1;
                    }
                    Err(e) => return Err(e.into()),
                }
                return Ok(utility);
            }
            let exact = realized.feedback(grid, bid);
            let utility = exact.realized_utility;
            if let Some(log) = tr.audit.as_mut() {
                log_moments(log, learner, &exact, setup.graph.as_ref())?;
            }
            let shown = if let Some(history) = tr.history.as_mut() {
                regressed_feedback(history, &mut tr.fitted, grid, &exact, bid, t)?
            } else if let Realized::Gsp { noisy: Some(x), .. } = realized {
                if learner.kind() == EstimatorKind::Exp3 {
                    exact
                } else {
                    RoundFeedback { alloc: x.clone(), ..exact }
                }
            } else {
                exact
            };
            if !update(learner, &shown, bid, setup.graph.as_ref())? {
                tr.skipped += 1;
            }
            Ok(utility)
        }
    }
}

pub fn run_replication(cfg: &ScenarioConfig, replication: usize) -> Result<RegretTrace> {
    run_replication_with(cfg, replication, &mut |_, _| {})
}

/// Runs all replications in parallel and aggregates them.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let traces = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(cfg, r).map_err(|e| Error::Replication { replication: r, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate(&traces);
    Ok(ScenarioRun { config: cfg.clone(), traces, aggregate })
}

/// Linear interpolation between order statistics at position `q·(n − 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean and 10th/90th percentiles per round and learner. The result does
/// not depend on the order of `traces`.
pub fn aggregate(traces: &[RegretTrace]) -> AggregateTrace {
    let scenario = traces.first().map(|t| t.scenario.clone()).unwrap_or_default();
    let tags: Vec<String> =
        traces.first().map(|t| t.learners.iter().map(|l| l.learner.clone()).collect()).unwrap_or_default();
    let learners = tags
        .into_iter()
        .map(|tag| {
            let series: Vec<&[f64]> = traces
                .iter()
                .filter_map(|t| t.learners.iter().find(|l| l.learner == tag))
                .map(|l| l.cum_regret.as_slice())
                .collect();
            let rounds = series.iter().map(|s| s.len()).min().unwrap_or(0);
            let mut agg = LearnerAggregate {
                learner: tag,
                mean: Vec::with_capacity(rounds),
                p10: Vec::with_capacity(rounds),
                p90: Vec::with_capacity(rounds),
            };
            let mut column = Vec::with_capacity(series.len());
            for t in 0..rounds {
                column.clear();
                column.extend(series.iter().map(|s| s[t]));
                column.sort_by(f64::total_cmp);
                agg.mean.push(column.iter().sum::<f64>() / column.len() as f64);
                agg.p10.push(percentile(&column, 0.1));
                agg.p90.push(percentile(&column, 0.9));
            }
            agg
        })
        .collect();
    AggregateTrace { scenario, learners }
}
