//! Built-in scenarios. Names are stable; `run --scenario preset:NAME`
//! accepts any of them. A family name (`discretization-sweep`) expands to
//! several scenarios.

use bidlab_core::dist::DistSpec;
use bidlab_core::EstimatorKind;

use bidlab_core::auction::SingleItemFormat;

use crate::config::{Adversary, BatchSize, EnvKind, FeedbackMode, GraphSpec, LearnerSpec, ScenarioConfig};
use crate::error::{Error, Result};

/// The sweep's grid resolutions, coarse to fine.
pub const SWEEP_EPSILONS: [f64; 3] = [0.1, 0.02, 0.01];

const CTR_LOWS: [(&str, f64); 3] = [("ctr01", 0.1), ("ctr03", 0.3), ("ctr05", 0.5)];
const NOISE_LEVELS: [u64; 3] = [100, 1000, 10000];

fn gsp(name: String) -> ScenarioConfig {
    ScenarioConfig { name, ..ScenarioConfig::default() }
}

fn uniform(lo: f64, hi: f64) -> DistSpec {
    DistSpec::Uniform { lo, hi }
}

fn second_price(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        env: EnvKind::SingleItem(SingleItemFormat::SecondPrice),
        bidders: 2,
        opponent_bids: DistSpec::UniformGrid { step: 0.05 },
        horizon: 5000,
        replications: 20,
        learners: vec![
            LearnerSpec::Fixed(EstimatorKind::WinOnly),
            LearnerSpec::Fixed(EstimatorKind::Outcome),
            LearnerSpec::Fixed(EstimatorKind::Exp3),
            LearnerSpec::Doubling,
        ],
        delta: 0.05,
        ..ScenarioConfig::default()
    }
}

/// Every single-scenario preset name, in listing order.
pub fn names() -> Vec<String> {
    let mut out = Vec::new();
    for fig in ["fig2", "fig3", "fig4"] {
        for (tag, _) in CTR_LOWS {
            out.push(format!("{fig}-{tag}"));
        }
    }
    for m in NOISE_LEVELS {
        out.push(format!("noise-m{m}"));
        out.push(format!("noise-m{m}-adaptive-exp3"));
        out.push(format!("noise-m{m}-adaptive-winexp"));
    }
    out.push("bandit-regression-uniform".into());
    out.push("bandit-regression-normal".into());
    for eps in SWEEP_EPSILONS {
        out.push(format!("discretization-sweep-eps{eps}"));
    }
    for name in ["second-price", "doubling", "graph", "gsp-batch"] {
        out.push(name.into());
    }
    out
}

/// Families that expand to several scenarios.
pub fn families() -> Vec<(&'static str, Vec<String>)> {
    vec![("discretization-sweep", SWEEP_EPSILONS.iter().map(|e| format!("discretization-sweep-eps{e}")).collect())]
}

/// One-line description for `scenarios-list`.
pub fn describe(cfg: &ScenarioConfig) -> String {
    let learners: Vec<&str> = cfg.learners.iter().map(|l| l.tag()).collect();
    format!(
        "env={} adversary={} ctr={} feedback={} epsilon={} T={} R={} learners={}",
        cfg.env.tag(),
        cfg.adversary.tag(),
        cfg.ctr,
        cfg.feedback,
        cfg.epsilon,
        cfg.horizon,
        cfg.replications,
        learners.join(",")
    )
}

/// Looks up a preset or a family.
pub fn expand(name: &str) -> Result<Vec<ScenarioConfig>> {
    if let Some((_, members)) = families().into_iter().find(|(f, _)| *f == name) {
        return members.iter().map(|m| preset(m)).collect();
    }
    Ok(vec![preset(name)?])
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let unknown = || Error::config(format!("unknown preset {name:?}; see scenarios-list"));
    let cfg = match name {
        "second-price" => second_price(name),
        "doubling" => ScenarioConfig {
            learners: vec![LearnerSpec::Doubling, LearnerSpec::Fixed(EstimatorKind::Outcome)],
            ..second_price(name)
        },
        "graph" => ScenarioConfig {
            name: name.into(),
            env: EnvKind::UnitDemand,
            bidders: 3,
            items: 4,
            graph: GraphSpec::Cycle,
            replications: 20,
            learners: vec![
                LearnerSpec::Fixed(EstimatorKind::Graph),
                LearnerSpec::Fixed(EstimatorKind::Outcome),
                LearnerSpec::Fixed(EstimatorKind::Exp3),
            ],
            ..ScenarioConfig::default()
        },
        "gsp-batch" => ScenarioConfig {
            name: name.into(),
            env: EnvKind::GspBatch,
            batch_size: BatchSize { min: 5, max: 20 },
            horizon: 1000,
            replications: 10,
            learners: vec![
                LearnerSpec::Fixed(EstimatorKind::Batch),
                LearnerSpec::Fixed(EstimatorKind::BatchMean),
                LearnerSpec::Fixed(EstimatorKind::BatchScaled),
                LearnerSpec::Fixed(EstimatorKind::Exp3),
            ],
            ..ScenarioConfig::default()
        },
        "bandit-regression-uniform" => {
            ScenarioConfig { feedback: FeedbackMode::BanditRegression(0.99), ..gsp(name.into()) }
        }
        "bandit-regression-normal" => ScenarioConfig {
            feedback: FeedbackMode::BanditRegression(0.99),
            ctr: DistSpec::Normal { mean: 0.5, sd: 0.16 },
            scores: DistSpec::Normal { mean: 0.5, sd: 0.16 },
            ..gsp(name.into())
        },
        _ => {
            if let Some(eps) = name.strip_prefix("discretization-sweep-eps") {
                let eps: f64 = eps.parse().map_err(|_| unknown())?;
                if !SWEEP_EPSILONS.contains(&eps) {
                    return Err(unknown());
                }
                ScenarioConfig { epsilon: eps, ..gsp(name.into()) }
            } else if let Some(rest) = name.strip_prefix("noise-m") {
                let (m, adversary) = match rest.split_once('-') {
                    None => (rest, Adversary::Stochastic),
                    Some((m, mode)) => (m, mode.parse().map_err(|_| unknown())?),
                };
                let m: u64 = m.parse().map_err(|_| unknown())?;
                if !NOISE_LEVELS.contains(&m) || adversary == Adversary::Stochastic && rest.contains('-') {
                    return Err(unknown());
                }
                ScenarioConfig { feedback: FeedbackMode::Noisy(m), adversary, ..gsp(name.into()) }
            } else {
                let (fig, tag) = name.split_once('-').ok_or_else(unknown)?;
                let adversary = match fig {
                    "fig2" => Adversary::Stochastic,
                    "fig3" => Adversary::AdaptiveExp3,
                    "fig4" => Adversary::AdaptiveWinExp,
                    _ => return Err(unknown()),
                };
                let (_, lo) = CTR_LOWS.iter().find(|(t, _)| *t == tag).ok_or_else(unknown)?;
                ScenarioConfig { ctr: uniform(*lo, 1.0), adversary, ..gsp(name.into()) }
            }
        }
    };
    cfg.validate()?;
    Ok(cfg)
}
