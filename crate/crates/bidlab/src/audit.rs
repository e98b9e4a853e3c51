//! Regret-bound audits of a finished scenario run.
//!
//! Each learner with a closed-form guarantee gets a row comparing its mean
//! final regret with that bound. Learners that logged the per-round terms of
//! the exponential-weights lemma get a second row, tagged `<learner>/lemma`,
//! that passes when the mean regret is at most the mean logged right-hand
//! side plus three standard errors of the per-replication difference.

use bidlab_core::discretization::{regret_bound, BoundInputs, BoundKind};
use bidlab_core::{BidGrid, EstimatorKind};

use crate::config::{LearnerSpec, ScenarioConfig};
use crate::error::Result;
use crate::harness::{scenario_alpha, ScenarioRun};

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub scenario: String,
    pub learner: String,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// The closed-form regret bound that applies to `learner` in `cfg`, if any.
pub fn closed_form_bound(cfg: &ScenarioConfig, learner: LearnerSpec) -> Result<Option<f64>> {
    let bids = BidGrid::uniform(cfg.epsilon)?.len();
    let mut inputs = BoundInputs::new(cfg.horizon, bids, cfg.outcomes());
    inputs.lipschitz = cfg.lipschitz;
    inputs.piece_width = cfg.delta;
    let kind = match learner {
        LearnerSpec::Doubling => BoundKind::Doubling,
        LearnerSpec::Fixed(EstimatorKind::WinOnly) => BoundKind::WinOnly,
        LearnerSpec::Fixed(EstimatorKind::Outcome | EstimatorKind::Batch) => BoundKind::Outcome,
        LearnerSpec::Fixed(EstimatorKind::Graph) => {
            inputs.alpha = scenario_alpha(cfg)?;
            BoundKind::Graph
        }
        LearnerSpec::Fixed(_) => return Ok(None),
    };
    Ok(Some(regret_bound(kind, &inputs)?))
}

pub fn bound_audit(run: &ScenarioRun) -> Result<Vec<AuditRow>> {
    let cfg = &run.config;
    let mut rows = Vec::new();
    for &spec in &cfg.learners {
        let tag = spec.tag();
        let finals = run.final_regrets(tag);
        if finals.is_empty() {
            continue;
        }
        let (mean, _) = mean_and_se(&finals);
        if let Some(bound) = closed_form_bound(cfg, spec)? {
            rows.push(AuditRow {
                scenario: cfg.name.clone(),
                learner: tag.to_string(),
                empirical: mean,
                bound,
                pass: mean <= bound,
            });
        }
        let logs: Vec<f64> = run
            .traces
            .iter()
            .filter_map(|t| t.learners.iter().find(|l| l.learner == tag))
            .filter_map(|l| l.audit.map(|a| a.bound()))
            .collect();
        if logs.len() == finals.len() {
            let diffs: Vec<f64> = finals.iter().zip(&logs).map(|(r, b)| r - b).collect();
            let (_, se) = mean_and_se(&diffs);
            let (rhs, _) = mean_and_se(&logs);
            let bound = rhs + 3.0 * se;
            rows.push(AuditRow {
                scenario: cfg.name.clone(),
                learner: format!("{tag}/lemma"),
                empirical: mean,
                bound,
                pass: mean <= bound,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_small_sample() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_and_se(&[5.0]), (5.0, 0.0));
    }
}
