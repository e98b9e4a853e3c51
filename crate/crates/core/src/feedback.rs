//! What happens to the environment's curves before the learner sees them:
//! Gaussian CTR noise, or curves re-estimated by regression from the
//! learner's own bid history.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Result};
use crate::grid::BidGrid;
use crate::outcome::{AllocationCurve, PaymentCurve};

/// Additive `N(0, 1/m)` noise on each slot CTR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSpec {
    samples: u64,
}

impl NoiseSpec {
    pub fn new(samples: u64) -> Result<Self> {
        if samples == 0 {
            bail!(InvalidArgument, "noise needs m ≥ 1 samples");
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn sd(&self) -> f64 {
        1.0 / libm::sqrt(self.samples as f64)
    }
}

/// Perturbs a binary CTR curve slot by slot.
///
/// Every distinct positive CTR level is a slot; each gets one noise draw
/// (in descending level order) and every grid bid on that slot moves with
/// it. Results are clamped to `[0, 1]`. Unslotted bids keep CTR 0 and the
/// payment curve is returned unchanged, since per-click prices come from
/// rank-scores rather than CTRs.
pub fn noisy_curves<R: Rng + ?Sized>(
    alloc: &AllocationCurve,
    payment: &PaymentCurve,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<(AllocationCurve, PaymentCurve)> {
    if alloc.outcomes() != 2 {
        bail!(InvalidArgument, "noisy curves need a binary allocation curve");
    }
    let ctrs = alloc.win_probs();
    let mut levels: Vec<f64> = ctrs.iter().copied().filter(|&c| c > 0.0).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let normal = Normal::new(0.0, spec.sd()).expect("finite sd");
    let noisy_levels: Vec<f64> = levels.iter().map(|&c| (c + normal.sample(rng)).clamp(0.0, 1.0)).collect();
    let noisy: Vec<f64> = ctrs
        .iter()
        .map(|&c| match levels.iter().position(|&l| l == c) {
            Some(i) => noisy_levels[i],
            None => c,
        })
        .collect();
    Ok((AllocationCurve::binary(&noisy)?, payment.clone()))
}

/// One observation of the learner's own bid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub round: usize,
    pub bid: f64,
    pub ctr: f64,
    /// Per-click payment, known only on clicked rounds.
    pub payment: Option<f64>,
}

/// Chronological bid history with recency decay `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionHistory {
    entries: Vec<Observation>,
    gamma: f64,
}

impl RegressionHistory {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            bail!(InvalidArgument, "decay factor must lie in (0, 1], got {gamma}");
        }
        Ok(Self { entries: Vec::new(), gamma })
    }

    pub fn push(&mut self, obs: Observation) -> Result<()> {
        if !(0.0..=1.0).contains(&obs.ctr) || !(0.0..=1.0).contains(&obs.bid) {
            bail!(InvalidArgument, "bid and CTR must lie in [0, 1]");
        }
        if self.entries.last().is_some_and(|e| e.round > obs.round) {
            bail!(InvalidArgument, "history must be chronological");
        }
        self.entries.push(obs);
        Ok(())
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn has_two_bids<'a>(mut bids: impl Iterator<Item = &'a f64>) -> bool {
    match bids.next() {
        Some(&first) => bids.any(|&b| b != first),
        None => false,
    }
}

const CTR_FLOOR: f64 = 1e-6;
const NEWTON_TOL: f64 = 1e-8;
const NEWTON_ITERS: usize = 100;
/// Keeps the Newton system solvable when the data are separable.
const RIDGE: f64 = 1e-9;

/// `CTR(b) = 1 / (1 + exp(−(w0 + w1·b)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticModel {
    pub intercept: f64,
    pub slope: f64,
}

impl LogisticModel {
    pub fn eval(&self, bid: f64) -> f64 {
        1.0 / (1.0 + libm::exp(-(self.intercept + self.slope * bid)))
    }

    /// The fitted curve on `grid`, clamped to `[1e-6, 1 − 1e-6]`.
    pub fn curve(&self, grid: &BidGrid) -> AllocationCurve {
        let x: Vec<f64> = grid.points().iter().map(|&b| self.eval(b).clamp(CTR_FLOOR, 1.0 - CTR_FLOOR)).collect();
        AllocationCurve::binary(&x).expect("clamped CTRs")
    }
}

/// Weighted maximum-likelihood logistic regression of CTR on bid, with
/// weights `γ^(t_now − t)` where `t_now` is the latest round in the history.
/// Damped Newton from `start` (or zero) until the gradient norm is at most
/// 1e-8 or 100 iterations.
pub fn logistic_model(history: &RegressionHistory, start: Option<LogisticModel>) -> Result<LogisticModel> {
    let entries = history.entries();
    if entries.len() < 2 || !has_two_bids(entries.iter().map(|e| &e.bid)) {
        bail!(FitDegenerate, "logistic fit needs at least two distinct bids");
    }
    let t_now = entries.last().map_or(0, |e| e.round);
    let weights: Vec<f64> = entries.iter().map(|e| libm::pow(history.gamma(), (t_now - e.round) as f64)).collect();
    let total: f64 = weights.iter().sum();
    // Normalized weights keep the tolerance meaningful for any history length.
    let data: Vec<(f64, f64, f64)> = entries.iter().zip(&weights).map(|(e, w)| (e.bid, e.ctr, w / total)).collect();

    let objective = |w: [f64; 2]| -> f64 {
        let ll: f64 = data
            .iter()
            .map(|&(x, y, wt)| {
                let z = w[0] + w[1] * x;
                // log σ(z) = −log(1 + e^{−z}), log(1 − σ(z)) = −log(1 + e^{z}).
                wt * (-y * softplus(-z) - (1.0 - y) * softplus(z))
            })
            .sum();
        ll - 0.5 * RIDGE * (w[0] * w[0] + w[1] * w[1])
    };

    let mut w = start.map_or([0.0, 0.0], |m| [m.intercept, m.slope]);
    for _ in 0..NEWTON_ITERS {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, y, wt) in &data {
            let p = 1.0 / (1.0 + libm::exp(-(w[0] + w[1] * x)));
            let r = wt * (y - p);
            g0 += r;
            g1 += r * x;
            let s = wt * p * (1.0 - p);
            h00 += s;
            h01 += s * x;
            h11 += s * x * x;
        }
        g0 -= RIDGE * w[0];
        g1 -= RIDGE * w[1];
        h00 += RIDGE;
        h11 += RIDGE;
        if libm::sqrt(g0 * g0 + g1 * g1) <= NEWTON_TOL {
            break;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) {
            bail!(FitDegenerate, "singular logistic Hessian");
        }
        let step = [(h11 * g0 - h01 * g1) / det, (h00 * g1 - h01 * g0) / det];
        let base = objective(w);
        let mut scale = 1.0;
        loop {
            let cand = [w[0] + scale * step[0], w[1] + scale * step[1]];
            if objective(cand) >= base || scale < 1e-10 {
                w = cand;
                break;
            }
            scale *= 0.5;
        }
    }
    Ok(LogisticModel { intercept: w[0], slope: w[1] })
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + libm::log1p(libm::exp(-z))
    } else {
        libm::log1p(libm::exp(z))
    }
}

pub fn logistic_fit(history: &RegressionHistory, grid: &BidGrid) -> Result<AllocationCurve> {
    Ok(logistic_model(history, None)?.curve(grid))
}

/// `payment(b) = intercept + slope·b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearModel {
    pub fn curve(&self, grid: &BidGrid) -> PaymentCurve {
        let p: Vec<f64> = grid.points().iter().map(|&b| (self.intercept + self.slope * b).clamp(0.0, 1.0)).collect();
        PaymentCurve::per_unit(&p).expect("clamped payments")
    }
}

/// Unweighted least squares of payment on bid over the rounds whose
/// payment was observed.
pub fn linear_model(history: &RegressionHistory) -> Result<LinearModel> {
    let pts: Vec<(f64, f64)> = history.entries().iter().filter_map(|e| e.payment.map(|p| (e.bid, p))).collect();
    if pts.len() < 2 || !has_two_bids(pts.iter().map(|(b, _)| b)) {
        bail!(FitDegenerate, "payment fit needs two observed payments at distinct bids");
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    Ok(LinearModel { intercept: my - slope * mx, slope })
}

pub fn linear_fit(history: &RegressionHistory, grid: &BidGrid) -> Result<PaymentCurve> {
    Ok(linear_model(history)?.curve(grid))
}
