//! Discrete bid grids and the learner's mixed strategy over them.

use alloc::vec::Vec;
use rand::Rng;

use crate::error::{bail, Result};
use crate::outcome::UtilityEstimate;

/// Log-weights are never allowed to fall further than this below the largest
/// one, which keeps every mass strictly positive after exponentiation.
const LOG_WEIGHT_FLOOR: f64 = -700.0;

/// An ordered, uniformly spaced set of bids in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidGrid {
    points: Vec<f64>,
    resolution: f64,
}

impl BidGrid {
    /// Builds a grid from explicit points; they must be strictly increasing,
    /// inside `[0, 1]` and evenly spaced.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            bail!(InvalidArgument, "a bid grid needs at least 2 points, got {}", points.len());
        }
        let resolution = points[1] - points[0];
        for (i, &p) in points.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                bail!(InvalidArgument, "grid point {p} outside [0, 1]");
            }
            if i > 0 {
                let gap = p - points[i - 1];
                if gap <= 0.0 {
                    bail!(InvalidArgument, "grid points must be strictly increasing");
                }
                if (gap - resolution).abs() > 1e-12 {
                    bail!(InvalidArgument, "grid spacing {gap} differs from resolution {resolution}");
                }
            }
        }
        Ok(Self { points, resolution })
    }

    /// The uniform grid `{0, ε, 2ε, ...} ∩ [0, 1]`.
    ///
    /// When `ε` divides 1 (within 1e-12 relative), points are computed as
    /// `i / n` so that bids such as `0.35` coincide bit-for-bit with the same
    /// value produced by other `k / m` constructions, and 1 is included.
    pub fn uniform(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            bail!(InvalidArgument, "grid resolution must lie in (0, 1], got {epsilon}");
        }
        let inverse = 1.0 / epsilon;
        let rounded = libm::round(inverse);
        let points: Vec<f64> = if (inverse - rounded).abs() <= 1e-12 * rounded.max(1.0) {
            let n = rounded as usize;
            (0..=n).map(|i| i as f64 / n as f64).collect()
        } else {
            let n = libm::floor(inverse + 1e-12) as usize;
            (0..=n).map(|i| i as f64 * epsilon).collect()
        };
        if points.len() < 2 {
            bail!(InvalidArgument, "resolution {epsilon} yields fewer than 2 grid points");
        }
        Ok(Self { resolution: points[1] - points[0], points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn get(&self, index: usize) -> f64 {
        self.points[index]
    }
}

/// The learner's distribution `π_t` over grid indices.
///
/// Weights are kept in log space, shifted so the largest log-weight is zero,
/// and floored at `-700` relative to it; probabilities are recomputed after
/// every update.
#[derive(Debug, Clone, PartialEq)]
pub struct BidDistribution {
    log_weights: Vec<f64>,
    mass: Vec<f64>,
}

impl BidDistribution {
    /// The uniform distribution over `n` bids.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            bail!(InvalidArgument, "cannot build a distribution over an empty grid");
        }
        Ok(Self { log_weights: alloc::vec![0.0; n], mass: alloc::vec![1.0 / n as f64; n] })
    }

    /// Builds a distribution from strictly positive (unnormalized) weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            bail!(InvalidArgument, "cannot build a distribution over an empty grid");
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            bail!(InvalidArgument, "weights must be finite and strictly positive");
        }
        let mut dist = Self {
            log_weights: weights.iter().map(|&w| libm::log(w)).collect(),
            mass: alloc::vec![0.0; weights.len()],
        };
        dist.normalize();
        Ok(dist)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.mass[index]
    }

    /// Draws a grid index by inverse-CDF sampling with one uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.mass.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.mass.len() - 1
    }

    /// `π(b) ← π(b)·exp(η·ũ(b))`, renormalized.
    ///
    /// Estimates must be non-positive; a positive or non-finite entry is an
    /// invariant violation.
    pub fn exp_weights_update(&mut self, estimate: &UtilityEstimate, eta: f64) -> Result<()> {
        if estimate.len() != self.len() {
            bail!(InvalidArgument, "estimate has {} entries, distribution has {}", estimate.len(), self.len());
        }
        if !(eta > 0.0) || !eta.is_finite() {
            bail!(InvalidArgument, "step size must be positive and finite, got {eta}");
        }
        if let Some(u) = estimate.values().iter().find(|&&u| !(u <= 0.0)) {
            bail!(InvariantViolation, "utility estimates must be non-positive, got {u}");
        }
        for (lw, &u) in self.log_weights.iter_mut().zip(estimate.values()) {
            *lw += eta * u;
        }
        self.normalize();
        Ok(())
    }

    fn normalize(&mut self) {
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for lw in &mut self.log_weights {
            *lw = (*lw - max).max(LOG_WEIGHT_FLOOR);
        }
        let mut total = 0.0;
        for (m, &lw) in self.mass.iter_mut().zip(&self.log_weights) {
            *m = libm::exp(lw);
            total += *m;
        }
        for m in &mut self.mass {
            *m /= total;
        }
    }
}
