//! Scalar distributions on `[0, 1]` used for CTRs, quality scores, values and
//! stochastic opponent bids.
//!
//! Grammar: `uniform(lo,hi)`, `normal(mean,sd)` (resampled until the draw
//! lands in `[0, 1]`), `constant(x)`, and `uniform-grid(step)` for a uniform
//! draw over the multiples of `step` in `[0, 1]`.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{bail, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistSpec {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Constant(f64),
    UniformGrid { step: f64 },
}

impl DistSpec {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            bail!(InvalidArgument, "uniform({lo},{hi}) must satisfy 0 ≤ lo ≤ hi ≤ 1");
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() || !(sd >= 0.0) || !sd.is_finite() {
            bail!(InvalidArgument, "normal({mean},{sd}) needs finite mean and sd ≥ 0");
        }
        if sd == 0.0 && !(0.0..=1.0).contains(&mean) {
            bail!(InvalidArgument, "normal({mean},0) never lands in [0, 1]");
        }
        // Rejection sampling must terminate in reasonable time.
        if sd > 0.0 && (mean + 8.0 * sd < 0.0 || mean - 8.0 * sd > 1.0) {
            bail!(InvalidArgument, "normal({mean},{sd}) puts almost no mass on [0, 1]");
        }
        Ok(Self::Normal { mean, sd })
    }

    pub fn constant(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            bail!(InvalidArgument, "constant({x}) outside [0, 1]");
        }
        Ok(Self::Constant(x))
    }

    pub fn uniform_grid(step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            bail!(InvalidArgument, "uniform-grid({step}) needs a step in (0, 1]");
        }
        Ok(Self::UniformGrid { step })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::Normal { mean, sd } => {
                if sd == 0.0 {
                    return mean;
                }
                let normal = Normal::new(mean, sd).expect("validated parameters");
                loop {
                    let x = normal.sample(rng);
                    if (0.0..=1.0).contains(&x) {
                        return x;
                    }
                }
            }
            Self::Constant(x) => x,
            Self::UniformGrid { step } => {
                let n = libm::floor(1.0 / step + 1e-9) as u64;
                let k = rng.random_range(0..=n);
                (k as f64 * step).min(1.0)
            }
        }
    }

    /// Smallest positive gap between two distinct values the distribution
    /// can produce, when it is discrete.
    pub fn atom_gap(&self) -> Option<f64> {
        match *self {
            Self::UniformGrid { step } => Some(step),
            _ => None,
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Self::Normal { mean, sd } => write!(f, "normal({mean},{sd})"),
            Self::Constant(x) => write!(f, "constant({x})"),
            Self::UniformGrid { step } => write!(f, "uniform-grid({step})"),
        }
    }
}

impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some((name, rest)) = s.split_once('(') else {
            bail!(Configuration, "distribution {s:?} must look like name(args)");
        };
        let Some(args) = rest.strip_suffix(')') else {
            bail!(Configuration, "distribution {s:?} is missing a closing parenthesis");
        };
        let mut nums = alloc::vec::Vec::new();
        for a in args.split(',') {
            match a.trim().parse::<f64>() {
                Ok(x) => nums.push(x),
                Err(_) => bail!(Configuration, "distribution {s:?} has a non-numeric argument {a:?}"),
            }
        }
        let arity = |k: usize| -> Result<()> {
            if nums.len() != k {
                bail!(Configuration, "{name} takes {k} argument(s), got {}", nums.len());
            }
            Ok(())
        };
        let spec = match name.trim() {
            "uniform" => {
                arity(2)?;
                Self::uniform(nums[0], nums[1])
            }
            "normal" => {
                arity(2)?;
                Self::normal(nums[0], nums[1])
            }
            "constant" => {
                arity(1)?;
                Self::constant(nums[0])
            }
            "uniform-grid" => {
                arity(1)?;
                Self::uniform_grid(nums[0])
            }
            other => bail!(Configuration, "unknown distribution {:?}", String::from(other)),
        };
        spec.map_err(|e| match e {
            Error::InvalidArgument(m) => Error::Configuration(m),
            e => e,
        })
    }
}
