//! Degree and cost distributions.
//!
//! Graph degrees (contract offspring counts and per-contract user counts) are
//! described by finite probability mass functions over `0..=k_max`. Vertex
//! losses are described by a [`CostSpec`], either a point mass or a lognormal
//! parameterized by its *linear-scale* mean and standard deviation, which is
//! how cost assumptions are usually quoted.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

/// Tolerance for accepting a pmf whose entries do not sum exactly to one.
/// Deviations below this are treated as float noise and renormalized away;
/// anything larger is a hard construction error.
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// Sums within this slack of 1 are stored untouched instead of renormalized.
/// Dividing by `1 ± few ulp` would only dirty already-exact entries, and a
/// renormalized vector always re-sums inside this slack, so construction is
/// idempotent: a serialized pmf re-parses to identical bits.
const PMF_SUM_SLACK: f64 = 5e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("pmf must have at least one entry")]
    EmptyPmf,
    #[error("pmf entry {index} is {value}, but probabilities must be finite and >= 0")]
    NegativePmfEntry { index: usize, value: f64 },
    #[error("pmf entries sum to {sum}, which deviates from 1 by more than 1e-12")]
    PmfSumNotOne { sum: f64 },
    #[error("invalid cost parameters: {reason}")]
    InvalidCost { reason: String },
}

/// Probability mass function with support `0..probs.len()`.
///
/// Entry `k` is `P(X = k)`. Construction validates non-negativity and unit
/// total mass, then renormalizes exactly so downstream moment formulas can
/// assume `sum == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
    /// Cumulative sums used for inverse-CDF sampling; `cdf[k] = P(X <= k)`.
    #[serde(skip)]
    cdf: Vec<f64>,
    /// `Some(k)` when the whole mass sits on a single value `k`; sampling a
    /// point mass then consumes no randomness.
    #[serde(skip)]
    point: Option<u32>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self, DistError> {
        if probs.is_empty() {
            return Err(DistError::EmptyPmf);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(DistError::NegativePmfEntry { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOLERANCE {
            return Err(DistError::PmfSumNotOne { sum });
        }
        let probs: Vec<f64> = if (sum - 1.0).abs() <= PMF_SUM_SLACK {
            probs
        } else {
            probs.iter().map(|p| p / sum).collect()
        };
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        // Guard the last entry against rounding so a uniform draw of ~1.0
        // can never scan past the end.
        *cdf.last_mut().expect("non-empty") = 1.0;
        let support: Vec<u32> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(k, _)| k as u32)
            .collect();
        let point = match support.as_slice() {
            [k] => Some(*k),
            _ => None,
        };
        Ok(Self { probs, cdf, point })
    }

    /// Point mass at `k`: `P(X = k) = 1`.
    pub fn point_mass(k: u32) -> Self {
        let mut probs = vec![0.0; k as usize + 1];
        probs[k as usize] = 1.0;
        Self::new(probs).expect("point mass is a valid pmf")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest value the pmf can produce (`len - 1`).
    pub fn max_value(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    /// `Some(k)` iff the distribution is a point mass at `k`.
    pub fn as_point_mass(&self) -> Option<u32> {
        self.point
    }

    /// `E(X) = Σ k·p_k`.
    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// `Var(X) = Σ k²·p_k − mean²`.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        let second: f64 = self
            .probs
            .iter()
            .enumerate()
            .map(|(k, p)| (k as f64) * (k as f64) * p)
            .sum();
        // Clamp float cancellation noise; a variance is never negative.
        (second - mean * mean).max(0.0)
    }

    /// Draws a value by inverse-CDF over the cumulative table. Point masses
    /// short-circuit without consuming randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if let Some(k) = self.point {
            return k;
        }
        let u: f64 = rng.random();
        // Linear scan: degree supports are tiny (a handful of entries), which
        // beats binary search at this size and keeps the draw branch-predictable.
        for (k, &c) in self.cdf.iter().enumerate() {
            if u < c {
                return k as u32;
            }
        }
        self.max_value()
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = DistError;
    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        Pmf::new(probs)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(pmf: Pmf) -> Vec<f64> {
        pmf.probs
    }
}

/// Family of a vertex-cost distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostFamily {
    /// Degenerate cost: every draw returns `mean` exactly.
    Point,
    /// Lognormal cost with the given linear-scale mean and sd.
    Lognormal,
}

/// Cost distribution of one vertex class, parameterized on the linear scale.
/// Construction (including deserialization) validates the parameters, so a
/// held value is always a usable distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCostSpec")]
pub struct CostSpec {
    family: CostFamily,
    mean: f64,
    sd: f64,
}

/// Unvalidated wire form of [`CostSpec`].
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCostSpec {
    family: CostFamily,
    mean: f64,
    sd: f64,
}

impl TryFrom<RawCostSpec> for CostSpec {
    type Error = DistError;

    fn try_from(raw: RawCostSpec) -> Result<Self, DistError> {
        CostSpec::new(raw.family, raw.mean, raw.sd)
    }
}

impl CostSpec {
    pub fn point(mean: f64) -> Result<Self, DistError> {
        Self::new(CostFamily::Point, mean, 0.0)
    }

    pub fn lognormal(mean: f64, sd: f64) -> Result<Self, DistError> {
        Self::new(CostFamily::Lognormal, mean, sd)
    }

    pub fn new(family: CostFamily, mean: f64, sd: f64) -> Result<Self, DistError> {
        if !mean.is_finite() || !sd.is_finite() || sd < 0.0 {
            return Err(DistError::InvalidCost {
                reason: format!("mean {mean} and sd {sd} must be finite with sd >= 0"),
            });
        }
        match family {
            CostFamily::Point => {
                if sd != 0.0 {
                    return Err(DistError::InvalidCost {
                        reason: format!("point family requires sd = 0, got {sd}"),
                    });
                }
                if mean < 0.0 {
                    return Err(DistError::InvalidCost {
                        reason: format!("point cost mean must be >= 0, got {mean}"),
                    });
                }
            }
            CostFamily::Lognormal => {
                if mean <= 0.0 {
                    return Err(DistError::InvalidCost {
                        reason: format!("lognormal cost mean must be > 0, got {mean}"),
                    });
                }
            }
        }
        Ok(Self { family, mean, sd })
    }

    pub fn family(&self) -> CostFamily {
        self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn variance(&self) -> f64 {
        self.sd * self.sd
    }

    /// Second moment `E(Ĉ²) = mean² + sd²`; enters the star-loss variance.
    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.sd * self.sd
    }

    /// Compiles the spec into a reusable sampler.
    pub fn sampler(&self) -> CostSampler {
        match self.family {
            CostFamily::Point => CostSampler::Point(self.mean),
            CostFamily::Lognormal => {
                if self.sd == 0.0 {
                    // A zero-sd lognormal degenerates to a point mass; sampling
                    // it directly would require log-scale sd 0 which is fine,
                    // but the point path avoids the exp/ln round trip.
                    CostSampler::Point(self.mean)
                } else {
                    let (log_mean, log_sd) =
                        lognormal_params(self.mean, self.sd).expect("validated at construction");
                    CostSampler::Lognormal(
                        LogNormal::new(log_mean, log_sd).expect("finite log-scale parameters"),
                    )
                }
            }
        }
    }
}

/// Converts a linear-scale `(mean, sd)` pair into the log-scale `(m, s)`
/// parameters of the lognormal with exactly those moments:
/// `s² = ln(1 + (sd/mean)²)`, `m = ln(mean) − s²/2`.
///
/// `sd = 0` yields `s = 0` (a degenerate point mass at `mean`), so callers
/// never hit `ln(0)`.
pub fn lognormal_params(mean: f64, sd: f64) -> Result<(f64, f64), DistError> {
    if !(mean > 0.0) || !sd.is_finite() || sd < 0.0 {
        return Err(DistError::InvalidCost {
            reason: format!("lognormal requires mean > 0 and sd >= 0, got mean {mean}, sd {sd}"),
        });
    }
    let ratio = sd / mean;
    // ln_1p keeps full precision when sd ≪ mean, where 1 + ratio² would
    // round away the variance information before the log.
    let s2 = (ratio * ratio).ln_1p();
    let m = mean.ln() - s2 / 2.0;
    Ok((m, s2.sqrt()))
}

/// Compiled cost sampler; cheap to copy and free of per-draw setup.
#[derive(Debug, Clone, Copy)]
pub enum CostSampler {
    Point(f64),
    Lognormal(LogNormal<f64>),
}

impl CostSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            CostSampler::Point(mean) => *mean,
            CostSampler::Lognormal(dist) => dist.sample(rng),
        }
    }

    /// True when every draw returns the same value without consuming
    /// randomness.
    pub fn is_point(&self) -> bool {
        matches!(self, CostSampler::Point(_))
    }
}
