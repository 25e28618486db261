//! Parameter triples and cost weights shared by every module.

use crate::{Error, Result};

/// A candidate `(A, B, p)` for the plant gain, input gain and channel
/// reliability.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateTheta {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

impl CandidateTheta {
    pub fn new(a: f64, b: f64, p: f64) -> Result<Self> {
        let theta = Self { a, b, p };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::InvalidParameter("A must be finite"));
        }
        if !self.b.is_finite() {
            return Err(Error::InvalidParameter("B must be finite"));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter("p must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Bernoulli variance `p (1 - p)` of the channel state.
    pub fn channel_variance(&self) -> f64 {
        self.p * (1.0 - self.p)
    }

    /// Lexicographic comparison on `(A, B, p)`; used as the tie-break rule of
    /// the optimistic search.
    pub fn lex_cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.a
            .total_cmp(&other.a)
            .then(self.b.total_cmp(&other.b))
            .then(self.p.total_cmp(&other.p))
    }
}

/// Stage cost `Q x^2 + R u^2` and process-noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostWeights {
    pub q: f64,
    pub r: f64,
    pub sigma_w: f64,
}

impl CostWeights {
    pub fn new(q: f64, r: f64, sigma_w: f64) -> Result<Self> {
        let weights = Self { q, r, sigma_w };
        weights.validate()?;
        Ok(weights)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q >= 0.0) {
            return Err(Error::InvalidWeights("Q must be finite and >= 0"));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidWeights("R must be finite and > 0"));
        }
        if !(self.sigma_w.is_finite() && self.sigma_w >= 0.0) {
            return Err(Error::InvalidWeights("sigma_w must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn noise_variance(&self) -> f64 {
        self.sigma_w * self.sigma_w
    }

    pub fn stage_cost(&self, x: f64, u: f64) -> f64 {
        self.q * x * x + self.r * u * u
    }
}
