//! Flat TOML experiment configuration.
//!
//! Every key is optional and falls back to the documented default; unknown
//! keys are rejected with an error that names them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ucb_ncs_core::bounds::BoundParams;
use ucb_ncs_core::estimation::GammaForm;
use ucb_ncs_core::ofu::{Interval, ParameterBox};
use ucb_ncs_core::plant::{AlgoConfig, NoiseKind, SystemTruth};
use ucb_ncs_core::{CandidateTheta, CostWeights};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(rename = "A_star")]
    pub a_star: f64,
    #[serde(rename = "B_star")]
    pub b_star: f64,
    pub p_star: f64,
    pub sigma_w: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub x0: f64,
    pub noise_kind: NoiseKind,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub lambda: f64,
    pub delta: f64,
    #[serde(rename = "L")]
    pub min_episode_len: u64,
    pub alpha: f64,
    pub eta: f64,
    pub epsilon: f64,
    /// `[A_lo, A_hi, B_lo, B_hi, p_lo, p_hi]`.
    pub theta_box: [f64; 6],
    pub grid_points: usize,
    pub seed: u64,
    pub n_runs: usize,
    pub out_path: PathBuf,
    pub gamma_form: GammaForm,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            a_star: 1.2,
            b_star: 1.0,
            p_star: 0.7,
            sigma_w: 1.0,
            q: 1.0,
            r: 1.0,
            x0: 0.0,
            noise_kind: NoiseKind::Gaussian,
            horizon: 10_000,
            lambda: 1.0,
            delta: 0.05,
            min_episode_len: 50,
            alpha: 2.5,
            eta: 0.2,
            epsilon: 0.05,
            theta_box: [1.0, 1.4, 0.8, 1.2, 0.5, 0.9],
            grid_points: 21,
            seed: 1,
            n_runs: 100,
            out_path: PathBuf::from("out"),
            gamma_form: GammaForm::Literal,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::ConfigParse(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Checks every key, reporting the first offending one by name.
    pub fn validate(&self) -> Result<()> {
        finite("A_star", self.a_star)?;
        finite("B_star", self.b_star)?;
        if !(0.0..=1.0).contains(&self.p_star) {
            return Err(HarnessError::invalid("p_star", "must lie in [0, 1]"));
        }
        if !(self.sigma_w >= 0.0 && self.sigma_w.is_finite()) {
            return Err(HarnessError::invalid("sigma_w", "must be finite and >= 0"));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(HarnessError::invalid("Q", "must be finite and >= 0"));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(HarnessError::invalid("R", "must be finite and > 0"));
        }
        finite("x0", self.x0)?;
        if self.horizon == 0 {
            return Err(HarnessError::invalid("T", "must be >= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(HarnessError::invalid("lambda", "must be > 0"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(HarnessError::invalid("delta", "must lie in (0, 1)"));
        }
        if self.min_episode_len == 0 {
            return Err(HarnessError::invalid("L", "must be >= 1"));
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(HarnessError::invalid("alpha", "must be > 2"));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(HarnessError::invalid("eta", "must be > 0"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(HarnessError::invalid("epsilon", "must be > 0"));
        }
        self.parameter_box()
            .map_err(|e| HarnessError::invalid("theta_box", e.to_string()))?;
        if self.grid_points < 2 {
            return Err(HarnessError::invalid("grid_points", "must be >= 2"));
        }
        Ok(())
    }

    pub fn theta_star(&self) -> CandidateTheta {
        CandidateTheta {
            a: self.a_star,
            b: self.b_star,
            p: self.p_star,
        }
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights {
            q: self.q,
            r: self.r,
            sigma_w: self.sigma_w,
        }
    }

    pub fn truth(&self) -> SystemTruth {
        SystemTruth {
            theta: self.theta_star(),
            weights: self.weights(),
            x0: self.x0,
            noise: self.noise_kind,
        }
    }

    pub fn parameter_box(&self) -> ucb_ncs_core::Result<ParameterBox> {
        let [alo, ahi, blo, bhi, plo, phi] = self.theta_box;
        ParameterBox::new(
            Interval::new(alo, ahi)?,
            Interval::new(blo, bhi)?,
            Interval::new(plo, phi)?,
            self.grid_points,
        )
    }

    pub fn algo_config(&self) -> Result<AlgoConfig> {
        self.algo_config_for(self.horizon)
    }

    pub fn algo_config_for(&self, horizon: u64) -> Result<AlgoConfig> {
        Ok(AlgoConfig {
            lambda: self.lambda,
            delta: self.delta,
            min_episode_len: self.min_episode_len,
            alpha: self.alpha,
            horizon,
            theta_box: self.parameter_box()?,
            gamma_form: self.gamma_form,
        })
    }

    pub fn bound_params(&self, horizon: u64) -> BoundParams {
        BoundParams {
            delta: self.delta,
            horizon,
            min_episode_len: self.min_episode_len,
            alpha: self.alpha,
            eta: self.eta,
            epsilon: self.epsilon,
            lambda: self.lambda,
        }
    }
}

fn finite(key: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::invalid(key, "must be finite"))
    }
}
