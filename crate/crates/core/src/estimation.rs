//! Regularized least-squares estimates of `(A, B)`, the empirical channel
//! reliability, and the per-coordinate confidence intervals around them.
//!
//! Sufficient statistics are updated every step; the point estimates are
//! only recomputed by [`EstimatorState::refresh_estimates`], which the
//! learning controller calls at episode boundaries.

use crate::{CandidateTheta, Error, Result};

/// Estimates used before any data has been seen.
pub const INITIAL_ESTIMATE: f64 = 0.5;

/// Log-argument form used for the radius terms `gamma_1`, `gamma_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GammaForm {
    /// `sqrt(log(lambda V / delta))`.
    #[default]
    Literal,
    /// `sqrt(log(V / (lambda delta^2)))`, the usual self-normalized form for
    /// unit-variance noise.
    SelfNormalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    t: u64,
    lambda: f64,
    v1: f64,
    v2: f64,
    s_zx0: f64,
    s_zu1: f64,
    s_xu1: f64,
    s_uu1: f64,
    ell_count: u64,
    a_hat: f64,
    b_hat: f64,
    p_hat: f64,
}

impl EstimatorState {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive"));
        }
        Ok(Self {
            t: 0,
            lambda,
            v1: lambda,
            v2: lambda,
            s_zx0: 0.0,
            s_zu1: 0.0,
            s_xu1: 0.0,
            s_uu1: 0.0,
            ell_count: 0,
            a_hat: INITIAL_ESTIMATE,
            b_hat: INITIAL_ESTIMATE,
            p_hat: INITIAL_ESTIMATE,
        })
    }

    /// Folds one transition `x -> x_next` under control `u` and channel
    /// state `ell` into the statistics. Estimates are left untouched.
    pub fn record_step(&mut self, x: f64, u: f64, ell: bool, x_next: f64) {
        if ell {
            self.v2 += u * u;
            self.s_uu1 += u * u;
            self.s_zu1 += x_next * u;
            self.s_xu1 += x * u;
            self.ell_count += 1;
        } else {
            self.v1 += x * x;
            self.s_zx0 += x_next * x;
        }
        self.t += 1;
    }

    /// Recomputes `(A_hat, B_hat, p_hat)` from the statistics. `B_hat` is
    /// the ridge minimizer given the freshly computed `A_hat`.
    pub fn refresh_estimates(&mut self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::NoSamples);
        }
        self.p_hat = self.ell_count as f64 / self.t as f64;
        self.a_hat = self.s_zx0 / self.v1;
        self.b_hat = (self.s_zu1 - self.a_hat * self.s_xu1) / self.v2;
        Ok(())
    }

    /// Confidence set with the literal radius form.
    pub fn confidence_set(&self, delta: f64, k_max: f64) -> Result<ConfidenceSet> {
        self.confidence_set_with(delta, k_max, GammaForm::Literal)
    }

    pub fn confidence_set_with(
        &self,
        delta: f64,
        k_max: f64,
        form: GammaForm,
    ) -> Result<ConfidenceSet> {
        if self.t == 0 {
            return Err(Error::NoSamples);
        }
        radii(
            self.lambda,
            self.v1,
            self.v2,
            self.t,
            delta,
            k_max,
            form,
            self.estimate(),
        )
    }

    /// Confidence set before any data: initial estimates, `V1 = V2 = lambda`,
    /// and one elapsed slot for the reliability radius.
    pub fn initial_confidence_set(&self, delta: f64, k_max: f64, form: GammaForm) -> Result<ConfidenceSet> {
        let initial = CandidateTheta {
            a: INITIAL_ESTIMATE,
            b: INITIAL_ESTIMATE,
            p: INITIAL_ESTIMATE,
        };
        radii(self.lambda, self.lambda, self.lambda, 1, delta, k_max, form, initial)
    }

    /// `(A_hat - A, B_hat - B, p_hat - p)`.
    pub fn estimation_errors(&self, truth: &CandidateTheta) -> (f64, f64, f64) {
        (
            self.a_hat - truth.a,
            self.b_hat - truth.b,
            self.p_hat - truth.p,
        )
    }

    pub fn estimate(&self) -> CandidateTheta {
        CandidateTheta {
            a: self.a_hat,
            b: self.b_hat,
            p: self.p_hat,
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v1(&self) -> f64 {
        self.v1
    }

    pub fn v2(&self) -> f64 {
        self.v2
    }

    pub fn s_zx0(&self) -> f64 {
        self.s_zx0
    }

    pub fn s_zu1(&self) -> f64 {
        self.s_zu1
    }

    pub fn s_xu1(&self) -> f64 {
        self.s_xu1
    }

    /// `sum u^2 l`, kept separately so that `V2 - lambda` can be checked.
    pub fn s_uu1(&self) -> f64 {
        self.s_uu1
    }

    pub fn ell_count(&self) -> u64 {
        self.ell_count
    }
}

/// `gamma = sqrt(log(arg))`, clamped to zero when `arg < 1`.
pub fn gamma(lambda: f64, v: f64, delta: f64, form: GammaForm) -> (f64, bool) {
    let arg = match form {
        GammaForm::Literal => lambda * v / delta,
        GammaForm::SelfNormalized => v / (lambda * delta * delta),
    };
    if arg < 1.0 {
        (0.0, true)
    } else {
        (libm::sqrt(libm::log(arg)), false)
    }
}

#[allow(clippy::too_many_arguments)]
fn radii(
    lambda: f64,
    v1: f64,
    v2: f64,
    t: u64,
    delta: f64,
    k_max: f64,
    form: GammaForm,
    center: CandidateTheta,
) -> Result<ConfidenceSet> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("delta must lie in (0, 1)"));
    }
    if !(k_max >= 0.0 && k_max.is_finite()) {
        return Err(Error::InvalidParameter("K_max must be finite and >= 0"));
    }
    let (g1, clamped1) = gamma(lambda, v1, delta, form);
    let (g2, clamped2) = gamma(lambda, v2, delta, form);
    let root_lambda = libm::sqrt(lambda);
    let a_term = (g1 + root_lambda) / libm::sqrt(v1);
    let b_term = (g2 + root_lambda) / libm::sqrt(v2);
    Ok(ConfidenceSet {
        a_center: center.a,
        a_radius: a_term,
        b_center: center.b,
        b_radius: b_term + k_max * a_term,
        p_center: center.p,
        p_radius: libm::sqrt(libm::log(1.0 / delta) / t as f64),
        delta,
        degenerate_radius: clamped1 || clamped2,
    })
}

/// Product of three closed intervals around the point estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceSet {
    pub a_center: f64,
    pub a_radius: f64,
    pub b_center: f64,
    pub b_radius: f64,
    pub p_center: f64,
    pub p_radius: f64,
    pub delta: f64,
    /// Set when a `gamma` log argument fell below one and was clamped.
    pub degenerate_radius: bool,
}

impl ConfidenceSet {
    pub fn a_interval(&self) -> (f64, f64) {
        (self.a_center - self.a_radius, self.a_center + self.a_radius)
    }

    pub fn b_interval(&self) -> (f64, f64) {
        (self.b_center - self.b_radius, self.b_center + self.b_radius)
    }

    /// Reliability interval clipped to `[0, 1]`.
    pub fn p_interval(&self) -> (f64, f64) {
        (
            (self.p_center - self.p_radius).max(0.0),
            (self.p_center + self.p_radius).min(1.0),
        )
    }

    /// Which coordinates of `theta` fall outside their interval.
    pub fn violations(&self, theta: &CandidateTheta) -> [bool; 3] {
        [
            (theta.a - self.a_center).abs() > self.a_radius,
            (theta.b - self.b_center).abs() > self.b_radius,
            (theta.p - self.p_center).abs() > self.p_radius,
        ]
    }

    pub fn contains(&self, theta: &CandidateTheta) -> bool {
        self.violations(theta).iter().all(|v| !v)
    }
}

/// `(A_hat - A, B_hat - B, p_hat - p)` for a refreshed estimator.
pub fn estimation_errors(state: &EstimatorState, truth: &CandidateTheta) -> (f64, f64, f64) {
    state.estimation_errors(truth)
}
