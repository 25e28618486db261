//! Constants of the finite-time regret analysis and per-run checks of the
//! concentration events it conditions on.
//!
//! Everything here is a direct evaluation of closed-form expressions; the
//! multi-run Monte Carlo drivers live in the companion crate.

use alloc::vec::Vec;

use crate::estimation::{gamma, GammaForm};
use crate::jmls::solve_jmls_default;
use crate::ofu::ParameterBox;
use crate::plant::{SystemTruth, TraceRow};
use crate::{CandidateTheta, CostWeights, Error, Result};

/// `E log|A_sw|` under the true parameters when the controller applies the
/// delivered-slot gain `k1`:
/// `p log|A + B k1| + (1 - p) log|A|`.
///
/// A zero branch gain with positive probability gives `-inf`.
pub fn lyapunov_margin(truth: &CandidateTheta, k1: f64) -> f64 {
    let closed = (truth.a + truth.b * k1).abs();
    let open = truth.a.abs();
    let mut margin = 0.0;
    if truth.p > 0.0 {
        margin += truth.p * libm::log(closed);
    }
    if truth.p < 1.0 {
        margin += (1.0 - truth.p) * libm::log(open);
    }
    margin
}

/// Smallest integer `L` strictly above `(2 alpha p (1 - p) / epsilon^2)^2`.
pub fn min_episode_len(alpha: f64, p: f64, epsilon: f64) -> u64 {
    let s = 2.0 * alpha * p * (1.0 - p) / (epsilon * epsilon);
    libm::floor(s * s) as u64 + 1
}

/// Margin-of-stability check over the parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarginReport {
    /// Largest `Lambda(theta)` over the stabilizable grid candidates.
    pub lambda_of_theta: f64,
    /// Candidate attaining `lambda_of_theta`.
    pub worst_theta: CandidateTheta,
    pub eta: f64,
    pub epsilon: f64,
    pub satisfied: bool,
    pub l_min: u64,
}

/// Evaluates `sup Lambda(theta)` over the grid on `bx` against the truth and
/// compares it with `-(eta + epsilon)`.
pub fn margin_report(
    truth: &CandidateTheta,
    bx: &ParameterBox,
    weights: &CostWeights,
    eta: f64,
    epsilon: f64,
    alpha: f64,
) -> Result<MarginReport> {
    let mut worst: Option<(f64, CandidateTheta)> = None;
    for theta in bx.grid() {
        let sol = solve_jmls_default(&theta, weights)?;
        if !sol.converged {
            continue;
        }
        let lam = lyapunov_margin(truth, sol.k1);
        if worst.is_none_or(|(w, _)| lam > w) {
            worst = Some((lam, theta));
        }
    }
    let (lambda_of_theta, worst_theta) = worst.ok_or(Error::NoFeasibleCandidate)?;
    Ok(MarginReport {
        lambda_of_theta,
        worst_theta,
        eta,
        epsilon,
        satisfied: lambda_of_theta < -(eta + epsilon),
        l_min: min_episode_len(alpha, truth.p, epsilon),
    })
}

/// Suprema over the parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxSuprema {
    pub k_max: f64,
    pub p_max: f64,
    pub g_cl_max: f64,
    /// Grid candidates skipped because their Riccati iteration diverged.
    pub excluded: usize,
}

/// `K_max`, `P_max` and `G_cl,max` on the grid over `bx`.
///
/// `G_cl,max` covers both channel states under the candidate's and the true
/// dynamics: `|A + B K1|`, `|A|`, `|A* + B* K1|`, `|A*|`.
pub fn sup_over_box(bx: &ParameterBox, weights: &CostWeights, truth: &CandidateTheta) -> Result<BoxSuprema> {
    let mut sup = BoxSuprema {
        k_max: 0.0,
        p_max: 0.0,
        g_cl_max: 0.0,
        excluded: 0,
    };
    let mut any = false;
    for theta in bx.grid() {
        let sol = solve_jmls_default(&theta, weights)?;
        if !sol.converged {
            sup.excluded += 1;
            continue;
        }
        any = true;
        sup.k_max = sup.k_max.max(sol.k0.abs()).max(sol.k1.abs());
        sup.p_max = sup.p_max.max(sol.p0).max(sol.p1);
        let branches = [
            (theta.a + theta.b * sol.k1).abs(),
            theta.a.abs(),
            (truth.a + truth.b * sol.k1).abs(),
            truth.a.abs(),
        ];
        sup.g_cl_max = branches.into_iter().fold(sup.g_cl_max, f64::max);
    }
    if !any {
        return Err(Error::NoFeasibleCandidate);
    }
    Ok(sup)
}

/// Largest absolute gain over the grid on `bx`; needs no knowledge of the
/// truth, so the learning controller can use it.
pub fn k_max_over_box(bx: &ParameterBox, weights: &CostWeights) -> Result<f64> {
    let mut k_max: Option<f64> = None;
    for theta in bx.grid() {
        let sol = solve_jmls_default(&theta, weights)?;
        if sol.converged {
            k_max = Some(k_max.unwrap_or(0.0).max(sol.k1.abs()));
        }
    }
    k_max.ok_or(Error::NoFeasibleCandidate)
}

/// `sqrt(log(T / delta)) / (1 - e^-eta)`: the noise-driven part of the state
/// bound.
fn noise_envelope(delta: f64, horizon: f64, eta: f64) -> f64 {
    libm::sqrt(libm::log(horizon / delta).max(0.0)) / (1.0 - libm::exp(-eta))
}

/// State bound `g(delta, T) = |x0| + sqrt(log(T/delta)) / (1 - e^-eta)`.
pub fn state_bound(x0: f64, delta: f64, horizon: f64, eta: f64) -> f64 {
    x0.abs() + noise_envelope(delta, horizon, eta)
}

/// Episode-count bound
/// `f = log(1 + T g^2/lambda) + log(1 + T K_max^2 g^2/lambda) + log T`.
pub fn episode_count_bound(g: f64, horizon: f64, lambda: f64, k_max: f64) -> f64 {
    let g2 = g * g;
    libm::log(1.0 + horizon * g2 / lambda)
        + libm::log(1.0 + horizon * k_max * k_max * g2 / lambda)
        + libm::log(horizon)
}

/// Within-episode ratio bound
/// `h = max{1 + 2L(1 + envelope^2 / lambda), 2}`.
pub fn episode_ratio_bound(delta: f64, horizon: f64, min_len: u64, lambda: f64, eta: f64) -> f64 {
    let env = noise_envelope(delta, horizon, eta);
    (1.0 + 2.0 * min_len as f64 * (1.0 + env * env / lambda)).max(2.0)
}

/// `U1 = sqrt(T g log(T/delta)) + 2 P_max g^2 + P_max f g`.
pub fn regret_u1(g: f64, f: f64, p_max: f64, delta: f64, horizon: f64) -> f64 {
    libm::sqrt(horizon * g * libm::log(horizon / delta).max(0.0)) + 2.0 * p_max * g * g + p_max * f * g
}

/// `C1 = 2 sqrt(2) P_max (1 + K_max) G_cl,max / lambda`.
pub fn constant_c1(p_max: f64, k_max: f64, g_cl_max: f64, lambda: f64) -> f64 {
    2.0 * core::f64::consts::SQRT_2 * p_max * (1.0 + k_max) * g_cl_max / lambda
}

/// Inputs of [`regret_u2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct U2Inputs {
    pub c1: f64,
    pub horizon: f64,
    pub lambda: f64,
    pub delta: f64,
    pub v1: f64,
    pub v2: f64,
    pub h: f64,
    pub g: f64,
    pub p_max: f64,
    pub g_cl_max: f64,
    pub noise_variance: f64,
    pub alpha: f64,
}

/// `U2 = C1 sqrt(T) log(V1/lambda) (gamma1 + gamma2 + 2 sqrt(lambda)) sqrt(h) g^{3/2}
///      + P_max (G_cl,max^2 g + sigma^2) sqrt(alpha T log T)`,
/// with `gamma_i` evaluated at the supplied `V_i(T)`.
pub fn regret_u2(inp: &U2Inputs) -> f64 {
    let (g1, _) = gamma(inp.lambda, inp.v1, inp.delta, GammaForm::Literal);
    let (g2, _) = gamma(inp.lambda, inp.v2, inp.delta, GammaForm::Literal);
    let first = inp.c1
        * libm::sqrt(inp.horizon)
        * libm::log(inp.v1 / inp.lambda)
        * (g1 + g2 + 2.0 * libm::sqrt(inp.lambda))
        * libm::sqrt(inp.h)
        * libm::pow(inp.g, 1.5);
    let second = inp.p_max
        * (inp.g_cl_max * inp.g_cl_max * inp.g + inp.noise_variance)
        * libm::sqrt(inp.alpha * inp.horizon * libm::log(inp.horizon));
    first + second
}

/// Probability budget of the events the bound conditions on:
/// `7 delta + T^2 / L^alpha`.
pub fn failure_budget(delta: f64, horizon: f64, min_len: u64, alpha: f64) -> f64 {
    7.0 * delta + horizon * horizon / libm::pow(min_len as f64, alpha)
}

/// Scenario inputs of the bound report that are not part of the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub delta: f64,
    pub horizon: u64,
    pub min_episode_len: u64,
    pub alpha: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub lambda: f64,
}

/// Evaluated analysis constants for one scenario.
///
/// `u2` is the a-priori variant, with `V_i(T)` replaced by
/// `lambda + T g^2 max(1, K_max^2)`; [`BoundReport::u2_a_posteriori`] plugs
/// in realized statistics instead.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub eta: f64,
    pub epsilon: f64,
    pub g: f64,
    pub f: f64,
    pub h: f64,
    #[cfg_attr(feature = "serde", serde(rename = "K_max"))]
    pub k_max: f64,
    #[cfg_attr(feature = "serde", serde(rename = "P_max"))]
    pub p_max: f64,
    #[cfg_attr(feature = "serde", serde(rename = "G_cl_max"))]
    pub g_cl_max: f64,
    #[cfg_attr(feature = "serde", serde(rename = "C1"))]
    pub c1: f64,
    #[cfg_attr(feature = "serde", serde(rename = "U1"))]
    pub u1: f64,
    #[cfg_attr(feature = "serde", serde(rename = "U2"))]
    pub u2: f64,
    pub failure_budget: f64,
    pub assumption1_satisfied: bool,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub params: Option<BoundContext>,
}

/// What [`BoundReport::u2_a_posteriori`] needs besides the report itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundContext {
    pub lambda: f64,
    pub delta: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub noise_variance: f64,
}

impl BoundReport {
    /// `U2` with the realized `V1(T)`, `V2(T)` of a run.
    pub fn u2_a_posteriori(&self, v1: f64, v2: f64) -> f64 {
        let ctx = self.params.expect("report built by bound_report");
        regret_u2(&U2Inputs {
            c1: self.c1,
            horizon: ctx.horizon,
            lambda: ctx.lambda,
            delta: ctx.delta,
            v1,
            v2,
            h: self.h,
            g: self.g,
            p_max: self.p_max,
            g_cl_max: self.g_cl_max,
            noise_variance: ctx.noise_variance,
            alpha: ctx.alpha,
        })
    }

    /// `U1 + U2`, a-posteriori when statistics are supplied.
    pub fn total(&self, realized: Option<(f64, f64)>) -> f64 {
        match realized {
            Some((v1, v2)) => self.u1 + self.u2_a_posteriori(v1, v2),
            None => self.u1 + self.u2,
        }
    }
}

/// Evaluates every analysis constant for `truth` with parameter box `bx`.
///
/// The report is produced even when the margin assumption fails; the
/// `assumption1_satisfied` flag says whether the bounds apply.
pub fn bound_report(truth: &SystemTruth, bx: &ParameterBox, params: &BoundParams) -> Result<BoundReport> {
    truth.validate()?;
    bx.validate()?;
    if !(params.eta > 0.0) {
        return Err(Error::NonPositiveMargin);
    }
    if !(params.epsilon > 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive"));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::InvalidParameter("delta must lie in (0, 1)"));
    }
    if !(params.lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive"));
    }
    if params.horizon == 0 || params.min_episode_len == 0 {
        return Err(Error::InvalidParameter("T and L must be >= 1"));
    }
    let margin = margin_report(
        &truth.theta,
        bx,
        &truth.weights,
        params.eta,
        params.epsilon,
        params.alpha,
    )?;
    let sup = sup_over_box(bx, &truth.weights, &truth.theta)?;
    let horizon = params.horizon as f64;
    let g = state_bound(truth.x0, params.delta, horizon, params.eta);
    let f = episode_count_bound(g, horizon, params.lambda, sup.k_max);
    let h = episode_ratio_bound(
        params.delta,
        horizon,
        params.min_episode_len,
        params.lambda,
        params.eta,
    );
    let u1 = regret_u1(g, f, sup.p_max, params.delta, horizon);
    let c1 = constant_c1(sup.p_max, sup.k_max, sup.g_cl_max, params.lambda);
    let k = sup.k_max.max(1.0);
    let v_proxy = params.lambda + horizon * g * g * k * k;
    let ctx = BoundContext {
        lambda: params.lambda,
        delta: params.delta,
        horizon,
        alpha: params.alpha,
        noise_variance: truth.weights.noise_variance(),
    };
    let mut report = BoundReport {
        eta: params.eta,
        epsilon: params.epsilon,
        g,
        f,
        h,
        k_max: sup.k_max,
        p_max: sup.p_max,
        g_cl_max: sup.g_cl_max,
        c1,
        u1,
        u2: 0.0,
        failure_budget: failure_budget(params.delta, horizon, params.min_episode_len, params.alpha),
        assumption1_satisfied: margin.satisfied,
        params: Some(ctx),
    };
    report.u2 = report.u2_a_posteriori(v_proxy, v_proxy);
    Ok(report)
}

/// Noise threshold checks for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseEventCheck {
    /// Some `|w(t)| > sqrt(log(T / delta))`.
    pub literal_violated: bool,
    /// Some `|w(t)| > sigma_w sqrt(2 log(2T / delta))`.
    pub gaussian_tail_violated: bool,
}

pub fn noise_event(noise: impl IntoIterator<Item = f64>, horizon: u64, delta: f64, sigma_w: f64) -> NoiseEventCheck {
    let t = horizon as f64;
    let literal = libm::sqrt(libm::log(t / delta).max(0.0));
    let tail = sigma_w * libm::sqrt(2.0 * libm::log(2.0 * t / delta));
    let max_abs = noise.into_iter().fold(0.0f64, |m, w| m.max(w.abs()));
    NoiseEventCheck {
        literal_violated: max_abs > literal,
        gaussian_tail_violated: max_abs > tail,
    }
}

/// Prefix sums of the channel states; `prefix[k]` counts deliveries among
/// the first `k` slots.
pub fn delivery_prefix(channel: impl IntoIterator<Item = bool>) -> Vec<u64> {
    let mut prefix = alloc::vec![0u64];
    let mut acc = 0;
    for ell in channel {
        acc += ell as u64;
        prefix.push(acc);
    }
    prefix
}

/// `Delta(t1, t2) = #deliveries in slots t1..t2-1 - p (t2 - t1)` (1-based).
pub fn delivery_deviation(prefix: &[u64], p: f64, t1: usize, t2: usize) -> f64 {
    let count = prefix[t2 - 1] - prefix[t1 - 1];
    count as f64 - p * (t2 - t1) as f64
}

/// `sqrt(2 alpha p (1 - p) n log n)` for a window of `n = t2 - t1` slots.
pub fn deviation_threshold(p: f64, alpha: f64, n: usize) -> f64 {
    let n = n as f64;
    libm::sqrt(2.0 * alpha * p * (1.0 - p) * n * libm::log(n))
}

/// Whether the deviation event holds on the window `(t1, t2)`.
pub fn deviation_event_holds(prefix: &[u64], p: f64, alpha: f64, t1: usize, t2: usize) -> bool {
    delivery_deviation(prefix, p, t1, t2).abs() <= deviation_threshold(p, alpha, t2 - t1)
}

/// Whether the deviation event holds on every window with
/// `t2 >= t1 + min_len` inside `1..=T`, where `T = prefix.len() - 1`.
pub fn deviation_event_all(prefix: &[u64], p: f64, alpha: f64, min_len: usize) -> bool {
    let horizon = prefix.len() - 1;
    let min_len = min_len.max(1);
    if horizon <= min_len {
        return true;
    }
    let thresholds: Vec<f64> = (0..=horizon).map(|n| deviation_threshold(p, alpha, n)).collect();
    for t1 in 1..=horizon - min_len {
        let base = prefix[t1 - 1];
        for t2 in t1 + min_len..=horizon {
            let n = t2 - t1;
            let dev = (prefix[t2 - 1] - base) as f64 - p * n as f64;
            if dev.abs() > thresholds[n] {
                return false;
            }
        }
    }
    true
}

/// Per-coordinate: did the truth leave its confidence interval at any slot?
pub fn coverage_violations(trace: &[TraceRow], truth: &CandidateTheta) -> [bool; 3] {
    let mut out = [false; 3];
    for row in trace {
        for (o, v) in out.iter_mut().zip(row.cset.violations(truth)) {
            *o |= v;
        }
    }
    out
}
