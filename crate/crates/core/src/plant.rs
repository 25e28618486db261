//! The lossy-channel plant, its seeded random streams, and the drivers that
//! run the learning controller or the known-parameter oracle against it.
//!
//! Time runs `t = 1..=T` with `x(1) = x0`. Every slot draws `l(t)` from the
//! channel stream and `w(t)` from the noise stream, both derived from one
//! master seed, so two controllers run under the same seed see identical
//! channel and noise realizations.

use alloc::vec::Vec;

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bounds::k_max_over_box;
use crate::estimation::{ConfidenceSet, EstimatorState, GammaForm};
use crate::jmls::{average_cost, solve_jmls_default, JmlsSolution};
use crate::ofu::{self, episode_trigger, minimize_cost, ofu_select, EpisodeState, ParameterBox};
use crate::{CandidateTheta, CostWeights, Error, Result};

const CHANNEL_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Truncation point, in standard deviations, of the truncated gaussian.
pub const TRUNCATION_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NoiseKind {
    #[default]
    Gaussian,
    TruncatedGaussian,
    Uniform,
}

/// Real plant, channel and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemTruth {
    pub theta: CandidateTheta,
    pub weights: CostWeights,
    pub x0: f64,
    pub noise: NoiseKind,
}

impl SystemTruth {
    pub fn validate(&self) -> Result<()> {
        self.theta.validate()?;
        self.weights.validate()?;
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite"));
        }
        Ok(())
    }

    /// `J` of the true parameter; an error when the truth is unstabilizable.
    pub fn optimal_solution(&self) -> Result<JmlsSolution> {
        let sol = solve_jmls_default(&self.theta, &self.weights)?;
        if !sol.converged {
            return Err(Error::NotStabilizable);
        }
        Ok(sol)
    }
}

/// `A x + B u + w` when the packet is delivered, `A x + w` otherwise.
#[inline]
pub fn step_plant(x: f64, u: f64, ell: bool, w: f64, truth: &SystemTruth) -> f64 {
    let drift = truth.theta.a * x + w;
    if ell {
        drift + truth.theta.b * u
    } else {
        drift
    }
}

/// Channel and noise substreams of one run.
#[derive(Debug, Clone)]
pub struct SimStreams {
    channel: ChaCha8Rng,
    noise: ChaCha8Rng,
    delivery: Bernoulli,
    noise_kind: NoiseKind,
    sigma_w: f64,
    truncated_scale: f64,
}

impl SimStreams {
    pub fn new(seed: u64, truth: &SystemTruth) -> Result<Self> {
        let delivery = Bernoulli::new(truth.theta.p)
            .map_err(|_| Error::InvalidParameter("p must lie in [0, 1]"))?;
        Ok(Self {
            channel: substream(seed, CHANNEL_STREAM),
            noise: substream(seed, NOISE_STREAM),
            delivery,
            noise_kind: truth.noise,
            sigma_w: truth.weights.sigma_w,
            truncated_scale: 1.0 / libm::sqrt(truncated_normal_variance(TRUNCATION_SIGMAS)),
        })
    }

    #[inline]
    pub fn next_channel(&mut self) -> bool {
        self.delivery.sample(&mut self.channel)
    }

    /// Mean-zero noise with variance `sigma_w^2`.
    pub fn next_noise(&mut self) -> f64 {
        let unit = match self.noise_kind {
            NoiseKind::Gaussian => self.noise.sample::<f64, _>(StandardNormal),
            NoiseKind::TruncatedGaussian => loop {
                let z: f64 = self.noise.sample(StandardNormal);
                if z.abs() <= TRUNCATION_SIGMAS {
                    break z * self.truncated_scale;
                }
            },
            NoiseKind::Uniform => {
                let u: f64 = self.noise.random();
                (2.0 * u - 1.0) * libm::sqrt(3.0)
            }
        };
        unit * self.sigma_w
    }
}

/// The first `n` channel states a run with this seed would observe.
pub fn channel_draws(seed: u64, p: f64, n: usize) -> Result<Vec<bool>> {
    let delivery = Bernoulli::new(p).map_err(|_| Error::InvalidParameter("p must lie in [0, 1]"))?;
    let mut rng = substream(seed, CHANNEL_STREAM);
    Ok((0..n).map(|_| delivery.sample(&mut rng)).collect())
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Variance of a standard normal truncated to `[-c, c]`.
pub fn truncated_normal_variance(c: f64) -> f64 {
    let pdf = libm::exp(-0.5 * c * c) / libm::sqrt(2.0 * core::f64::consts::PI);
    let mass = libm::erf(c / core::f64::consts::SQRT_2);
    1.0 - 2.0 * c * pdf / mass
}

/// A feedback policy driven by the simulator.
pub trait Policy {
    /// Control for slot `t` given the state and the already observed
    /// channel state.
    fn control(&mut self, t: u64, x: f64, ell: bool) -> f64;

    /// Transition feedback after the plant has moved.
    fn observe(&mut self, _x: f64, _u: f64, _ell: bool, _x_next: f64) {}
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub t: u64,
    pub x: f64,
    pub u: f64,
    pub ell: bool,
    pub w: f64,
    pub cost: f64,
}

/// Runs `policy` on the plant for `horizon` slots.
pub fn simulate<P: Policy>(
    truth: &SystemTruth,
    horizon: u64,
    seed: u64,
    policy: &mut P,
) -> Result<Vec<StepRecord>> {
    truth.validate()?;
    let mut streams = SimStreams::new(seed, truth)?;
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut x = truth.x0;
    for t in 1..=horizon {
        let ell = streams.next_channel();
        let w = streams.next_noise();
        let u = policy.control(t, x, ell);
        let cost = truth.weights.stage_cost(x, u);
        let x_next = step_plant(x, u, ell, w, truth);
        policy.observe(x, u, ell, x_next);
        steps.push(StepRecord { t, x, u, ell, w, cost });
        x = x_next;
    }
    Ok(steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ControllerTag {
    Ucb,
    Oracle,
}

impl ControllerTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerTag::Ucb => "ucb",
            ControllerTag::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpisodeLog {
    pub index: u64,
    pub tau: u64,
    pub theta: CandidateTheta,
    pub j: f64,
}

/// Off-nominal events the learning controller recovered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Warning {
    /// The confidence set missed the parameter box; previous parameter kept.
    EmptyIntersection { t: u64 },
    /// Every candidate in the intersection was unstabilizable.
    NoFeasibleCandidate { t: u64 },
    /// A radius log argument fell below one and was clamped.
    DegenerateRadius { t: u64 },
    /// The initial search fell back to the full parameter box.
    InitialFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub controller: ControllerTag,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub cum_cost: f64,
    pub regret: Vec<f64>,
    pub j_star: f64,
    pub episodes: Vec<EpisodeLog>,
    pub warnings: Vec<Warning>,
    /// Largest `V1(t) / V1(tau_k)` seen inside any episode (learning runs).
    pub max_episode_ratio: Option<f64>,
}

impl TrajectoryRecord {
    fn assemble(controller: ControllerTag, seed: u64, steps: Vec<StepRecord>, j_star: f64) -> Self {
        let cum_cost = steps.iter().map(|s| s.cost).sum();
        let regret = regret_of(&steps, j_star);
        Self {
            controller,
            seed,
            steps,
            cum_cost,
            regret,
            j_star,
            episodes: Vec::new(),
            warnings: Vec::new(),
            max_episode_ratio: None,
        }
    }

    pub fn horizon(&self) -> u64 {
        self.steps.len() as u64
    }

    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_x(&self) -> f64 {
        self.steps.iter().map(|s| s.x.abs()).fold(0.0, f64::max)
    }

    pub fn episode_count(&self) -> usize {
        self.episodes.len()
    }

    /// `(V1(T), V2(T))`: regularized sums over slots `1..T-1`.
    pub fn realized_statistics(&self, lambda: f64) -> (f64, f64) {
        let n = self.steps.len().saturating_sub(1);
        self.steps[..n].iter().fold((lambda, lambda), |(v1, v2), s| {
            if s.ell {
                (v1, v2 + s.u * s.u)
            } else {
                (v1 + s.x * s.x, v2)
            }
        })
    }

    /// Channel states in slot order.
    pub fn channel(&self) -> impl Iterator<Item = bool> + '_ {
        self.steps.iter().map(|s| s.ell)
    }

    /// Noise draws in slot order.
    pub fn noise(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.w)
    }
}

/// `R(t) = sum_{s <= t} c(s) - t J*` for every prefix.
pub fn regret_of(steps: &[StepRecord], j_star: f64) -> Vec<f64> {
    let mut acc = 0.0;
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            acc += s.cost;
            acc - (i + 1) as f64 * j_star
        })
        .collect()
}

/// Tunables of the learning controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConfig {
    pub lambda: f64,
    pub delta: f64,
    pub min_episode_len: u64,
    pub alpha: f64,
    pub horizon: u64,
    pub theta_box: ParameterBox,
    pub gamma_form: GammaForm,
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)"));
        }
        if self.min_episode_len == 0 {
            return Err(Error::InvalidParameter("L must be >= 1"));
        }
        if !(self.alpha > 2.0) {
            return Err(Error::InvalidParameter("alpha must be > 2"));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("T must be >= 1"));
        }
        self.theta_box.validate()
    }
}

/// The learning controller as a [`Policy`].
#[derive(Debug, Clone)]
pub struct UcbNcs {
    config: AlgoConfig,
    weights: CostWeights,
    k_max: f64,
    estimator: EstimatorState,
    episode: EpisodeState,
    episodes: Vec<EpisodeLog>,
    warnings: Vec<Warning>,
    max_episode_ratio: f64,
}

impl UcbNcs {
    /// Sets up the first episode from the optimistic choice over the initial
    /// confidence set. `weights` are the known cost weights.
    pub fn new(config: &AlgoConfig, weights: CostWeights) -> Result<Self> {
        config.validate()?;
        weights.validate()?;
        let k_max = k_max_over_box(&config.theta_box, &weights)?;
        let estimator = EstimatorState::new(config.lambda)?;
        let cset = estimator.initial_confidence_set(config.delta, k_max, config.gamma_form)?;
        let mut warnings = Vec::new();
        let (theta, solution) = match ofu_select(&cset, &config.theta_box, &weights) {
            Ok(sel) => sel,
            Err(Error::EmptyConfidenceIntersection | Error::NoFeasibleCandidate) => {
                warnings.push(Warning::InitialFallback);
                minimize_cost(&config.theta_box, &weights)?
            }
            Err(e) => return Err(e),
        };
        let episode = EpisodeState::first(config.lambda, config.min_episode_len, theta, solution);
        Ok(Self {
            config: *config,
            weights,
            k_max,
            estimator,
            episodes: alloc::vec![EpisodeLog { index: 0, tau: 1, theta, j: solution.j }],
            episode,
            warnings,
            max_episode_ratio: 1.0,
        })
    }

    fn start_episode(&mut self, t: u64) {
        // t - tau >= L >= 1 guarantees at least one recorded step.
        let selection = self
            .estimator
            .refresh_estimates()
            .and_then(|_| {
                self.estimator
                    .confidence_set_with(self.config.delta, self.k_max, self.config.gamma_form)
            })
            .and_then(|cset| {
                if cset.degenerate_radius {
                    self.warnings.push(Warning::DegenerateRadius { t });
                }
                ofu_select(&cset, &self.config.theta_box, &self.weights)
            });
        let selection = match selection {
            Ok(sel) => Some(sel),
            Err(Error::EmptyConfidenceIntersection) => {
                self.warnings.push(Warning::EmptyIntersection { t });
                None
            }
            Err(_) => {
                self.warnings.push(Warning::NoFeasibleCandidate { t });
                None
            }
        };
        self.episode
            .advance(t, self.estimator.v1(), self.estimator.v2(), selection);
        self.episodes.push(EpisodeLog {
            index: self.episode.index,
            tau: t,
            theta: self.episode.active_theta,
            j: self.episode.active_solution.j,
        });
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }

    pub fn episode(&self) -> &EpisodeState {
        &self.episode
    }

    pub fn episodes(&self) -> &[EpisodeLog] {
        &self.episodes
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }
}

impl Policy for UcbNcs {
    fn control(&mut self, t: u64, x: f64, ell: bool) -> f64 {
        if episode_trigger(self.estimator.v1(), self.estimator.v2(), &self.episode, t) {
            self.start_episode(t);
        }
        let ratio = self.estimator.v1() / self.episode.v1_star;
        self.max_episode_ratio = self.max_episode_ratio.max(ratio);
        ofu::control(&self.episode, x, ell)
    }

    fn observe(&mut self, x: f64, u: f64, ell: bool, x_next: f64) {
        self.estimator.record_step(x, u, ell, x_next);
    }
}

/// Fixed mode-dependent gains.
#[derive(Debug, Clone, Copy)]
pub struct FixedGains {
    pub solution: JmlsSolution,
}

impl Policy for FixedGains {
    #[inline]
    fn control(&mut self, _t: u64, x: f64, ell: bool) -> f64 {
        self.solution.gain(ell) * x
    }
}

/// Runs the learning controller for `config.horizon` slots.
pub fn run_ucb_ncs(truth: &SystemTruth, config: &AlgoConfig, seed: u64) -> Result<TrajectoryRecord> {
    truth.validate()?;
    let optimal = truth.optimal_solution()?;
    let j_star = average_cost(&optimal, &truth.theta, &truth.weights);
    let mut policy = UcbNcs::new(config, truth.weights)?;
    let steps = simulate(truth, config.horizon, seed, &mut policy)?;
    let mut record = TrajectoryRecord::assemble(ControllerTag::Ucb, seed, steps, j_star);
    record.max_episode_ratio = Some(policy.max_episode_ratio);
    record.episodes = policy.episodes;
    record.warnings = policy.warnings;
    Ok(record)
}

/// Runs the known-parameter optimal controller on the same streams a
/// learning run with this seed would see.
pub fn run_oracle(truth: &SystemTruth, horizon: u64, seed: u64) -> Result<TrajectoryRecord> {
    truth.validate()?;
    if horizon == 0 {
        return Err(Error::InvalidParameter("T must be >= 1"));
    }
    let solution = truth.optimal_solution()?;
    let j_star = average_cost(&solution, &truth.theta, &truth.weights);
    let steps = simulate(truth, horizon, seed, &mut FixedGains { solution })?;
    Ok(TrajectoryRecord::assemble(ControllerTag::Oracle, seed, steps, j_star))
}

/// Estimator diagnostics at one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub estimate: CandidateTheta,
    pub cset: ConfidenceSet,
    pub v1: f64,
    pub v2: f64,
}

/// Replays a trajectory through a shadow estimator refreshed every slot.
///
/// Row `t` uses transitions `1..t-1`; row 1 carries the initial estimates.
/// The controller's own estimates are unaffected.
pub fn estimator_trace(
    record: &TrajectoryRecord,
    lambda: f64,
    delta: f64,
    k_max: f64,
    form: GammaForm,
) -> Result<Vec<TraceRow>> {
    let mut est = EstimatorState::new(lambda)?;
    let mut rows = Vec::with_capacity(record.steps.len());
    for (i, step) in record.steps.iter().enumerate() {
        let cset = if i == 0 {
            est.initial_confidence_set(delta, k_max, form)?
        } else {
            let prev = &record.steps[i - 1];
            est.record_step(prev.x, prev.u, prev.ell, step.x);
            est.refresh_estimates()?;
            est.confidence_set_with(delta, k_max, form)?
        };
        rows.push(TraceRow {
            t: step.t,
            estimate: if i == 0 {
                CandidateTheta { a: cset.a_center, b: cset.b_center, p: cset.p_center }
            } else {
                est.estimate()
            },
            cset,
            v1: est.v1(),
            v2: est.v2(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofu::Interval;

    fn truth(a: f64, b: f64, p: f64, sigma_w: f64, x0: f64) -> SystemTruth {
        SystemTruth {
            theta: CandidateTheta::new(a, b, p).unwrap(),
            weights: CostWeights::new(1.0, 1.0, sigma_w).unwrap(),
            x0,
            noise: NoiseKind::Gaussian,
        }
    }

    fn default_config(horizon: u64) -> AlgoConfig {
        AlgoConfig {
            lambda: 1.0,
            delta: 0.05,
            min_episode_len: 50,
            alpha: 2.5,
            horizon,
            theta_box: ParameterBox::new(
                Interval::new(0.5, 2.0).unwrap(),
                Interval::new(0.5, 2.0).unwrap(),
                Interval::new(0.3, 0.95).unwrap(),
                11,
            )
            .unwrap(),
            gamma_form: GammaForm::Literal,
        }
    }

    #[test]
    fn step_plant_examples() {
        let tr = truth(2.0, 1.0, 0.5, 1.0, 0.0);
        assert_eq!(step_plant(1.0, -1.5, true, 0.0, &tr), 0.5);
        assert_eq!(step_plant(1.0, 5.0, false, 0.0, &tr), 2.0);
        assert_eq!(step_plant(0.0, 0.0, true, 0.3, &tr), 0.3);
        assert_eq!(step_plant(0.0, 0.0, false, 0.3, &tr), 0.3);
    }

    #[test]
    fn regret_examples() {
        let steps: Vec<StepRecord> = (1..=3)
            .map(|t| StepRecord { t, x: 2.0, u: 1.0, ell: true, w: 0.0, cost: 5.0 })
            .collect();
        assert_eq!(regret_of(&steps, 2.0), alloc::vec![3.0, 6.0, 9.0]);
        let zero: Vec<StepRecord> = (1..=4)
            .map(|t| StepRecord { t, x: 0.0, u: 0.0, ell: false, w: 0.0, cost: 0.0 })
            .collect();
        assert!(regret_of(&zero, 0.0).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn oracle_without_noise_decays_geometrically() {
        let tr = truth(0.5, 1.0, 1.0, 0.0, 1.0);
        let rec = run_oracle(&tr, 30, 7).unwrap();
        let k1 = tr.optimal_solution().unwrap().k1;
        let rate = 0.5 + k1;
        let mut expected = 1.0;
        for s in &rec.steps {
            assert!((s.x - expected).abs() <= 1e-15 * expected.abs().max(1e-300) + 1e-300);
            expected *= rate;
        }
    }

    #[test]
    fn oracle_never_acts_on_a_dead_channel() {
        let tr = truth(0.5, 1.0, 0.0, 1.0, 1.0);
        let rec = run_oracle(&tr, 200, 3).unwrap();
        assert!(rec.steps.iter().all(|s| s.u == 0.0 && !s.ell));
    }

    #[test]
    fn oracle_rejects_unstabilizable_truth() {
        let tr = truth(2.0, 1.0, 0.3, 1.0, 0.0);
        assert_eq!(run_oracle(&tr, 10, 1), Err(Error::NotStabilizable));
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let tr = truth(1.2, 1.0, 0.7, 1.0, 0.0);
        let cfg = default_config(400);
        assert_eq!(run_ucb_ncs(&tr, &cfg, 11).unwrap(), run_ucb_ncs(&tr, &cfg, 11).unwrap());
        assert_eq!(run_oracle(&tr, 400, 11).unwrap(), run_oracle(&tr, 400, 11).unwrap());
        assert_ne!(run_oracle(&tr, 400, 11).unwrap().steps, run_oracle(&tr, 400, 12).unwrap().steps);
    }

    #[test]
    fn controllers_share_channel_and_noise() {
        let tr = truth(1.2, 1.0, 0.7, 1.0, 0.0);
        let ucb = run_ucb_ncs(&tr, &default_config(500), 5).unwrap();
        let oracle = run_oracle(&tr, 500, 5).unwrap();
        assert!(ucb.channel().eq(oracle.channel()));
        assert!(ucb.noise().eq(oracle.noise()));
        let draws = channel_draws(5, 0.7, 500).unwrap();
        assert!(draws.into_iter().eq(oracle.channel()));
    }

    #[test]
    fn noiseless_run_from_rest_stays_at_rest() {
        let tr = truth(1.2, 1.0, 0.7, 0.0, 0.0);
        let rec = run_ucb_ncs(&tr, &default_config(300), 9).unwrap();
        assert_eq!(rec.j_star, 0.0);
        assert!(rec.steps.iter().all(|s| s.x == 0.0 && s.u == 0.0));
        assert!(rec.regret.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn singleton_box_reproduces_the_oracle() {
        let tr = truth(1.2, 1.0, 0.7, 1.0, 0.0);
        let mut cfg = default_config(2000);
        cfg.theta_box = ParameterBox::singleton(&tr.theta);
        let ucb = run_ucb_ncs(&tr, &cfg, 21).unwrap();
        let oracle = run_oracle(&tr, 2000, 21).unwrap();
        assert_eq!(ucb.steps, oracle.steps);
        assert_eq!(ucb.regret, oracle.regret);
    }

    #[test]
    fn record_bookkeeping() {
        let tr = truth(1.2, 1.0, 0.7, 1.0, 0.0);
        let rec = run_ucb_ncs(&tr, &default_config(1000), 2).unwrap();
        assert_eq!(rec.horizon(), 1000);
        assert_eq!(rec.cum_cost, rec.steps.iter().map(|s| s.cost).sum::<f64>());
        for s in &rec.steps {
            assert_eq!(s.cost, s.x * s.x + s.u * s.u);
        }
        assert!(rec.episode_count() >= 2);
        for w in rec.episodes.windows(2) {
            assert!(w[1].tau - w[0].tau >= 50);
        }
        assert!(rec.max_episode_ratio.unwrap() >= 1.0);
    }

    #[test]
    fn noise_families_have_matching_variance() {
        for kind in [NoiseKind::Gaussian, NoiseKind::TruncatedGaussian, NoiseKind::Uniform] {
            let mut tr = truth(0.5, 1.0, 0.5, 2.0, 0.0);
            tr.noise = kind;
            let mut s = SimStreams::new(4, &tr).unwrap();
            let n = 200_000;
            let (mut m1, mut m2) = (0.0, 0.0);
            for _ in 0..n {
                let w = s.next_noise();
                m1 += w;
                m2 += w * w;
            }
            let mean = m1 / n as f64;
            let var = m2 / n as f64 - mean * mean;
            assert!(mean.abs() < 0.03, "{kind:?} mean {mean}");
            assert!((var - 4.0).abs() < 0.08, "{kind:?} variance {var}");
        }
        assert!((truncated_normal_variance(3.0) - 0.9733369246625415).abs() < 1e-12);
    }

    #[test]
    fn trace_matches_incremental_estimator() {
        let tr = truth(1.2, 1.0, 0.7, 1.0, 0.0);
        let rec = run_oracle(&tr, 100, 1).unwrap();
        let trace = estimator_trace(&rec, 1.0, 0.05, 1.0, GammaForm::Literal).unwrap();
        assert_eq!(trace.len(), 100);
        assert_eq!(trace[0].estimate.a, 0.5);
        let (v1, v2) = rec.realized_statistics(1.0);
        assert!((trace[99].v1 - v1).abs() < 1e-9 && (trace[99].v2 - v2).abs() < 1e-9);
    }
}
