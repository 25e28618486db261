//! Multi-run drivers: seed sweeps, regret scaling and event frequencies.
//!
//! Runs fan out over rayon; results are collected in seed order so every
//! aggregate is independent of scheduling.

use rayon::prelude::*;
use serde::Serialize;
use ucb_ncs_core::bounds::{
    bound_report, coverage_violations, delivery_prefix, deviation_event_all, deviation_event_holds,
    k_max_over_box, noise_event,
};
use ucb_ncs_core::plant::{channel_draws, estimator_trace, run_oracle, run_ucb_ncs, ControllerTag, TrajectoryRecord};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Runs `f` for every seed in `first..first + n`, in parallel, returning the
/// results in seed order.
pub fn map_seeds<T, F>(first: u64, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| f(first + i))
        .collect()
}

/// Runs one controller under `cfg` for `horizon` slots.
pub fn run_controller(cfg: &ExperimentConfig, controller: ControllerTag, horizon: u64, seed: u64) -> Result<TrajectoryRecord> {
    let truth = cfg.truth();
    Ok(match controller {
        ControllerTag::Ucb => run_ucb_ncs(&truth, &cfg.algo_config_for(horizon)?, seed)?,
        ControllerTag::Oracle => run_oracle(&truth, horizon, seed)?,
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Least-squares slope of `ln y` against `ln x`; `None` unless there are at
/// least two points and every `y` is positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub n_runs: usize,
    pub median_regret: f64,
    pub q1_regret: f64,
    pub q3_regret: f64,
    pub median_v1: f64,
    pub median_v2: f64,
    /// `U1 + U2` with the median realized `V1(T)`, `V2(T)`.
    pub bound_a_posteriori: f64,
    pub assumption1_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Fitted exponent of median final regret against `T`.
    pub exponent: Option<f64>,
}

/// Learning-controller regret over seeds `cfg.seed..cfg.seed + n_runs` for
/// each horizon.
pub fn sweep(cfg: &ExperimentConfig, horizons: &[u64], n_runs: usize) -> Result<SweepResult> {
    if n_runs == 0 {
        return Err(HarnessError::TooFewRuns { what: "sweep", min: 1, got: 0 });
    }
    for w in horizons.windows(2) {
        if w[1] <= w[0] {
            return Err(HarnessError::HorizonOrder(w[1], w[0]));
        }
    }
    let truth = cfg.truth();
    let bx = cfg.parameter_box()?;
    let mut rows = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let algo = cfg.algo_config_for(horizon)?;
        let outcomes = map_seeds(cfg.seed, n_runs, |seed| {
            let rec = run_ucb_ncs(&truth, &algo, seed)?;
            let (v1, v2) = rec.realized_statistics(cfg.lambda);
            Ok((rec.final_regret(), v1, v2))
        })?;
        let sorted = |i: usize| {
            let mut v: Vec<f64> = outcomes.iter().map(|o| [o.0, o.1, o.2][i]).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let regrets = sorted(0);
        let median_v1 = quantile(&sorted(1), 0.5);
        let median_v2 = quantile(&sorted(2), 0.5);
        let report = bound_report(&truth, &bx, &cfg.bound_params(horizon))?;
        rows.push(SweepRow {
            horizon,
            n_runs,
            median_regret: quantile(&regrets, 0.5),
            q1_regret: quantile(&regrets, 0.25),
            q3_regret: quantile(&regrets, 0.75),
            median_v1,
            median_v2,
            bound_a_posteriori: report.total(Some((median_v1, median_v2))),
            assumption1_satisfied: report.assumption1_satisfied,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.horizon as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_regret).collect();
    Ok(SweepResult {
        exponent: log_log_slope(&xs, &ys),
        rows,
    })
}

/// Empirical frequency of a failure event with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequency {
    pub count: usize,
    pub frequency: f64,
    pub std_error: f64,
}

impl Frequency {
    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut count, mut n) = (0usize, 0usize);
        for f in flags {
            count += f as usize;
            n += 1;
        }
        let frequency = if n == 0 { 0.0 } else { count as f64 / n as f64 };
        let std_error = if n == 0 {
            0.0
        } else {
            (frequency * (1.0 - frequency) / n as f64).sqrt()
        };
        Self { count, frequency, std_error }
    }
}

/// Window on which the channel deviation event is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DeviationWindow {
    pub t1: usize,
    pub t2: usize,
}

impl Default for DeviationWindow {
    fn default() -> Self {
        Self { t1: 1, t2: 401 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventFrequencies {
    pub n_runs: usize,
    pub controller: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub delta: f64,
    /// Truth left the confidence set at some slot.
    pub e_c: Frequency,
    /// Same, per coordinate `(A, B, p)`.
    pub e_c_by_coordinate: [Frequency; 3],
    pub e_c_bound: f64,
    /// Some `|w(t)| > sqrt(log(T / delta))`.
    pub h_c_literal: Frequency,
    /// Some `|w(t)| > sigma_w sqrt(2 log(2T / delta))`.
    pub h_c_gaussian_tail: Frequency,
    pub h_c_bound: f64,
    pub j_window: DeviationWindow,
    pub j_c_window: Frequency,
    /// `(t2 - t1)^-alpha`.
    pub j_c_window_bound: f64,
    /// Deviation event over every window of length at least `L` in `1..=T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_c_all_windows: Option<Frequency>,
}

/// Monte Carlo frequencies of the confidence, noise and channel-deviation
/// failure events over `n_runs` seeded simulations.
pub fn check_events(
    cfg: &ExperimentConfig,
    controller: ControllerTag,
    n_runs: usize,
    window: DeviationWindow,
    all_windows: bool,
) -> Result<EventFrequencies> {
    if n_runs < 100 {
        return Err(HarnessError::TooFewRuns { what: "event check", min: 100, got: n_runs });
    }
    if window.t1 == 0 || window.t2 <= window.t1 {
        return Err(HarnessError::invalid("j_window", "need 1 <= t1 < t2"));
    }
    let k_max = k_max_over_box(&cfg.parameter_box()?, &cfg.weights())?;
    let theta = cfg.theta_star();
    let per_run = map_seeds(cfg.seed, n_runs, |seed| {
        let rec = run_controller(cfg, controller, cfg.horizon, seed)?;
        let trace = estimator_trace(&rec, cfg.lambda, cfg.delta, k_max, cfg.gamma_form)?;
        let cover = coverage_violations(&trace, &theta);
        let noise = noise_event(rec.noise(), cfg.horizon, cfg.delta, cfg.sigma_w);
        let raw = channel_draws(seed, cfg.p_star, window.t2)?;
        let window_prefix = delivery_prefix(raw);
        let j_window = !deviation_event_holds(&window_prefix, cfg.p_star, cfg.alpha, window.t1, window.t2);
        let j_all = all_windows.then(|| {
            !deviation_event_all(&delivery_prefix(rec.channel()), cfg.p_star, cfg.alpha, cfg.min_episode_len as usize)
        });
        Ok((cover, noise, j_window, j_all))
    })?;
    let coord = |i: usize| Frequency::from_flags(per_run.iter().map(|r| r.0[i]));
    Ok(EventFrequencies {
        n_runs,
        controller: controller.as_str().to_string(),
        horizon: cfg.horizon,
        delta: cfg.delta,
        e_c: Frequency::from_flags(per_run.iter().map(|r| r.0.iter().any(|&v| v))),
        e_c_by_coordinate: [coord(0), coord(1), coord(2)],
        e_c_bound: 3.0 * cfg.delta,
        h_c_literal: Frequency::from_flags(per_run.iter().map(|r| r.1.literal_violated)),
        h_c_gaussian_tail: Frequency::from_flags(per_run.iter().map(|r| r.1.gaussian_tail_violated)),
        h_c_bound: cfg.delta,
        j_window: window,
        j_c_window: Frequency::from_flags(per_run.iter().map(|r| r.2)),
        j_c_window_bound: ((window.t2 - window.t1) as f64).powf(-cfg.alpha),
        j_c_all_windows: all_windows.then(|| Frequency::from_flags(per_run.iter().map(|r| r.3.unwrap_or(false)))),
    })
}

/// Per-run quantities behind the state, episode-count and episode-ratio
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateBoundRun {
    pub seed: u64,
    pub max_abs_x: f64,
    pub episodes: usize,
    pub max_episode_ratio: f64,
    /// Noise stayed within `sqrt(log(T / delta))`.
    pub noise_event: bool,
    /// Channel deviation event held on every window of length `>= L`.
    pub deviation_event: bool,
}

pub fn state_bound_runs(cfg: &ExperimentConfig, horizon: u64, n_runs: usize) -> Result<Vec<StateBoundRun>> {
    let truth = cfg.truth();
    let algo = cfg.algo_config_for(horizon)?;
    map_seeds(cfg.seed, n_runs, |seed| {
        let rec = run_ucb_ncs(&truth, &algo, seed)?;
        let noise = noise_event(rec.noise(), horizon, cfg.delta, cfg.sigma_w);
        let deviation = deviation_event_all(
            &delivery_prefix(rec.channel()),
            cfg.p_star,
            cfg.alpha,
            cfg.min_episode_len as usize,
        );
        Ok(StateBoundRun {
            seed,
            max_abs_x: rec.max_abs_x(),
            episodes: rec.episode_count(),
            max_episode_ratio: rec.max_episode_ratio.unwrap_or(1.0),
            noise_event: !noise.literal_violated,
            deviation_event: deviation,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_a_single_value() {
        assert_eq!(quantile(&[4.0], 0.25), 4.0);
        assert_eq!(quantile(&[4.0], 0.75), 4.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5), 3.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [10.0, 100.0, 1000.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.5)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&xs, &[1.0, -1.0, 2.0]), None);
    }

    #[test]
    fn frequency_and_standard_error() {
        let f = Frequency::from_flags([true, false, false, false]);
        assert_eq!(f.count, 1);
        assert_eq!(f.frequency, 0.25);
        assert!((f.std_error - (0.25f64 * 0.75 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sweep_rejects_duplicate_horizons() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(sweep(&cfg, &[100, 100], 1), Err(HarnessError::HorizonOrder(100, 100))));
        assert!(matches!(sweep(&cfg, &[200, 100], 1), Err(HarnessError::HorizonOrder(100, 200))));
    }

    #[test]
    fn single_run_quartiles_collapse() {
        let cfg = ExperimentConfig::default();
        let res = sweep(&cfg, &[300], 1).unwrap();
        let row = &res.rows[0];
        assert_eq!(row.q1_regret, row.median_regret);
        assert_eq!(row.q3_regret, row.median_regret);
        assert_eq!(res.exponent, None);
    }

    #[test]
    fn event_check_needs_enough_runs() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            check_events(&cfg, ControllerTag::Oracle, 99, DeviationWindow::default(), false),
            Err(HarnessError::TooFewRuns { .. })
        ));
    }
}
