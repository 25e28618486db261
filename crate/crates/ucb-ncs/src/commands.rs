//! Subcommand bodies; each writes its artifacts and returns their paths or
//! the JSON value it printed.

use std::path::{Path, PathBuf};

use serde::Serialize;
use ucb_ncs_core::bounds::{bound_report, k_max_over_box, BoundReport};
use ucb_ncs_core::jmls::solve_jmls_default;
use ucb_ncs_core::plant::{estimator_trace, ControllerTag, TrajectoryRecord};
use ucb_ncs_core::CandidateTheta;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiments::{check_events, run_controller, sweep, DeviationWindow, EventFrequencies, SweepResult};
use crate::output::{
    ensure_dir, fmt_f64, write_csv_file, write_episode_csv, write_json_file, write_paired_csv, write_trace_csv,
    write_trajectory_csv, RunSummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerChoice {
    Ucb,
    Oracle,
    Both,
}

fn write_run(cfg: &ExperimentConfig, out: &Path, rec: &TrajectoryRecord) -> Result<Vec<PathBuf>> {
    let name = rec.controller.as_str();
    let mut written = vec![
        write_csv_file(&out.join(format!("trajectory_{name}.csv")), |w| write_trajectory_csv(w, rec))?,
        write_json_file(&out.join(format!("summary_{name}.json")), &RunSummary::from(rec))?,
    ];
    if rec.controller == ControllerTag::Ucb {
        let k_max = k_max_over_box(&cfg.parameter_box()?, &cfg.weights())?;
        let trace = estimator_trace(rec, cfg.lambda, cfg.delta, k_max, cfg.gamma_form)?;
        written.push(write_csv_file(&out.join("estimator_ucb.csv"), |w| write_trace_csv(w, &trace))?);
        written.push(write_csv_file(&out.join("episodes_ucb.csv"), |w| write_episode_csv(w, &rec.episodes))?);
    }
    Ok(written)
}

/// Single seeded run of one or both controllers.
pub fn cmd_simulate(cfg: &ExperimentConfig, controller: ControllerChoice, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out)?;
    let mut written = Vec::new();
    let ucb = match controller {
        ControllerChoice::Ucb | ControllerChoice::Both => {
            Some(run_controller(cfg, ControllerTag::Ucb, cfg.horizon, cfg.seed)?)
        }
        ControllerChoice::Oracle => None,
    };
    let oracle = match controller {
        ControllerChoice::Oracle | ControllerChoice::Both => {
            Some(run_controller(cfg, ControllerTag::Oracle, cfg.horizon, cfg.seed)?)
        }
        ControllerChoice::Ucb => None,
    };
    for rec in ucb.iter().chain(oracle.iter()) {
        written.extend(write_run(cfg, out, rec)?);
    }
    if let (Some(u), Some(o)) = (&ucb, &oracle) {
        written.push(write_csv_file(&out.join("paired.csv"), |w| write_paired_csv(w, u, o))?);
    }
    Ok(written)
}

/// Regret scaling study; writes `sweep.csv` and `sweep.json`.
pub fn cmd_sweep(cfg: &ExperimentConfig, horizons: &[u64], n_runs: usize, out: &Path) -> Result<SweepResult> {
    ensure_dir(out)?;
    let res = sweep(cfg, horizons, n_runs)?;
    write_csv_file(&out.join("sweep.csv"), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["T", "n_runs", "median_regret", "q1_regret", "q3_regret", "bound_a_posteriori"])?;
        for r in &res.rows {
            w.write_record([
                r.horizon.to_string(),
                r.n_runs.to_string(),
                fmt_f64(r.median_regret),
                fmt_f64(r.q1_regret),
                fmt_f64(r.q3_regret),
                fmt_f64(r.bound_a_posteriori),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    })?;
    write_json_file(&out.join("sweep.json"), &res)?;
    Ok(res)
}

pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<BoundReport> {
    Ok(bound_report(&cfg.truth(), &cfg.parameter_box()?, &cfg.bound_params(cfg.horizon))?)
}

pub fn cmd_coverage(
    cfg: &ExperimentConfig,
    controller: ControllerTag,
    window: DeviationWindow,
    all_windows: bool,
) -> Result<EventFrequencies> {
    check_events(cfg, controller, cfg.n_runs, window, all_windows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiccatiOutput {
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "P0")]
    pub p0: f64,
    #[serde(rename = "P1")]
    pub p1: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves the coupled Riccati recursion for `theta` with the configured
/// cost weights and noise level.
pub fn cmd_riccati(cfg: &ExperimentConfig, theta: CandidateTheta) -> Result<RiccatiOutput> {
    let sol = solve_jmls_default(&theta, &cfg.weights())?;
    Ok(RiccatiOutput {
        k0: sol.k0,
        k1: sol.k1,
        p0: sol.p0,
        p1: sol.p1,
        j: sol.j,
        converged: sol.converged,
        residual: sol.residual,
        iterations: sol.iterations,
    })
}
