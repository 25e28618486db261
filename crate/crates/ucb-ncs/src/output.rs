//! CSV series and JSON reports.
//!
//! Floats in CSV are written with 17 significant digits in scientific
//! notation (`{:.16e}`), which round-trips every `f64` and does not depend on
//! locale.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use ucb_ncs_core::plant::{EpisodeLog, TraceRow, TrajectoryRecord};

use crate::error::{HarnessError, Result};

pub const TRAJECTORY_HEADER: [&str; 8] = ["t", "x", "u", "ell", "w", "cost", "cum_cost", "regret"];
pub const TRACE_HEADER: [&str; 9] = ["t", "A_hat", "B_hat", "p_hat", "beta1", "beta2", "beta3", "V1", "V2"];
pub const EPISODE_HEADER: [&str; 6] = ["episode_index", "tau", "A", "B", "p", "J_selected"];
pub const PAIRED_HEADER: [&str; 4] = ["t", "regret_ucb", "regret_oracle", "regret_diff"];

#[inline]
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        })
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_trajectory_csv<W: Write>(out: W, record: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    let mut cum = 0.0;
    for (step, regret) in record.steps.iter().zip(&record.regret) {
        cum += step.cost;
        w.write_record([
            step.t.to_string(),
            fmt_f64(step.x),
            fmt_f64(step.u),
            u8::from(step.ell).to_string(),
            fmt_f64(step.w),
            fmt_f64(step.cost),
            fmt_f64(cum),
            fmt_f64(*regret),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in trace {
        w.write_record([
            row.t.to_string(),
            fmt_f64(row.estimate.a),
            fmt_f64(row.estimate.b),
            fmt_f64(row.estimate.p),
            fmt_f64(row.cset.a_radius),
            fmt_f64(row.cset.b_radius),
            fmt_f64(row.cset.p_radius),
            fmt_f64(row.v1),
            fmt_f64(row.v2),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_episode_csv<W: Write>(out: W, episodes: &[EpisodeLog]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPISODE_HEADER)?;
    for ep in episodes {
        w.write_record([
            ep.index.to_string(),
            ep.tau.to_string(),
            fmt_f64(ep.theta.a),
            fmt_f64(ep.theta.b),
            fmt_f64(ep.theta.p),
            fmt_f64(ep.j),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Per-slot regret of two controllers run on common random numbers.
pub fn write_paired_csv<W: Write>(out: W, ucb: &TrajectoryRecord, oracle: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PAIRED_HEADER)?;
    for ((s, ru), ro) in ucb.steps.iter().zip(&ucb.regret).zip(&oracle.regret) {
        w.write_record([s.t.to_string(), fmt_f64(*ru), fmt_f64(*ro), fmt_f64(ru - ro)])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_csv_file(path: &Path, f: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    f(create(path)?)?;
    Ok(path.to_path_buf())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(path.to_path_buf())
}

/// Per-run summary written next to each trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub controller: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub final_regret: f64,
    pub max_abs_x: f64,
    pub episodes: usize,
}

impl From<&TrajectoryRecord> for RunSummary {
    fn from(r: &TrajectoryRecord) -> Self {
        Self {
            seed: r.seed,
            controller: r.controller.as_str().to_string(),
            horizon: r.horizon(),
            final_regret: r.final_regret(),
            max_abs_x: r.max_abs_x(),
            episodes: r.episode_count(),
        }
    }
}
