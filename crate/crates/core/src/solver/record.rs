//! Trajectory snapshots, run results and their on-disk formats.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use crate::estimator::TrackingError;
use crate::stream::StreamKey;
use crate::{Error, Result, Vector};

pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: u64,
    pub x: Vector,
    pub phi_exact: Option<f64>,
    pub f_exact: Option<f64>,
    pub max_violation: Option<f64>,
    /// Exact h_k(x_t); empty without exact evaluators.
    pub constraints: Vec<f64>,
    pub g1_norm: Option<f64>,
    pub g2_norm: Option<f64>,
    pub tracker_constraints: Option<TrackingError>,
    pub tracker_inner: Option<TrackingError>,
    pub eta_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The iterate left the finite region; `iteration` is the step that
    /// produced it.
    Diverged {
        iteration: u64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputIterate {
    pub t: u64,
    pub x: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub status: RunStatus,
    /// "I" or "II".
    pub setting: String,
    pub instance: String,
    pub instance_hash: Option<String>,
    pub config: SolverConfig,
    pub iterations_run: u64,
    pub output: OutputIterate,
    pub final_point: Vector,
    pub gamma_prime_constraints: f64,
    pub gamma_prime_inner: Option<f64>,
    /// Set when a γ′ override differs from the closed form.
    pub gamma_prime_overridden: bool,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryRecord>,
    /// Every stream key consumed, in order, when `record_draws` is set.
    #[serde(skip)]
    pub draws: Vec<StreamKey>,
}

impl RunResult {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_metadata_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.schema_version != RUN_SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported run schema_version {}", r.schema_version),
            ));
        }
        Ok(r)
    }

    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trajectory_csv(&self.trajectory, &self.config, out)
    }
}

const FIXED: [&str; 13] = [
    "t",
    "phi_exact",
    "f_exact",
    "max_violation",
    "g1_norm",
    "g2_norm",
    "tracker_mean_abs_constraints",
    "tracker_mean_abs_inner",
    "eta_t",
    "tracker_mean_sq_constraints",
    "tracker_mean_sq_inner",
    "gamma_constraints",
    "gamma_inner",
];

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Columns: the fixed set above, then `x_j` for each coordinate and `h_k`
/// for each constraint.
pub fn write_trajectory_csv<W: Write>(records: &[TrajectoryRecord], config: &SolverConfig, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = records.first().map_or(0, |r| r.x.len());
    let m = records.iter().map(|r| r.constraints.len()).max().unwrap_or(0);
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend((0..dim).map(|j| format!("x_{j}")));
    header.extend((0..m).map(|k| format!("h_{k}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.t.to_string(),
            cell(r.phi_exact),
            cell(r.f_exact),
            cell(r.max_violation),
            cell(r.g1_norm),
            cell(r.g2_norm),
            cell(r.tracker_constraints.map(|e| e.mean_abs)),
            cell(r.tracker_inner.map(|e| e.mean_abs)),
            r.eta_t.to_string(),
            cell(r.tracker_constraints.map(|e| e.mean_sq)),
            cell(r.tracker_inner.map(|e| e.mean_sq)),
            config.gamma_constraints.to_string(),
            cell(r.tracker_inner.map(|_| config.gamma_inner)),
        ];
        row.extend(r.x.iter().map(|v| v.to_string()));
        row.extend((0..m).map(|k| cell(r.constraints.get(k).copied())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse(field: &str, column: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| {
        Error::invalid(
            "trajectory",
            format!("line {line}: column `{column}` is not a number: {field:?}"),
        )
    })
}

/// Reads a trajectory written by [`write_trajectory_csv`].
pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let Some(t_col) = col("t") else {
        return Err(Error::invalid("trajectory", "missing column `t`"));
    };
    let xs: Vec<usize> = (0..).map_while(|j| col(&format!("x_{j}"))).collect();
    let hs: Vec<usize> = (0..).map_while(|k| col(&format!("h_{k}"))).collect();
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let get = |name: &str| -> Result<Option<f64>> {
            match col(name) {
                Some(c) => parse(row.get(c).unwrap_or(""), name, line),
                None => Ok(None),
            }
        };
        let t = row
            .get(t_col)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::invalid("trajectory", format!("line {line}: bad `t`")))?;
        let mut x = Vector::zeros(xs.len());
        for (j, &c) in xs.iter().enumerate() {
            x[j] = parse(row.get(c).unwrap_or(""), "x", line)?
                .ok_or_else(|| Error::invalid("trajectory", format!("line {line}: empty x_{j}")))?;
        }
        let mut constraints = Vec::new();
        for &c in &hs {
            if let Some(v) = parse(row.get(c).unwrap_or(""), "h", line)? {
                constraints.push(v);
            }
        }
        let tracker =
            |a: Option<f64>, s: Option<f64>| a.zip(s).map(|(mean_abs, mean_sq)| TrackingError { mean_abs, mean_sq });
        out.push(TrajectoryRecord {
            t,
            x,
            phi_exact: get("phi_exact")?,
            f_exact: get("f_exact")?,
            max_violation: get("max_violation")?,
            constraints,
            g1_norm: get("g1_norm")?,
            g2_norm: get("g2_norm")?,
            tracker_constraints: tracker(
                get("tracker_mean_abs_constraints")?,
                get("tracker_mean_sq_constraints")?,
            ),
            tracker_inner: tracker(get("tracker_mean_abs_inner")?, get("tracker_mean_sq_inner")?),
            eta_t: get("eta_t")?.unwrap_or(0.0),
        });
    }
    if out.is_empty() {
        return Err(Error::invalid("trajectory", "no rows"));
    }
    Ok(out)
}
