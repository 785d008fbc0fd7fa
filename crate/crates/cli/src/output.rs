//! File writers: CSV tables with `#` metadata lines, gnuplot data blocks, JSON
//! summaries and the run manifest.
//!
//! Everything is rendered to memory first; [`write_all`] then puts the files in
//! place and removes any it already wrote if a later one fails.

use std::fs;
use std::path::{Path, PathBuf};

use chirpdnp::propagator::{Observable, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;

pub const TRAJECTORY_COLUMNS: [&str; 11] = ["t_us", "Sz", "Iz", "Sx", "Sy", "DQx", "DQy", "DQz", "ZQx", "ZQy", "ZQz"];

/// One rendered output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Shortest representation that parses back to the same bits; `nan` for gaps.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:?}")
    }
}

fn metadata(header: &[(String, String)]) -> String {
    let mut s = format!("# chirpdnp {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in header {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

fn rows<const N: usize>(traj: &Trajectory<N>) -> impl Iterator<Item = Vec<String>> + '_ {
    let columns: Vec<Option<&[f64]>> = Observable::ALL.iter().map(|&o| traj.get(o)).collect();
    traj.times.iter().enumerate().map(move |(i, &t)| {
        std::iter::once(fmt_f64(t))
            .chain(columns.iter().map(|c| fmt_f64(c.map_or(f64::NAN, |v| v[i]))))
            .collect()
    })
}

pub fn csv_table<I, R>(header: &[(String, String)], columns: &[&str], records: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = metadata(header).into_bytes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for r in records {
        w.write_record(r.into_iter().collect::<Vec<_>>()).expect("in-memory write");
    }
    out.extend(w.into_inner().expect("in-memory flush"));
    out
}

pub fn trajectory_csv<const N: usize>(header: &[(String, String)], traj: &Trajectory<N>) -> Vec<u8> {
    csv_table(header, &TRAJECTORY_COLUMNS, rows(traj))
}

/// Whitespace-delimited block for gnuplot: metadata, a `#` column line, data.
pub fn trajectory_gnuplot<const N: usize>(header: &[(String, String)], traj: &Trajectory<N>) -> Vec<u8> {
    debug_assert!(!traj.is_empty(), "empty trajectories are rejected by the drivers");
    let mut s = metadata(header);
    s.push_str("# ");
    s.push_str(&TRAJECTORY_COLUMNS.join(" "));
    s.push('\n');
    for r in rows(traj) {
        s.push_str(&r.join(" "));
        s.push('\n');
    }
    s.into_bytes()
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("summary serializes");
    v.push(b'\n');
    v
}

/// Write every artifact into `dir`. On the first failure the files already
/// written are removed and the error is returned.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        if let Err(e) = fs::write(&path, &a.contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    ValidationError,
    ConvergenceFailure,
    Error,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::ValidationError | RunStatus::Error => 1,
            RunStatus::ConvergenceFailure => 2,
        }
    }
}

/// Written for every run, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub config_path: String,
    pub status: RunStatus,
    pub exit_code: i32,
    /// Configuration after command-line overrides.
    pub config: Option<serde_json::Value>,
    pub dt_used: Option<f64>,
    pub halvings: Option<u32>,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(experiment: ExperimentKind, config_path: &Path) -> Self {
        Self {
            software: "chirpdnp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment,
            config_path: config_path.display().to_string(),
            status: RunStatus::Ok,
            exit_code: 0,
            config: None,
            dt_used: None,
            halvings: None,
            wall_time_s: 0.0,
            warnings: Vec::new(),
            error: None,
            outputs: Vec::new(),
        }
    }

    pub fn fail(&mut self, status: RunStatus, message: String) {
        self.status = status;
        self.exit_code = status.exit_code();
        self.error = Some(message);
        self.outputs.clear();
    }
}
