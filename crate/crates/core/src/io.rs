//! CSV artifacts. Every file has a header row; floating-point values are
//! written with 17 significant digits so they round-trip exactly.

use std::fs::File;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bernstein::BernsteinField;
use crate::characteristics::CharacteristicFan;
use crate::experiment::ConvergenceGap;
use crate::kinetic::Trajectory;
use crate::model::{Distribution, SizeGrid};
use crate::stochastic::EnsembleMoments;
use crate::verification::BoundReport;

pub const TRAJECTORY_HEADER: [&str; 9] = ["t", "m0", "m1", "m2", "m3", "m4", "m5", "mass_drift", "top_bin_occupancy"];
pub const SNAPSHOT_HEADER: [&str; 3] = ["t", "s_i", "N_i"];
pub const FIELD_HEADER: [&str; 7] = ["x", "t", "F", "Fx", "Fxx", "G_eps", "residual"];
pub const FAN_HEADER: [&str; 6] = ["start_x", "t", "X", "P", "Z", "terminated_flag"];
pub const ENSEMBLE_HEADER: [&str; 10] = [
    "t",
    "mean_m0",
    "mean_m1",
    "mean_m2",
    "mean_m3",
    "stderr_m0",
    "stderr_m1",
    "stderr_m2",
    "stderr_m3",
    "replicas",
];
pub const REPORT_HEADER: [&str; 5] = ["name", "status", "worst_margin", "t", "x_or_k"];
pub const CONVERGENCE_HEADER: [&str; 5] = ["eps", "gap", "x", "t", "dt"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("missing artifact {0}")]
    Missing(PathBuf),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: csv::Error },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: csv::Error },
    #[error("{path}, line {line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

struct Sink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Sink {
    fn create(path: &Path, header: &[&str]) -> Result<Self, IoError> {
        let writer = csv::Writer::from_path(path).map_err(|source| IoError::Write { path: path.into(), source })?;
        let mut sink = Self { path: path.into(), writer };
        sink.row(header.iter().map(|s| s.to_string()))?;
        Ok(sink)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<(), IoError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer
            .write_record(&fields)
            .map_err(|source| IoError::Write { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<(), IoError> {
        self.writer
            .flush()
            .map_err(|e| IoError::Write { path: self.path.clone(), source: e.into() })
    }
}

fn floats(values: &[f64]) -> impl Iterator<Item = String> + '_ {
    values.iter().map(|v| fmt_f64(*v))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &TRAJECTORY_HEADER)?;
    for i in 0..traj.moments.len() {
        let mut row = vec![traj.moments.times[i]];
        row.extend(traj.moments.moments[i]);
        row.push(traj.moments.mass_drift[i]);
        row.push(traj.top_bin_occupancy[i]);
        sink.row(floats(&row))?;
    }
    sink.finish()
}

pub fn write_snapshots(path: &Path, traj: &Trajectory) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &SNAPSHOT_HEADER)?;
    for (t, dist) in &traj.snapshots {
        for (s, c) in dist.iter() {
            sink.row(floats(&[*t, s, c]))?;
        }
    }
    sink.finish()
}

/// Field samples; `residual` (same shape as the field) may be absent, and
/// `G_eps` is written as `NaN` when the field carries none.
pub fn write_field(path: &Path, field: &BernsteinField, residual: Option<&[Vec<f64>]>) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &FIELD_HEADER)?;
    for (ti, &t) in field.times.iter().enumerate() {
        for (xi, &x) in field.x_grid.iter().enumerate() {
            let g = field.g_eps.as_ref().map_or(f64::NAN, |g| g[ti][xi]);
            let r = residual.map_or(f64::NAN, |r| r[ti][xi]);
            sink.row(floats(&[x, t, field.f[ti][xi], field.fx[ti][xi], field.fxx[ti][xi], g, r]))?;
        }
    }
    sink.finish()
}

pub fn write_fan(path: &Path, fan: &CharacteristicFan) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &FAN_HEADER)?;
    for (i, p) in fan.paths.iter().enumerate() {
        for (j, s) in p.iter().enumerate() {
            let flag = fan.terminated[i] && j + 1 == p.len();
            let mut row: Vec<String> = floats(&[fan.starts[i], fan.times[j], s.x, s.p, s.z]).collect();
            row.push(u8::from(flag).to_string());
            sink.row(row)?;
        }
    }
    sink.finish()
}

pub fn write_ensemble(path: &Path, ens: &EnsembleMoments) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &ENSEMBLE_HEADER)?;
    for (i, &t) in ens.times.iter().enumerate() {
        let mut row = vec![t];
        row.extend(ens.mean[i]);
        row.extend(ens.stderr[i]);
        let mut row: Vec<String> = floats(&row).collect();
        row.push(ens.replicas.to_string());
        sink.row(row)?;
    }
    sink.finish()
}

pub fn write_report(path: &Path, reports: &[BoundReport]) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &REPORT_HEADER)?;
    for r in reports {
        let mut row = vec![r.name.clone(), r.status.to_string()];
        row.extend(floats(&[r.worst_margin, r.t, r.x_or_k]));
        sink.row(row)?;
    }
    sink.finish()
}

pub fn write_convergence(path: &Path, gaps: &[ConvergenceGap]) -> Result<(), IoError> {
    let mut sink = Sink::create(path, &CONVERGENCE_HEADER)?;
    for g in gaps {
        sink.row(floats(&[g.eps, g.gap, g.x, g.t, g.dt]))?;
    }
    sink.finish()
}

/// Numeric rows of a CSV file whose header must equal `header`.
fn read_numeric(path: &Path, header: &[&str]) -> Result<Vec<(u64, Vec<f64>)>, IoError> {
    if !path.is_file() {
        return Err(IoError::Missing(path.into()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|source| IoError::Read { path: path.into(), source })?;
    let found = reader
        .headers()
        .map_err(|source| IoError::Read { path: path.into(), source })?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Parse {
            path: path.into(),
            line: 1,
            msg: format!("expected header {}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Parse {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Parse { path: path.into(), line, msg: e.to_string() })?;
        rows.push((line, values));
    }
    Ok(rows)
}

/// Moment table read back from a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub moments: Vec<[f64; 6]>,
    pub mass_drift: Vec<f64>,
    pub top_bin_occupancy: Vec<f64>,
}

pub fn read_trajectory(path: &Path) -> Result<TrajectoryTable, IoError> {
    let rows = read_numeric(path, &TRAJECTORY_HEADER)?;
    let mut table = TrajectoryTable {
        times: Vec::new(),
        moments: Vec::new(),
        mass_drift: Vec::new(),
        top_bin_occupancy: Vec::new(),
    };
    for (_, r) in rows {
        table.times.push(r[0]);
        table.moments.push([r[1], r[2], r[3], r[4], r[5], r[6]]);
        table.mass_drift.push(r[7]);
        table.top_bin_occupancy.push(r[8]);
    }
    if table.times.is_empty() {
        return Err(IoError::Parse { path: path.into(), line: 1, msg: "no rows".into() });
    }
    Ok(table)
}

/// Snapshots read back onto `grid`; every size must be a grid point.
pub fn read_snapshots(path: &Path, grid: SizeGrid) -> Result<Vec<(f64, Distribution)>, IoError> {
    let rows = read_numeric(path, &SNAPSHOT_HEADER)?;
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for (line, r) in rows {
        let (t, s, c) = (r[0], r[1], r[2]);
        let bad = |msg: String| IoError::Parse { path: path.into(), line, msg };
        let i = grid
            .index_of(s)
            .ok_or_else(|| bad(format!("size {s} is not on the configured grid")))?;
        match out.last_mut() {
            Some((last, counts)) if *last == t => counts[i - 1] = c,
            Some((last, _)) if *last > t => return Err(bad("times out of order".into())),
            _ => {
                let mut counts = vec![0.0; grid.bins()];
                counts[i - 1] = c;
                out.push((t, counts));
            }
        }
    }
    if out.is_empty() {
        return Err(IoError::Parse { path: path.into(), line: 1, msg: "no rows".into() });
    }
    out.into_iter()
        .map(|(t, counts)| {
            Distribution::new(grid, counts)
                .map(|d| (t, d))
                .map_err(|e| IoError::Parse { path: path.into(), line: 0, msg: e.to_string() })
        })
        .collect()
}
