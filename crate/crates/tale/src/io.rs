//! Comma-separated and JSON file formats.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tale_core::analysis::{collapse_to_plane, BaseFrame, PlanarPose};

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn data_error(path: &Path, message: impl Into<String>) -> AppError {
    AppError::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>, AppError> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> AppError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => data_error(path, format!("{other:?}")),
    }
}

/// `(displacement_mm, force_N)` pairs from a two-column file with a header.
pub fn read_fixture(path: &Path) -> Result<Vec<(f64, f64)>, AppError> {
    let mut reader = open_csv(path)?;
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<(f64, f64)>().enumerate() {
        let (d, f) = rec.map_err(|e| csv_error(path, e))?;
        if !(d.is_finite() && f.is_finite()) {
            return Err(data_error(path, format!("row {}: non-finite value", i + 2)));
        }
        out.push((d, f));
    }
    if out.is_empty() {
        return Err(data_error(path, "no samples"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct TrialRow {
    pub trial_id: u32,
    pub joint_id: u32,
    pub x_mm: f64,
    pub y_mm: f64,
    pub z_mm: f64,
}

/// Marker positions of one trial, ordered by joint id.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub trial_id: u32,
    pub joints: Vec<(u32, [f64; 3])>,
}

impl Trial {
    pub fn collapse(&self, frame: &BaseFrame) -> Result<PlanarPose, AppError> {
        let pts: Vec<[f64; 3]> = self.joints.iter().map(|j| j.1).collect();
        Ok(collapse_to_plane(&pts, frame)?)
    }
}

/// Trials from rows of `(trial_id, joint_id, x_mm, y_mm, z_mm)`. Every
/// trial must report the same joint ids.
pub fn read_trials(path: &Path) -> Result<Vec<Trial>, AppError> {
    let mut reader = open_csv(path)?;
    let mut by_trial: BTreeMap<u32, BTreeMap<u32, [f64; 3]>> = BTreeMap::new();
    for (i, rec) in reader.deserialize::<TrialRow>().enumerate() {
        let r = rec.map_err(|e| csv_error(path, e))?;
        let p = [r.x_mm, r.y_mm, r.z_mm];
        if p.iter().any(|v| !v.is_finite()) {
            return Err(data_error(path, format!("row {}: non-finite coordinate", i + 2)));
        }
        if by_trial.entry(r.trial_id).or_default().insert(r.joint_id, p).is_some() {
            return Err(data_error(
                path,
                format!("trial {} lists joint {} twice", r.trial_id, r.joint_id),
            ));
        }
    }
    let trials: Vec<Trial> = by_trial
        .into_iter()
        .map(|(trial_id, joints)| Trial {
            trial_id,
            joints: joints.into_iter().collect(),
        })
        .collect();
    let Some(first) = trials.first() else {
        return Err(data_error(path, "no trials"));
    };
    let ids: Vec<u32> = first.joints.iter().map(|j| j.0).collect();
    if let Some(t) = trials
        .iter()
        .find(|t| t.joints.iter().map(|j| j.0).ne(ids.iter().copied()))
    {
        return Err(data_error(
            path,
            format!("trial {} reports different joints than trial {}", t.trial_id, first.trial_id),
        ));
    }
    Ok(trials)
}

pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<(), AppError> {
    let rows = trials.iter().flat_map(|t| {
        t.joints.iter().map(move |&(joint_id, p)| TrialRow {
            trial_id: t.trial_id,
            joint_id,
            x_mm: p[0],
            y_mm: p[1],
            z_mm: p[2],
        })
    });
    write_csv(path, &["trial_id", "joint_id", "x_mm", "y_mm", "z_mm"], rows)
}

/// One moving joint of one sweep case. Positions are the centroid of the
/// bone distal to the joint, in the common plane.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct ResultRow {
    pub case_id: usize,
    pub tail: String,
    /// Pulled tract ids joined with `+`.
    pub tracts: String,
    pub displacement_mm: f64,
    pub joint_id: usize,
    pub rho_mm: f64,
    pub z_mm: f64,
    pub tip_perp_mm: f64,
    pub tip_radial_mm: f64,
}

pub const RESULT_COLUMNS: [&str; 9] = [
    "case_id",
    "tail",
    "tracts",
    "displacement_mm",
    "joint_id",
    "rho_mm",
    "z_mm",
    "tip_perp_mm",
    "tip_radial_mm",
];

/// A case that produced no rows.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct CaseFailure {
    pub case_id: usize,
    pub tail: String,
    pub tracts: String,
    pub displacement_mm: f64,
    pub error_code: String,
    pub message: String,
}

pub const FAILURE_COLUMNS: [&str; 6] = [
    "case_id",
    "tail",
    "tracts",
    "displacement_mm",
    "error_code",
    "message",
];

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

/// Header first, so an empty table still names its columns.
pub fn write_csv_to<W: Write, T: Serialize>(
    out: W,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<(), AppError> {
    let file = create(path)?;
    write_csv_to(file, header, rows).map_err(|e| csv_error(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| AppError::io(path, e.into()))?;
    file.write_all(b"\n")
        .and_then(|_| file.flush())
        .map_err(|e| AppError::io(path, e))
}

pub fn read_results_json(path: &Path) -> Result<Vec<ResultRow>, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| data_error(path, e.to_string()))
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>, AppError> {
    let mut reader = open_csv(path)?;
    reader
        .deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))
}

pub fn write_results(path: &Path, rows: &[ResultRow], format: Format) -> Result<(), AppError> {
    match format {
        Format::Csv => write_csv(path, &RESULT_COLUMNS, rows),
        Format::Json => write_json(path, rows),
    }
}

pub fn write_failures(path: &Path, failures: &[CaseFailure], format: Format) -> Result<(), AppError> {
    match format {
        Format::Csv => write_csv(path, &FAILURE_COLUMNS, failures),
        Format::Json => write_json(path, failures),
    }
}
