//! File formats: baseline CSV, schedule and report CSVs, JSON documents.
//!
//! Floats are written in Rust's shortest round-trip form, so a value read
//! back is bit-identical to the one written.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bidding::BidSchedule;
use crate::error::CoreError;
use crate::evaluation::DayOutcome;
use crate::fleet::{BaselineSeries, DayKind};
use crate::tuner::GridSearchResult;
use crate::MINUTES_PER_DAY;

/// Guards the import buffer against absurd day indices.
const MAX_DAYS: usize = 100_000;

/// Runs `f` and attaches `path` to any error it returns.
fn in_file<T>(path: &Path, f: impl FnOnce() -> Result<T, CoreError>) -> Result<T, CoreError> {
    f().map_err(|e| match e {
        e @ CoreError::File { .. } => e,
        e => CoreError::File { path: path.to_path_buf(), source: Box::new(e) },
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CoreError> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CoreError> {
    in_file(path, || {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CoreError> {
    in_file(path, || Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?))
}

#[derive(Debug, Serialize, Deserialize)]
struct BaselineRow {
    day: usize,
    minute: usize,
    kw: f64,
}

/// One row per `(day, minute)`, both 0-based.
pub fn write_baseline_csv(path: &Path, series: &BaselineSeries) -> Result<(), CoreError> {
    in_file(path, || {
        let mut w = csv::Writer::from_writer(create(path)?);
        for (day, values) in series.days().enumerate() {
            for (minute, &kw) in values.iter().enumerate() {
                w.serialize(BaselineRow { day, minute, kw })?;
            }
        }
        w.flush()?;
        Ok(())
    })
}

/// Reads a baseline CSV. Rows may come in any order but every
/// `(day, minute)` of a contiguous `0..n_days` range must appear exactly
/// once. Day labels are not stored in the CSV; `label` supplies them.
pub fn read_baseline_csv(path: &Path, label: impl Fn(usize) -> DayKind) -> Result<BaselineSeries, CoreError> {
    in_file(path, || {
        let mut r = csv::Reader::from_path(path)?;
        let mut cells: Vec<Option<f64>> = Vec::new();
        for row in r.deserialize() {
            let row: BaselineRow = row?;
            if row.minute >= MINUTES_PER_DAY || row.day >= MAX_DAYS {
                return Err(CoreError::Shape(format!("day {} minute {} out of range", row.day, row.minute)));
            }
            let k = row.day * MINUTES_PER_DAY + row.minute;
            if k >= cells.len() {
                cells.resize(k + 1, None);
            }
            if cells[k].replace(row.kw).is_some() {
                return Err(CoreError::Shape(format!("duplicate row for day {} minute {}", row.day, row.minute)));
            }
        }
        if cells.is_empty() || !cells.len().is_multiple_of(MINUTES_PER_DAY) || cells.iter().any(Option::is_none) {
            return Err(CoreError::Shape("baseline CSV does not cover whole days 0..n with every minute".into()));
        }
        let values: Vec<f64> = cells.into_iter().map(|c| c.unwrap_or_default()).collect();
        let days: Vec<Vec<f64>> = values.chunks_exact(MINUTES_PER_DAY).map(<[f64]>::to_vec).collect();
        let labels = (0..days.len()).map(label).collect();
        BaselineSeries::from_days(days, labels)
    })
}

/// Path of the JSON document stored next to a data file:
/// `run/baseline.csv` -> `run/baseline.config.json`.
pub fn sidecar_path(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}.config.json"))
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CoreError> {
    in_file(path, || {
        let mut w = csv::Writer::from_writer(create(path)?);
        for row in rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct BidRow {
    hour: usize,
    bid_kw: f64,
}

pub fn write_schedule_csv(path: &Path, schedule: &BidSchedule) -> Result<(), CoreError> {
    write_rows(path, schedule.bids.iter().enumerate().map(|(hour, &bid_kw)| BidRow { hour, bid_kw }))
}

pub fn write_day_outcomes_csv(path: &Path, outcomes: &[DayOutcome]) -> Result<(), CoreError> {
    write_rows(path, outcomes)
}

#[derive(Serialize)]
struct SurfaceRow {
    epsilon: f64,
    theta: f64,
    objective_kw: f64,
    total_capacity_kw: f64,
    mean_penalty_kw: f64,
    status: &'static str,
}

/// Heat-map rows in grid order. Infeasible cells carry `-inf` objective and
/// `NaN` capacity and penalty.
pub fn write_surface_csv(path: &Path, result: &GridSearchResult) -> Result<(), CoreError> {
    write_rows(
        path,
        result.cells.iter().map(|c| SurfaceRow {
            epsilon: c.epsilon,
            theta: c.theta,
            objective_kw: c.objective,
            total_capacity_kw: c.total_capacity,
            mean_penalty_kw: c.mean_penalty,
            status: c.status.as_str(),
        }),
    )
}
