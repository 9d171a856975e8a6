//! CSV emission for records and curves.
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces every value bit for bit.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::aggregate::{AggregateCurve, CurvePoint};
use super::runner::MetricsRecord;
use crate::error::{Error, Result};

pub const RECORDS_HEADER: [&str; 6] = ["run", "episode", "train_return", "train_steps", "test_metric", "epsilon"];
pub const CURVE_HEADER: [&str; 4] = ["episode", "mean", "stderr", "n"];

fn to_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::io("<buffer>", e.into_error()))
}

fn write<T: Serialize>(header: &[&str], rows: &[T], path: &Path) -> Result<()> {
    let bytes = to_bytes(header, rows)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn records_csv(records: &[MetricsRecord]) -> Result<Vec<u8>> {
    to_bytes(&RECORDS_HEADER, records)
}

pub fn write_records(records: &[MetricsRecord], path: &Path) -> Result<()> {
    write(&RECORDS_HEADER, records, path)
}

pub fn read_records(path: &Path) -> Result<Vec<MetricsRecord>> {
    read(path)
}

pub fn write_curve(curve: &AggregateCurve, path: &Path) -> Result<()> {
    write(&CURVE_HEADER, &curve.points, path)
}

pub fn read_curve(path: &Path) -> Result<AggregateCurve> {
    Ok(AggregateCurve { points: read::<CurvePoint>(path)? })
}
