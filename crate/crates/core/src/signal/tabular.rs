//! CSV recordings: one column per channel with the channel names as header,
//! one row per sample, plus an optional sidecar table `onset,duration,code`
//! with times in seconds.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Annotation, Recording, SignalError};
use crate::scalar::Real;

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRow {
    onset: f64,
    duration: f64,
    code: String,
}

fn csv_err(e: csv::Error) -> SignalError {
    SignalError::Csv(e.to_string())
}

fn to_samples(seconds: f64, sample_rate: f64, what: &str) -> Result<usize, SignalError> {
    if !seconds.is_finite() || seconds < 0.0 {
        return Err(SignalError::Csv(format!("{what} {seconds} must be a finite non-negative time")));
    }
    Ok((seconds * sample_rate).round() as usize)
}

pub fn read_csv_recording<T: Real>(
    signals: &Path,
    annotations: Option<&Path>,
    sample_rate: f64,
) -> Result<Recording<T>, SignalError> {
    let file = std::fs::File::open(signals).map_err(|e| SignalError::io(signals, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let names: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns: Vec<T> = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        for field in record.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| SignalError::Csv(format!("row {}: cannot parse {field:?}", rows + 1)))?;
            columns.push(T::lit(v));
        }
        rows += 1;
    }
    // rows were read sample-major, which is column-major for channels × samples
    let data = DMatrix::from_vec(names.len(), rows, columns);

    let mut marks = Vec::new();
    if let Some(path) = annotations {
        let file = std::fs::File::open(path).map_err(|e| SignalError::io(path, e))?;
        for row in csv::Reader::from_reader(file).deserialize::<AnnotationRow>() {
            let row = row.map_err(csv_err)?;
            marks.push(Annotation::new(
                to_samples(row.onset, sample_rate, "onset")?,
                to_samples(row.duration, sample_rate, "duration")?,
                row.code,
            ));
        }
    }
    Recording::new(names, sample_rate, data, marks)
}

pub fn write_csv_recording<T: Real>(
    rec: &Recording<T>,
    signals: &Path,
    annotations: Option<&Path>,
) -> Result<(), SignalError> {
    let file = std::fs::File::create(signals).map_err(|e| SignalError::io(signals, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(rec.channel_names()).map_err(csv_err)?;
    for col in rec.data().column_iter() {
        w.write_record(col.iter().map(|v| v.as_f64().to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| SignalError::io(signals, e))?;

    if let Some(path) = annotations {
        let file = std::fs::File::create(path).map_err(|e| SignalError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for a in rec.annotations() {
            w.serialize(AnnotationRow {
                onset: a.onset as f64 / rec.sample_rate(),
                duration: a.duration as f64 / rec.sample_rate(),
                code: a.code.clone(),
            })
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| SignalError::io(path, e))?;
    }
    Ok(())
}
