//! Plain-text epoch cache, one directory per subject:
//!
//! - `cache.json`: format version, subject, sample rate, channel names,
//!   epoch length and count, truncated-trial count
//! - `index.csv`: `epoch,run,trial,slice,label`
//! - `epochs.csv`: `epoch,channel,<sample 0>,...` with one row per epoch and
//!   channel; values use the shortest decimal that round-trips.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Epoch, Label, SignalError};
use crate::scalar::Real;

const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochCache<T: Real> {
    pub subject: u32,
    pub sample_rate: f64,
    pub channel_names: Vec<String>,
    pub epochs: Vec<Epoch<T>>,
    pub truncated_trials: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    subject: u32,
    sample_rate: f64,
    channels: Vec<String>,
    epoch_len: usize,
    n_epochs: usize,
    truncated_trials: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    epoch: usize,
    run: u32,
    trial: usize,
    slice: usize,
    label: Label,
}

fn cache_err(e: impl std::fmt::Display) -> SignalError {
    SignalError::Cache(e.to_string())
}

pub fn write_epoch_cache<T: Real>(dir: &Path, cache: &EpochCache<T>) -> Result<(), SignalError> {
    std::fs::create_dir_all(dir).map_err(|e| SignalError::io(dir, e))?;
    let epoch_len = cache.epochs.first().map_or(0, |e| e.data.ncols());
    if let Some(e) = cache
        .epochs
        .iter()
        .find(|e| e.data.shape() != (cache.channel_names.len(), epoch_len))
    {
        return Err(SignalError::Cache(format!(
            "epoch shape {:?} differs from {} channels × {epoch_len}",
            e.data.shape(),
            cache.channel_names.len()
        )));
    }
    let manifest = Manifest {
        version: CACHE_VERSION,
        subject: cache.subject,
        sample_rate: cache.sample_rate,
        channels: cache.channel_names.clone(),
        epoch_len,
        n_epochs: cache.epochs.len(),
        truncated_trials: cache.truncated_trials,
    };
    let path = dir.join("cache.json");
    let mut json = serde_json::to_string_pretty(&manifest).map_err(cache_err)?;
    json.push('\n');
    std::fs::write(&path, json).map_err(|e| SignalError::io(&path, e))?;

    let path = dir.join("index.csv");
    let mut w = csv::Writer::from_path(&path).map_err(cache_err)?;
    for (i, e) in cache.epochs.iter().enumerate() {
        w.serialize(IndexRow {
            epoch: i,
            run: e.run,
            trial: e.trial,
            slice: e.slice,
            label: e.label,
        })
        .map_err(cache_err)?;
    }
    w.flush().map_err(|e| SignalError::io(&path, e))?;

    let path = dir.join("epochs.csv");
    let file = std::fs::File::create(&path).map_err(|e| SignalError::io(&path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| SignalError::io(&path, e);
    write!(out, "epoch,channel").map_err(io)?;
    for k in 0..epoch_len {
        write!(out, ",{k}").map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    for (i, e) in cache.epochs.iter().enumerate() {
        for c in 0..e.data.nrows() {
            write!(out, "{i},{c}").map_err(io)?;
            for v in e.data.row(c).iter() {
                write!(out, ",{}", v.as_f64()).map_err(io)?;
            }
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn read_epoch_cache<T: Real>(dir: &Path) -> Result<EpochCache<T>, SignalError> {
    let path = dir.join("cache.json");
    let text = std::fs::read_to_string(&path).map_err(|e| SignalError::io(&path, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(cache_err)?;
    if m.version != CACHE_VERSION {
        return Err(SignalError::Cache(format!("unsupported version {}", m.version)));
    }

    let path = dir.join("index.csv");
    let index: Vec<IndexRow> = csv::Reader::from_path(&path)
        .map_err(cache_err)?
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(cache_err)?;
    if index.len() != m.n_epochs || index.iter().enumerate().any(|(i, r)| r.epoch != i) {
        return Err(SignalError::Cache("index does not list epochs 0..n in order".into()));
    }

    let channels = m.channels.len();
    let mut data = vec![DMatrix::<T>::zeros(channels, m.epoch_len); m.n_epochs];
    let mut seen = vec![false; m.n_epochs * channels];
    let path = dir.join("epochs.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(cache_err)?;
    for record in reader.records() {
        let record = record.map_err(cache_err)?;
        let mut fields = record.iter();
        let mut next_index = |what: &str, limit: usize| -> Result<usize, SignalError> {
            fields
                .next()
                .and_then(|f| f.parse::<usize>().ok())
                .filter(|&v| v < limit)
                .ok_or_else(|| SignalError::Cache(format!("bad {what} column")))
        };
        let e = next_index("epoch", m.n_epochs)?;
        let c = next_index("channel", channels)?;
        if std::mem::replace(&mut seen[e * channels + c], true) {
            return Err(SignalError::Cache(format!("epoch {e} channel {c} repeated")));
        }
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>().map_err(cache_err))
            .collect::<Result<_, _>>()?;
        if values.len() != m.epoch_len {
            return Err(SignalError::Cache(format!("epoch {e} channel {c}: {} samples", values.len())));
        }
        for (k, v) in values.into_iter().enumerate() {
            data[e][(c, k)] = T::lit(v);
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(SignalError::Cache("missing epoch rows".into()));
    }

    let epochs = index
        .into_iter()
        .zip(data)
        .map(|(r, data)| Epoch {
            data,
            label: r.label,
            subject: m.subject,
            run: r.run,
            trial: r.trial,
            slice: r.slice,
        })
        .collect();
    Ok(EpochCache {
        subject: m.subject,
        sample_rate: m.sample_rate,
        channel_names: m.channels,
        epochs,
        truncated_trials: m.truncated_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EpochCache<f64> {
        let epochs = (0..6)
            .map(|i| Epoch {
                data: DMatrix::from_fn(2, 5, |c, k| (i * 10 + c) as f64 + k as f64 / 3.0),
                label: Label::ALL[i % 2],
                subject: 7,
                run: 3 + (i / 4) as u32,
                trial: i / 4,
                slice: i % 4,
            })
            .collect();
        EpochCache {
            subject: 7,
            sample_rate: 160.0,
            channel_names: vec!["C3".into(), "C4".into()],
            epochs,
            truncated_trials: 1,
        }
    }

    #[test]
    fn round_trip_is_exact_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let cache = sample();
        write_epoch_cache(dir.path(), &cache).unwrap();
        let first = std::fs::read(dir.path().join("epochs.csv")).unwrap();
        assert_eq!(read_epoch_cache::<f64>(dir.path()).unwrap(), cache);
        write_epoch_cache(dir.path(), &cache).unwrap();
        assert_eq!(std::fs::read(dir.path().join("epochs.csv")).unwrap(), first);
    }

    #[test]
    fn missing_rows_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_epoch_cache(dir.path(), &sample()).unwrap();
        let path = dir.path().join("epochs.csv");
        let text = std::fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
        std::fs::write(&path, kept.join("\n") + "\n").unwrap();
        assert!(matches!(read_epoch_cache::<f64>(dir.path()), Err(SignalError::Cache(_))));
    }
}
