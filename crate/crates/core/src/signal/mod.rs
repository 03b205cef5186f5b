//! EEG ingestion and preprocessing.
//!
//! Recordings come from EDF/EDF+ files ([`read_edf`]) or CSV with a sidecar
//! annotation table ([`read_csv_recording`]). [`bandpass`] applies a
//! zero-phase Butterworth band-pass, [`epoch_trials`] cuts labeled trials
//! into fixed-length epochs and [`split`] draws a seeded stratified
//! train/test partition.

mod cache;
mod edf;
mod epoch;
mod filter;
mod tabular;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use cache::{read_epoch_cache, write_epoch_cache, EpochCache};
pub use edf::{encode_edf, parse_edf, read_edf, write_edf, EDF_ANNOTATIONS_LABEL};
pub use epoch::{epoch_trials, split, EpochOptions, Epoching, Split, SplitSpec};
pub use filter::{bandpass, filtfilt, Butterworth, Sos, BUTTERWORTH_ORDER};
pub use tabular::{read_csv_recording, write_csv_recording};

/// PhysioNet EEG Motor Movement/Imagery runs with left/right fist trials:
/// executed (3, 7, 11) and imagined (4, 8, 12).
pub const DEFAULT_RUNS: [u32; 6] = [3, 4, 7, 8, 11, 12];

/// Pass band used throughout, in Hz.
pub const DEFAULT_BAND: (f64, f64) = (8.0, 30.0);

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed EDF header: {0}")]
    Header(String),
    #[error("EDF data truncated: expected {expected} bytes of records, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported EDF layout: {0}")]
    Unsupported(String),
    #[error("cannot decode annotation: {0}")]
    Annotation(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("recording has no channels")]
    NoChannels,
    #[error("{names} channel names for {rows} data rows")]
    ChannelCount { names: usize, rows: usize },
    #[error("sample rate must be positive and finite, got {0}")]
    SampleRate(f64),
    #[error("annotation onset {onset} beyond {samples} samples")]
    AnnotationOutOfBounds { onset: usize, samples: usize },
    #[error("non-finite sample value")]
    NonFinite,
    #[error("band edges must satisfy 0 < lo < hi < {nyquist} Hz, got ({lo}, {hi})")]
    Band { lo: f64, hi: f64, nyquist: f64 },
    #[error("signal of {len} samples is too short for {needed}-sample edge padding")]
    TooShort { len: usize, needed: usize },
    #[error("test fraction must lie in (0, 1), got {0}")]
    TestFraction(f64),
    #[error("class {label} has {count} epochs; at least 2 required")]
    TooFewEpochs { label: Label, count: usize },
    #[error("need epochs from both classes")]
    MissingClass,
    #[error("cannot place {test} of {total} epochs in the test set with every class on both sides")]
    SplitSize { test: usize, total: usize },
    #[error("invalid epoch cache: {0}")]
    Cache(String),
}

impl SignalError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Marker on a recording, in samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub onset: usize,
    pub duration: usize,
    pub code: String,
}

impl Annotation {
    pub fn new(onset: usize, duration: usize, code: impl Into<String>) -> Self {
        Self {
            onset,
            duration,
            code: code.into(),
        }
    }
}

/// Multichannel recording: one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording<T: Real> {
    channel_names: Vec<String>,
    sample_rate: f64,
    data: DMatrix<T>,
    annotations: Vec<Annotation>,
}

impl<T: Real> Recording<T> {
    /// Annotation onsets must lie within the data; durations may overrun.
    pub fn new(
        channel_names: Vec<String>,
        sample_rate: f64,
        data: DMatrix<T>,
        annotations: Vec<Annotation>,
    ) -> Result<Self, SignalError> {
        if channel_names.is_empty() {
            return Err(SignalError::NoChannels);
        }
        if channel_names.len() != data.nrows() {
            return Err(SignalError::ChannelCount {
                names: channel_names.len(),
                rows: data.nrows(),
            });
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::SampleRate(sample_rate));
        }
        if data.iter().any(|v| !v.is_finite_value()) {
            return Err(SignalError::NonFinite);
        }
        let samples = data.ncols();
        if let Some(a) = annotations.iter().find(|a| a.onset > samples) {
            return Err(SignalError::AnnotationOutOfBounds {
                onset: a.onset,
                samples,
            });
        }
        Ok(Self {
            channel_names,
            sample_rate,
            data,
            annotations,
        })
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn data(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Same metadata with replaced samples of identical shape.
    pub(crate) fn with_data(&self, data: DMatrix<T>) -> Self {
        debug_assert_eq!(data.shape(), self.data.shape());
        Self {
            channel_names: self.channel_names.clone(),
            sample_rate: self.sample_rate,
            data,
            annotations: self.annotations.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Left,
    Right,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Left, Label::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Left => "left",
            Label::Right => "right",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Label::Left),
            "right" => Ok(Label::Right),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Fixed-length labeled slice of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch<T: Real> {
    /// channels × samples
    pub data: DMatrix<T>,
    pub label: Label,
    pub subject: u32,
    pub run: u32,
    /// Index of the trial among labeled trials of the run.
    pub trial: usize,
    /// Position of the slice within its trial.
    pub slice: usize,
}

/// `<root>/S007/S007R03.edf`, the PhysioNet directory layout.
pub fn physionet_path(root: &Path, subject: u32, run: u32) -> PathBuf {
    root.join(format!("S{subject:03}"))
        .join(format!("S{subject:03}R{run:02}.edf"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recording_validation() {
        let data = DMatrix::<f64>::zeros(2, 10);
        let names = vec!["a".to_string(), "b".to_string()];
        assert!(Recording::new(names.clone(), 160.0, data.clone(), vec![]).is_ok());
        assert!(matches!(
            Recording::new(vec![], 160.0, DMatrix::<f64>::zeros(0, 10), vec![]),
            Err(SignalError::NoChannels)
        ));
        assert!(matches!(
            Recording::new(names[..1].to_vec(), 160.0, data.clone(), vec![]),
            Err(SignalError::ChannelCount { names: 1, rows: 2 })
        ));
        assert!(matches!(
            Recording::new(names.clone(), 0.0, data.clone(), vec![]),
            Err(SignalError::SampleRate(_))
        ));
        assert!(matches!(
            Recording::new(names, 160.0, data, vec![Annotation::new(11, 1, "T1")]),
            Err(SignalError::AnnotationOutOfBounds { onset: 11, samples: 10 })
        ));
    }

    #[test]
    fn physionet_layout() {
        assert_eq!(
            physionet_path(Path::new("/d"), 7, 3),
            PathBuf::from("/d/S007/S007R03.edf")
        );
    }

    #[test]
    fn label_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
        assert!("up".parse::<Label>().is_err());
    }
}
