use std::path::{Path, PathBuf};

use scalpemd::montage::MontageError;
use scalpemd::relevance::RelevanceError;
use scalpemd::signal::SignalError;
use scalpemd::spdgeom::SpdError;
use scalpemd::stats::StatsError;
use scalpemd::transport::TransportError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("no subjects available: {0}")]
    EmptyCohort(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Spd(#[from] SpdError),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error(transparent)]
    Montage(#[from] MontageError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl std::fmt::Display) -> Self {
        Self::Format {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Usage(_) => "usage",
            Self::Io { .. } => "io",
            Self::Format { .. } => "format",
            Self::EmptyCohort(_) => "empty_cohort",
            Self::Signal(_) => "signal",
            Self::Spd(_) => "spd",
            Self::Relevance(_) => "relevance",
            Self::Montage(_) => "montage",
            Self::Transport(TransportError::MassMismatch { .. }) => "mass_mismatch",
            Self::Transport(_) => "transport",
            Self::Stats(_) => "stats",
        }
    }

    /// `{"error":{"kind":..,"message":..}}`
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Envelope {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
            },
        })
        .expect("plain strings serialize")
    }
}
