//! Channel-relevance scores, top-k channel sets, cohort selection counts and
//! the motor-imagery baseline map.
//!
//! Scores come from a backward-elimination trace or from an external JSON
//! export:
//!
//! ```json
//! { "subject": "S007", "model": "eegnet",
//!   "channels": ["C3", "C4"], "pooled": [0.9, 0.4],
//!   "per_class": { "left": [0.2, 0.8], "right": [0.7, 0.1] } }
//! ```
//!
//! Arrays align with `channels`; `per_class` is optional.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::montage::{binary_map, weighted_map, GridLayout, MontageError, SpatialMap};
use crate::scalar::Real;
use crate::spdgeom::SelectionTrace;

/// FC, C and CP rows of the 64-channel montage, 7 electrodes each.
pub const MI_BASELINE_CHANNELS: [&str; 21] = [
    "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "CP5", "CP3", "CP1",
    "CPz", "CP2", "CP4", "CP6",
];

#[derive(Debug, Error)]
pub enum RelevanceError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("channel {0:?} listed more than once")]
    DuplicateChannel(String),
    #[error("{field} has {found} entries for {expected} channels")]
    Length {
        field: String,
        found: usize,
        expected: usize,
    },
    #[error("non-finite score for channel {0:?}")]
    NonFinite(String),
    #[error("k = {k} outside 1..={available}")]
    KOutOfRange { k: usize, available: usize },
    #[error("per-class union requested but scores have no per-class maps")]
    NoPerClass,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Montage(#[from] MontageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelevanceSource {
    Riemannian,
    External,
}

/// Relevance per montage channel. Channels missing from the source are
/// absent, not zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceScores {
    source: RelevanceSource,
    subject: String,
    model: String,
    /// (montage index, canonical name), ascending by index
    channels: Vec<(usize, String)>,
    pooled: Vec<f64>,
    per_class: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelevanceDocument {
    pub subject: String,
    pub model: String,
    pub channels: Vec<String>,
    pub pooled: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class: Option<BTreeMap<String, Vec<f64>>>,
}

impl RelevanceScores {
    pub fn new<S: AsRef<str>>(
        source: RelevanceSource,
        subject: impl Into<String>,
        model: impl Into<String>,
        layout: &GridLayout,
        channels: &[S],
        pooled: Vec<f64>,
        per_class: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, RelevanceError> {
        let expected = channels.len();
        let check_len = |field: &str, v: &[f64]| {
            if v.len() == expected {
                Ok(())
            } else {
                Err(RelevanceError::Length {
                    field: field.to_string(),
                    found: v.len(),
                    expected,
                })
            }
        };
        check_len("pooled", &pooled)?;
        for (class, v) in &per_class {
            check_len(&format!("per_class.{class}"), v)?;
        }

        let mut order = Vec::with_capacity(expected);
        let mut seen = BTreeSet::new();
        for (pos, name) in channels.iter().enumerate() {
            let name = name.as_ref();
            let idx = layout
                .index_of(name)
                .ok_or_else(|| RelevanceError::UnknownChannel(name.to_string()))?;
            if !seen.insert(idx) {
                return Err(RelevanceError::DuplicateChannel(name.to_string()));
            }
            let values = std::iter::once(pooled[pos]).chain(per_class.values().map(|v| v[pos]));
            if values.into_iter().any(|s| !s.is_finite()) {
                return Err(RelevanceError::NonFinite(name.to_string()));
            }
            order.push((idx, pos));
        }
        order.sort_unstable();

        let pick = |v: &[f64]| order.iter().map(|&(_, p)| v[p]).collect::<Vec<f64>>();
        Ok(Self {
            source,
            subject: subject.into(),
            model: model.into(),
            channels: order
                .iter()
                .map(|&(i, _)| (i, layout.electrodes()[i].name.clone()))
                .collect(),
            pooled: pick(&pooled),
            per_class: per_class.iter().map(|(c, v)| (c.clone(), pick(v))).collect(),
        })
    }

    /// Scores derived from an elimination trace over `channel_names`
    /// (the montage channels the covariances were built on, in order).
    pub fn from_selection<S: AsRef<str>>(
        trace: &SelectionTrace,
        channel_names: &[S],
        layout: &GridLayout,
        subject: impl Into<String>,
    ) -> Result<Self, RelevanceError> {
        let scores = trace.scores();
        if scores.len() != channel_names.len() {
            return Err(RelevanceError::Length {
                field: "channel_names".into(),
                found: channel_names.len(),
                expected: scores.len(),
            });
        }
        Self::new(
            RelevanceSource::Riemannian,
            subject,
            "mdm",
            layout,
            channel_names,
            scores,
            BTreeMap::new(),
        )
    }

    pub fn from_document(doc: RelevanceDocument, layout: &GridLayout) -> Result<Self, RelevanceError> {
        Self::new(
            RelevanceSource::External,
            doc.subject,
            doc.model,
            layout,
            &doc.channels,
            doc.pooled,
            doc.per_class.unwrap_or_default(),
        )
    }

    pub fn to_document(&self) -> RelevanceDocument {
        RelevanceDocument {
            subject: self.subject.clone(),
            model: self.model.clone(),
            channels: self.channel_names().map(str::to_string).collect(),
            pooled: self.pooled.clone(),
            per_class: (!self.per_class.is_empty()).then(|| self.per_class.clone()),
        }
    }

    pub fn source(&self) -> RelevanceSource {
        self.source
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Canonical names in montage order.
    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(_, n)| n.as_str())
    }

    pub fn pooled(&self) -> &[f64] {
        &self.pooled
    }

    pub fn per_class(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.per_class
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.channels.iter().position(|(_, n)| n == name).map(|p| self.pooled[p])
    }

    /// Positions into `channels` ranked by descending score, montage index
    /// breaking ties.
    fn ranked(&self, scores: &[f64]) -> Vec<usize> {
        let mut pos: Vec<usize> = (0..scores.len()).collect();
        pos.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(self.channels[a].0.cmp(&self.channels[b].0)));
        pos
    }
}

/// Parses and validates an external relevance export.
pub fn ingest_external(json: &str, layout: &GridLayout) -> Result<RelevanceScores, RelevanceError> {
    let doc: RelevanceDocument = serde_json::from_str(json).map_err(|e| RelevanceError::Schema(e.to_string()))?;
    RelevanceScores::from_document(doc, layout)
}

pub fn read_external(path: &Path, layout: &GridLayout) -> Result<RelevanceScores, RelevanceError> {
    let text = std::fs::read_to_string(path).map_err(|source| RelevanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_external(&text, layout)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassMode {
    #[default]
    Pooled,
    PerClassUnion,
}

impl FromStr for ClassMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pooled" => Ok(Self::Pooled),
            "per_class_union" | "per-class-union" => Ok(Self::PerClassUnion),
            other => Err(format!("unknown class mode {other:?}")),
        }
    }
}

/// The `k` most relevant channels, most relevant first.
///
/// `PerClassUnion` takes the union of each class's top `k` and keeps the
/// `k` members with the highest pooled score. Equal scores resolve to the
/// lower montage index.
pub fn top_k(scores: &RelevanceScores, k: usize, mode: ClassMode) -> Result<Vec<String>, RelevanceError> {
    if k == 0 || k > scores.len() {
        return Err(RelevanceError::KOutOfRange {
            k,
            available: scores.len(),
        });
    }
    let pooled_rank = scores.ranked(&scores.pooled);
    let picked: Vec<usize> = match mode {
        ClassMode::Pooled => pooled_rank.into_iter().take(k).collect(),
        ClassMode::PerClassUnion => {
            if scores.per_class.is_empty() {
                return Err(RelevanceError::NoPerClass);
            }
            let union: BTreeSet<usize> = scores
                .per_class
                .values()
                .flat_map(|v| scores.ranked(v).into_iter().take(k))
                .collect();
            pooled_rank.into_iter().filter(|p| union.contains(p)).take(k).collect()
        }
    };
    Ok(picked.into_iter().map(|p| scores.channels[p].1.clone()).collect())
}

/// How many subjects selected each channel.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CohortAggregate {
    pub counts: BTreeMap<String, usize>,
    pub subjects: Vec<String>,
}

impl CohortAggregate {
    /// Spatial map with each channel's count as mass.
    pub fn to_map<T: Real>(&self, layout: &GridLayout) -> Result<SpatialMap<T>, MontageError> {
        weighted_map(
            self.counts.iter().map(|(name, &c)| (name.as_str(), T::from_usize_lossy(c))),
            layout,
        )
    }

    /// The `k` most frequently selected channels; equal counts go to the
    /// lower montage index.
    pub fn top_k(&self, k: usize, layout: &GridLayout) -> Result<Vec<String>, MontageError> {
        let mut ranked = Vec::with_capacity(self.counts.len());
        for (name, &count) in &self.counts {
            let idx = layout
                .index_of(name)
                .ok_or_else(|| MontageError::UnknownElectrode(name.clone()))?;
            ranked.push((count, idx, name));
        }
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(ranked.into_iter().take(k).map(|(_, _, n)| n.clone()).collect())
    }
}

/// Per-channel selection counts; a channel listed twice by one subject
/// counts once.
pub fn aggregate_cohort<S: AsRef<str>>(selections: &BTreeMap<String, Vec<S>>) -> CohortAggregate {
    let mut counts = BTreeMap::new();
    for channels in selections.values() {
        let distinct: BTreeSet<&str> = channels.iter().map(AsRef::as_ref).collect();
        for name in distinct {
            *counts.entry(name.to_string()).or_insert(0) += 1;
        }
    }
    CohortAggregate {
        counts,
        subjects: selections.keys().cloned().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineWeighting {
    /// Mass 1 per baseline channel.
    #[default]
    Binary,
    /// The same mass `w` on every baseline channel.
    Uniform(f64),
}

/// Map over [`MI_BASELINE_CHANNELS`].
pub fn mi_baseline<T: Real>(layout: &GridLayout, weighting: BaselineWeighting) -> Result<SpatialMap<T>, MontageError> {
    match weighting {
        BaselineWeighting::Binary => binary_map(MI_BASELINE_CHANNELS, layout),
        BaselineWeighting::Uniform(w) => weighted_map(MI_BASELINE_CHANNELS.map(|c| (c, T::lit(w))), layout),
    }
}
