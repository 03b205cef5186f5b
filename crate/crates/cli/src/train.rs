//! `train-eval` and `select-channels`.
//!
//! Both work from the epoch cache, one subject per task, with results
//! ordered by subject id regardless of scheduling.

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use scalpemd::montage::{binary_map, normalize_label, GridLayout};
use scalpemd::relevance::{aggregate_cohort, read_external, top_k, RelevanceScores, MI_BASELINE_CHANNELS};
use scalpemd::signal::{read_epoch_cache, split, Label, Split};
use scalpemd::spdgeom::{
    backward_elimination, covariance, mdm_fit, FrechetOptions, SelectionOptions, SelectionTrace, SpdMatrix,
};
use scalpemd::stats::{chance_level, cohort_summary, evaluate, select_subjects, ChanceMethod, EvalResult, Summary};
use serde::{Deserialize, Serialize};

use crate::config::{subject_key, ChannelConfig, ExperimentConfig, ModelSpec};
use crate::error::CliError;
use crate::output::{write_json, write_text};

/// One subject's cached epochs reduced to what the classifiers need.
pub struct SubjectData {
    pub key: String,
    pub channel_names: Vec<String>,
    pub labels: Vec<Label>,
    pub covs: Vec<SpdMatrix<f64>>,
    pub split: Split,
}

impl SubjectData {
    fn train(&self) -> (Vec<SpdMatrix<f64>>, Vec<&'static str>) {
        self.split
            .train
            .iter()
            .map(|&i| (self.covs[i].clone(), self.labels[i].as_str()))
            .unzip()
    }

    fn test_labels(&self) -> Vec<&'static str> {
        self.split.test.iter().map(|&i| self.labels[i].as_str()).collect()
    }

    /// Cache indices of `names`, matched through label normalization,
    /// returned ascending.
    fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>, CliError> {
        let normalized: Vec<String> = self.channel_names.iter().map(|c| normalize_label(c)).collect();
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let want = normalize_label(name.as_ref());
            let idx = normalized.iter().position(|c| *c == want).ok_or_else(|| {
                CliError::Usage(format!("{}: channel {:?} not in the recording", self.key, name.as_ref()))
            })?;
            out.push(idx);
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Montage spelling of each cached channel where the montage knows it.
    fn display_names(&self, layout: &GridLayout, indices: &[usize]) -> Vec<String> {
        indices
            .iter()
            .map(|&i| {
                let raw = &self.channel_names[i];
                layout.canonical(raw).unwrap_or(raw).to_string()
            })
            .collect()
    }
}

/// `Ok(None)` when the subject has no cache.
pub fn load_subject(cfg: &ExperimentConfig, subject: u32) -> Result<Option<SubjectData>, CliError> {
    let dir = cfg.subject_cache_dir(subject);
    if !dir.join("cache.json").exists() {
        return Ok(None);
    }
    let cache = read_epoch_cache::<f64>(&dir)?;
    let covs = cache
        .epochs
        .iter()
        .map(|e| covariance(&e.data, cfg.shrinkage))
        .collect::<Result<Vec<_>, _>>()?;
    let split = split(&cache.epochs, cfg.split)?;
    Ok(Some(SubjectData {
        key: subject_key(subject),
        labels: cache.epochs.iter().map(|e| e.label).collect(),
        channel_names: cache.channel_names,
        covs,
        split,
    }))
}

fn selection_options(cfg: &ExperimentConfig) -> SelectionOptions<f64> {
    SelectionOptions {
        policy: cfg.relevance.policy,
        frechet: FrechetOptions::default(),
    }
}

fn eliminate(cfg: &ExperimentConfig, data: &SubjectData) -> Result<SelectionTrace, CliError> {
    let (covs, labels) = data.train();
    Ok(backward_elimination(&covs, &labels, cfg.relevance.k, selection_options(cfg))?)
}

fn external_relevance(cfg: &ExperimentConfig, name: &str, key: &str) -> PathBuf {
    cfg.relevance
        .dir
        .as_ref()
        .expect("validated")
        .join(name)
        .join(format!("{key}.json"))
}

fn channel_subset(
    cfg: &ExperimentConfig,
    layout: &GridLayout,
    model: &ModelSpec,
    config: ChannelConfig,
    data: &SubjectData,
) -> Result<Vec<usize>, CliError> {
    match (config, model) {
        (ChannelConfig::All64, _) => Ok((0..data.channel_names.len()).collect()),
        (ChannelConfig::Mi21, _) => data.indices_of(&MI_BASELINE_CHANNELS),
        (ChannelConfig::Feat21, ModelSpec::Mdm) => Ok(eliminate(cfg, data)?.final_subset),
        (ChannelConfig::Feat21, ModelSpec::External(name)) => {
            let scores = read_external(&external_relevance(cfg, name, &data.key), layout)?;
            data.indices_of(&top_k(&scores, cfg.relevance.k, cfg.relevance.class_mode)?)
        }
    }
}

#[derive(Deserialize)]
struct PredictionRow {
    epoch: usize,
    predicted: String,
}

fn external_predictions(
    cfg: &ExperimentConfig,
    name: &str,
    config: ChannelConfig,
    data: &SubjectData,
) -> Result<Vec<String>, CliError> {
    let path = cfg
        .predictions_dir
        .as_ref()
        .expect("validated")
        .join(name)
        .join(config.as_str())
        .join(format!("{}.csv", data.key));
    let mut reader = csv::Reader::from_path(&path).map_err(|e| CliError::format(&path, e))?;
    let mut by_epoch = BTreeMap::new();
    for row in reader.deserialize::<PredictionRow>() {
        let row = row.map_err(|e| CliError::format(&path, e))?;
        let label: Label = row.predicted.parse().map_err(|e| CliError::format(&path, e))?;
        by_epoch.insert(row.epoch, label.as_str().to_string());
    }
    data.split
        .test
        .iter()
        .map(|i| {
            by_epoch
                .get(i)
                .cloned()
                .ok_or_else(|| CliError::format(&path, format!("no prediction for test epoch {i}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// No cache for the subject.
    Missing,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRow {
    pub subject: String,
    pub status: RowStatus,
    pub chance: Option<f64>,
    pub result: Option<EvalResult>,
    /// Channels the model used, in montage spelling.
    pub channels: Vec<String>,
    pub error: Option<String>,
}

impl SubjectRow {
    pub fn ok(subject: impl Into<String>, chance: f64, result: EvalResult, channels: Vec<String>) -> Self {
        Self {
            subject: subject.into(),
            status: RowStatus::Ok,
            chance: Some(chance),
            result: Some(result),
            channels,
            error: None,
        }
    }

    fn missing(subject: String) -> Self {
        Self {
            subject,
            status: RowStatus::Missing,
            chance: None,
            result: None,
            channels: Vec::new(),
            error: None,
        }
    }

    fn failed(subject: String, error: &CliError) -> Self {
        Self {
            error: Some(error.to_string()),
            status: RowStatus::Error,
            ..Self::missing(subject)
        }
    }
}

/// Outcome of one (model, channel config) cell over the cohort; every
/// configured subject has exactly one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: ModelSpec,
    pub channel_config: ChannelConfig,
    pub seed: u64,
    pub test_fraction: f64,
    pub chance_method: ChanceMethod,
    pub selection_margin: f64,
    pub rows: Vec<SubjectRow>,
    pub missing: Vec<String>,
    pub failed: Vec<String>,
    /// Overall accuracy in percent over the `ok` rows.
    pub summary: Option<Summary<f64>>,
    /// `ok` subjects at least `selection_margin` above chance.
    pub above_chance: Vec<String>,
}

impl RunReport {
    pub fn from_rows(
        model: ModelSpec,
        channel_config: ChannelConfig,
        cfg: &ExperimentConfig,
        rows: Vec<SubjectRow>,
    ) -> Result<Self, CliError> {
        let keys = |s: RowStatus| rows.iter().filter(|r| r.status == s).map(|r| r.subject.clone()).collect();
        let ok: Vec<&SubjectRow> = rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
        let percents: Vec<f64> = ok.iter().map(|r| 100.0 * r.result.as_ref().expect("ok row").overall).collect();
        let summary = if percents.is_empty() {
            None
        } else {
            Some(cohort_summary(&percents)?)
        };
        let results: BTreeMap<String, EvalResult> = ok
            .iter()
            .map(|r| (r.subject.clone(), r.result.clone().expect("ok row")))
            .collect();
        let chance: BTreeMap<String, f64> = ok
            .iter()
            .map(|r| (r.subject.clone(), r.chance.expect("ok row")))
            .collect();
        Ok(Self {
            model,
            channel_config,
            seed: cfg.split.seed,
            test_fraction: cfg.split.test_fraction,
            chance_method: cfg.chance,
            selection_margin: cfg.selection_margin,
            missing: keys(RowStatus::Missing),
            failed: keys(RowStatus::Error),
            above_chance: select_subjects(&results, &chance, cfg.selection_margin)?,
            summary,
            rows,
        })
    }

    /// `<model slug>__<config>.json`
    pub fn file_name(model: &ModelSpec, config: ChannelConfig) -> String {
        format!("{}__{}.json", model.slug(), config)
    }
}

fn evaluate_cell(
    cfg: &ExperimentConfig,
    layout: &GridLayout,
    model: &ModelSpec,
    config: ChannelConfig,
    data: &SubjectData,
) -> Result<SubjectRow, CliError> {
    let subset = channel_subset(cfg, layout, model, config, data)?;
    let predicted: Vec<String> = match model {
        ModelSpec::Mdm => {
            let (covs, labels) = data.train();
            let fitted = mdm_fit(&covs, &labels, &subset, FrechetOptions::default())?;
            data.split
                .test
                .iter()
                .map(|&i| fitted.predict_full(&data.covs[i]).map(str::to_string))
                .collect::<Result<_, _>>()?
        }
        ModelSpec::External(name) => external_predictions(cfg, name, config, data)?,
    };
    let actual = data.test_labels();
    let result = evaluate(&predicted, &actual)?;
    let chance = chance_level(&actual, cfg.chance)?;
    Ok(SubjectRow::ok(data.key.clone(), chance, result, data.display_names(layout, &subset)))
}

/// Trains and evaluates every selected (model, channel config) cell and
/// writes one report per cell under `<output>/train_eval/`.
pub fn cmd_train_eval(
    cfg: &ExperimentConfig,
    models: &[ModelSpec],
    configs: &[ChannelConfig],
) -> Result<Vec<RunReport>, CliError> {
    cfg.require_subjects()?;
    let layout = cfg.layout()?;
    let cells: Vec<(ModelSpec, ChannelConfig)> = cfg
        .matrix()
        .into_iter()
        .filter(|(m, c)| (models.is_empty() || models.contains(m)) && (configs.is_empty() || configs.contains(c)))
        .collect();
    if cells.is_empty() {
        return Err(CliError::Usage("no configured (model, channel config) pair matches the filters".into()));
    }

    let per_subject: Vec<Vec<SubjectRow>> = cfg
        .subjects
        .par_iter()
        .map(|&s| match load_subject(cfg, s) {
            Ok(Some(data)) => cells
                .iter()
                .map(|(m, c)| {
                    evaluate_cell(cfg, &layout, m, *c, &data).unwrap_or_else(|e| {
                        log::warn!("{} {m} {c}: {e}", data.key);
                        SubjectRow::failed(data.key.clone(), &e)
                    })
                })
                .collect(),
            Ok(None) => {
                log::warn!("{}: no cache; run prepare", subject_key(s));
                cells.iter().map(|_| SubjectRow::missing(subject_key(s))).collect()
            }
            Err(e) => {
                log::warn!("{}: {e}", subject_key(s));
                cells.iter().map(|_| SubjectRow::failed(subject_key(s), &e)).collect()
            }
        })
        .collect();
    if per_subject.iter().all(|rows| rows[0].status == RowStatus::Missing) {
        return Err(CliError::EmptyCohort(format!(
            "no epoch cache under {}; run prepare first",
            cfg.cache_dir.display()
        )));
    }

    let mut reports = Vec::with_capacity(cells.len());
    for (k, (model, config)) in cells.into_iter().enumerate() {
        let rows = per_subject.iter().map(|r| r[k].clone()).collect();
        let report = RunReport::from_rows(model.clone(), config, cfg, rows)?;
        let path = cfg
            .output_dir
            .join("train_eval")
            .join(RunReport::file_name(&model, config));
        write_json(&path, &report)?;
        reports.push(report);
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectError {
    pub subject: String,
    pub error: String,
}

/// Cohort selection counts for one model, `<output>/maps/<slug>.cohort.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSelection {
    pub model: ModelSpec,
    pub k: usize,
    pub subjects: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    /// The `k` most often selected channels.
    pub top_channels: Vec<String>,
    pub selections: BTreeMap<String, Vec<String>>,
    pub missing: Vec<String>,
    pub failed: Vec<SubjectError>,
}

enum Selected {
    Channels(Vec<String>),
    Missing,
    Failed(String),
}

fn select_for_model(
    cfg: &ExperimentConfig,
    layout: &GridLayout,
    model: &ModelSpec,
    data: &SubjectData,
) -> Result<Vec<String>, CliError> {
    let rel_dir = cfg.output_dir.join("relevance").join(model.slug());
    let scores = match model {
        ModelSpec::Mdm => {
            let trace = eliminate(cfg, data)?;
            write_json(&rel_dir.join(format!("{}.trace.json", data.key)), &trace)?;
            RelevanceScores::from_selection(&trace, &data.channel_names, layout, data.key.clone())?
        }
        ModelSpec::External(name) => read_external(&external_relevance(cfg, name, &data.key), layout)?,
    };
    write_json(&rel_dir.join(format!("{}.json", data.key)), &scores.to_document())?;
    Ok(top_k(&scores, cfg.relevance.k, cfg.relevance.class_mode)?)
}

/// Per-subject relevance and top-k channels for every configured model,
/// then cohort count maps (`.weighted.csv`) and top-k binary maps
/// (`.binary.csv`) under `<output>/maps/`.
pub fn cmd_select_channels(cfg: &ExperimentConfig) -> Result<Vec<CohortSelection>, CliError> {
    cfg.require_subjects()?;
    let layout = cfg.layout()?;
    let per_subject: Vec<Vec<Selected>> = cfg
        .subjects
        .par_iter()
        .map(|&s| {
            let data = match load_subject(cfg, s) {
                Ok(Some(d)) => d,
                Ok(None) => return cfg.models.iter().map(|_| Selected::Missing).collect(),
                Err(e) => return cfg.models.iter().map(|_| Selected::Failed(e.to_string())).collect(),
            };
            cfg.models
                .iter()
                .map(|m| match select_for_model(cfg, &layout, m, &data) {
                    Ok(ch) => Selected::Channels(ch),
                    Err(e) => {
                        log::warn!("{} {m}: {e}", data.key);
                        Selected::Failed(e.to_string())
                    }
                })
                .collect()
        })
        .collect();

    let maps_dir = cfg.output_dir.join("maps");
    let mut out = Vec::with_capacity(cfg.models.len());
    for (k, model) in cfg.models.iter().enumerate() {
        let mut selections = BTreeMap::new();
        let mut missing = Vec::new();
        let mut failed = Vec::new();
        for (&s, picks) in cfg.subjects.iter().zip(&per_subject) {
            match &picks[k] {
                Selected::Channels(ch) => {
                    selections.insert(subject_key(s), ch.clone());
                }
                Selected::Missing => missing.push(subject_key(s)),
                Selected::Failed(error) => failed.push(SubjectError {
                    subject: subject_key(s),
                    error: error.clone(),
                }),
            }
        }
        if selections.is_empty() {
            return Err(CliError::EmptyCohort(format!("{model}: no subject produced a channel selection")));
        }
        let agg = aggregate_cohort(&selections);
        let top_channels = agg.top_k(cfg.relevance.k, &layout)?;
        let weighted = agg.to_map::<f64>(&layout)?;
        let binary = binary_map::<f64, _, _>(&top_channels, &layout)?;
        let slug = model.slug();
        write_text(&maps_dir.join(format!("{slug}.weighted.csv")), &weighted.to_csv())?;
        write_text(&maps_dir.join(format!("{slug}.binary.csv")), &binary.to_csv())?;
        let cohort = CohortSelection {
            model: model.clone(),
            k: cfg.relevance.k,
            subjects: agg.subjects,
            counts: agg.counts,
            top_channels,
            selections,
            missing,
            failed,
        };
        write_json(&maps_dir.join(format!("{slug}.cohort.json")), &cohort)?;
        out.push(cohort);
    }
    Ok(out)
}
