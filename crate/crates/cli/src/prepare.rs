//! `prepare`: raw runs → band-passed, epoched per-subject cache.

use std::path::PathBuf;

use rayon::prelude::*;
use scalpemd::signal::{
    bandpass, epoch_trials, physionet_path, read_csv_recording, read_edf, write_epoch_cache, EpochCache, Label,
    Recording,
};
use serde::{Deserialize, Serialize};

use crate::config::{subject_key, DataFormat, ExperimentConfig};
use crate::error::CliError;
use crate::output::{portable, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedSubject {
    pub subject: String,
    pub runs: Vec<u32>,
    pub n_epochs: usize,
    pub left: usize,
    pub right: usize,
    pub truncated_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectFailure {
    pub subject: String,
    pub error: String,
}

/// Written to `<cache_dir>/prepare.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareSummary {
    pub prepared: Vec<PreparedSubject>,
    /// Subjects with no readable run at all.
    pub missing_subjects: Vec<String>,
    /// Run files not found, relative to the dataset root.
    pub missing_files: Vec<String>,
    pub failed: Vec<SubjectFailure>,
}

enum Outcome {
    Prepared(PreparedSubject, Vec<String>),
    Missing(Vec<String>),
    Failed(String, Vec<String>),
}

fn run_paths(cfg: &ExperimentConfig, subject: u32, run: u32) -> (PathBuf, Option<PathBuf>) {
    match cfg.format {
        DataFormat::Edf => (physionet_path(&cfg.dataset_root, subject, run), None),
        DataFormat::Csv => {
            let dir = cfg.dataset_root.join(subject_key(subject));
            let stem = format!("{}R{run:02}", subject_key(subject));
            (
                dir.join(format!("{stem}.csv")),
                Some(dir.join(format!("{stem}.annotations.csv"))),
            )
        }
    }
}

fn read_run(cfg: &ExperimentConfig, signals: &PathBuf, annotations: Option<&PathBuf>) -> Result<Recording<f64>, CliError> {
    Ok(match cfg.format {
        DataFormat::Edf => read_edf(signals)?,
        DataFormat::Csv => {
            let fs = cfg.csv_sample_rate.expect("validated");
            let ann = annotations.filter(|p| p.exists());
            read_csv_recording(signals, ann.map(|p| p.as_path()), fs)?
        }
    })
}

fn prepare_subject(cfg: &ExperimentConfig, subject: u32) -> Outcome {
    let key = subject_key(subject);
    let mut missing = Vec::new();
    let mut runs = Vec::new();
    let mut epochs = Vec::new();
    let mut truncated = 0;
    let mut header: Option<(Vec<String>, f64)> = None;
    for &run in &cfg.runs {
        let (signals, annotations) = run_paths(cfg, subject, run);
        if !signals.exists() {
            log::warn!("{key}: run {run} missing ({})", signals.display());
            missing.push(portable(&signals, &cfg.dataset_root));
            continue;
        }
        let result = read_run(cfg, &signals, annotations.as_ref()).and_then(|rec| {
            let this = (rec.channel_names().to_vec(), rec.sample_rate());
            match &header {
                Some(h) if *h != this => {
                    return Err(CliError::format(
                        &signals,
                        "channels or sample rate differ from the subject's earlier runs",
                    ))
                }
                Some(_) => {}
                None => header = Some(this),
            }
            Ok(bandpass(&rec, cfg.band[0], cfg.band[1])?)
        });
        match result {
            Ok(filtered) => {
                let out = epoch_trials(&filtered, subject, run, &cfg.epoch);
                truncated += out.truncated_trials;
                epochs.extend(out.epochs);
                runs.push(run);
            }
            Err(e) => return Outcome::Failed(e.to_string(), missing),
        }
    }
    let Some((channel_names, sample_rate)) = header else {
        return Outcome::Missing(missing);
    };
    if epochs.is_empty() {
        return Outcome::Failed("no complete trials found".into(), missing);
    }
    let count = |l: Label| epochs.iter().filter(|e| e.label == l).count();
    let prepared = PreparedSubject {
        subject: key,
        runs,
        n_epochs: epochs.len(),
        left: count(Label::Left),
        right: count(Label::Right),
        truncated_trials: truncated,
    };
    let cache = EpochCache {
        subject,
        sample_rate,
        channel_names,
        epochs,
        truncated_trials: truncated,
    };
    match write_epoch_cache(&cfg.subject_cache_dir(subject), &cache) {
        Ok(()) => Outcome::Prepared(prepared, missing),
        Err(e) => Outcome::Failed(e.to_string(), missing),
    }
}

/// Builds the cache for every configured subject that has data. Missing
/// runs or subjects are logged and listed; the command fails only when no
/// subject could be prepared.
pub fn cmd_prepare(cfg: &ExperimentConfig) -> Result<PrepareSummary, CliError> {
    cfg.require_subjects()?;
    let outcomes: Vec<Outcome> = cfg.subjects.par_iter().map(|&s| prepare_subject(cfg, s)).collect();
    let mut summary = PrepareSummary {
        prepared: Vec::new(),
        missing_subjects: Vec::new(),
        missing_files: Vec::new(),
        failed: Vec::new(),
    };
    for (&subject, outcome) in cfg.subjects.iter().zip(outcomes) {
        match outcome {
            Outcome::Prepared(p, missing) => {
                summary.prepared.push(p);
                summary.missing_files.extend(missing);
            }
            Outcome::Missing(missing) => {
                log::warn!("{}: no run files found; left out of the cohort", subject_key(subject));
                summary.missing_subjects.push(subject_key(subject));
                summary.missing_files.extend(missing);
            }
            Outcome::Failed(error, missing) => {
                log::warn!("{}: {error}", subject_key(subject));
                summary.failed.push(SubjectFailure {
                    subject: subject_key(subject),
                    error,
                });
                summary.missing_files.extend(missing);
            }
        }
    }
    write_json(&cfg.cache_dir.join("prepare.json"), &summary)?;
    if summary.prepared.is_empty() {
        return Err(CliError::EmptyCohort(format!(
            "none of {} subjects could be prepared",
            cfg.subjects.len()
        )));
    }
    Ok(summary)
}
