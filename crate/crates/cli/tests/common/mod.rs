//! Synthetic cohorts written to disk in the PhysioNet file layout.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use scalpemd::signal::{physionet_path, write_edf, Annotation, Recording};
use scalpemd_cli::ExperimentConfig;
use scalpemd_testkit::synthetic::{synthetic_run, ClassStructure, PHYSIONET_EDF_LABELS};

pub const FS: usize = 160;

pub fn recording(seed: u64, channels: usize, trials: usize) -> Recording<f64> {
    let (rows, marks) = synthetic_run(seed, channels, FS, trials, ClassStructure::default());
    let samples = rows[0].len();
    let data = DMatrix::from_fn(channels, samples, |c, k| rows[c][k]);
    let names = PHYSIONET_EDF_LABELS[..channels].iter().map(|s| s.to_string()).collect();
    let annotations = marks.into_iter().map(|(o, d, c)| Annotation::new(o, d, c)).collect();
    Recording::new(names, FS as f64, data, annotations).unwrap()
}

/// EDF files for `subjects × runs`, `trials[i]` task blocks in run `i`.
pub fn write_cohort(root: &Path, subjects: &[u32], runs: &[u32], trials: &[usize], channels: usize) {
    for &s in subjects {
        for (i, &r) in runs.iter().enumerate() {
            let path = physionet_path(root, s, r);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            let rec = recording(1000 * s as u64 + r as u64, channels, trials[i]);
            write_edf(&rec, &path).unwrap();
        }
    }
}

/// Experiment rooted at `dir`: dataset under `data/`, everything else
/// beside it.
pub fn config(dir: &Path, subjects: &[u32], runs: &[u32], extra: &str) -> ExperimentConfig {
    let text = format!(
        "version = 1\nsubjects = {subjects:?}\nruns = {runs:?}\n{extra}\n"
    );
    std::fs::write(dir.join("scalpemd.toml"), &text).unwrap();
    ExperimentConfig::load(&dir.join("scalpemd.toml")).unwrap()
}

/// Small two-subject, 24-channel cohort with two runs of 12 trials each.
pub struct SmallCohort {
    pub dir: tempfile::TempDir,
    pub subjects: Vec<u32>,
    pub runs: Vec<u32>,
}

impl SmallCohort {
    pub const CHANNELS: usize = 24;

    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let subjects = vec![1, 2];
        let runs = vec![3, 4];
        write_cohort(&dir.path().join("data"), &subjects, &runs, &[12, 12], Self::CHANNELS);
        Self { dir, subjects, runs }
    }

    pub fn path(&self) -> PathBuf {
        self.dir.path().to_path_buf()
    }

    pub fn config(&self, extra: &str) -> ExperimentConfig {
        config(self.dir.path(), &self.subjects, &self.runs, extra)
    }
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
