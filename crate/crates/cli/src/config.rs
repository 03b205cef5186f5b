//! Experiment configuration file (TOML).
//!
//! Relative paths are resolved against the directory holding the file.
//! Command-line flags override the matching keys after loading.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use scalpemd::montage::{load_grid_layout, GridLayout};
use scalpemd::relevance::ClassMode;
use scalpemd::signal::{EpochOptions, SplitSpec, DEFAULT_BAND, DEFAULT_RUNS};
use scalpemd::spdgeom::{CentroidPolicy, DEFAULT_SHRINKAGE};
use scalpemd::stats::{ChanceMethod, WilcoxonMode};
use scalpemd::transport::{MassMode, Metric};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

/// Channel set a model is trained and evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelConfig {
    /// Every recorded channel.
    All64,
    /// The fixed motor-imagery baseline channels.
    Mi21,
    /// Channels ranked most relevant by the model's relevance source.
    Feat21,
}

impl ChannelConfig {
    pub const ALL: [ChannelConfig; 3] = [ChannelConfig::All64, ChannelConfig::Mi21, ChannelConfig::Feat21];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::All64 => "all64",
            Self::Mi21 => "mi21",
            Self::Feat21 => "feat21",
        }
    }
}

impl fmt::Display for ChannelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChannelConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown channel config {s:?} (expected all64, mi21 or feat21)"))
    }
}

/// `mdm` is trained here; `external:<name>` supplies predictions and
/// relevance scores from files.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelSpec {
    Mdm,
    External(String),
}

impl ModelSpec {
    /// File-name form: `mdm` or `external-<name>`.
    pub fn slug(&self) -> String {
        match self {
            Self::Mdm => "mdm".into(),
            Self::External(name) => format!("external-{name}"),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mdm => f.write_str("mdm"),
            Self::External(name) => write!(f, "external:{name}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mdm" {
            return Ok(Self::Mdm);
        }
        match s.strip_prefix("external:") {
            Some(name)
                if !name.is_empty()
                    && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') =>
            {
                Ok(Self::External(name.to_string()))
            }
            _ => Err(format!("unknown model {s:?} (expected mdm or external:<name>)")),
        }
    }
}

impl TryFrom<String> for ModelSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ModelSpec> for String {
    fn from(m: ModelSpec) -> Self {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// `<root>/S007/S007R03.edf`
    #[default]
    Edf,
    /// `<root>/S007/S007R03.csv` with an optional
    /// `S007R03.annotations.csv` beside it.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelevanceOptions {
    pub k: usize,
    pub class_mode: ClassMode,
    pub policy: CentroidPolicy,
    /// External relevance documents at `<dir>/<name>/S007.json`.
    pub dir: Option<PathBuf>,
}

impl Default for RelevanceOptions {
    fn default() -> Self {
        Self {
            k: 21,
            class_mode: ClassMode::Pooled,
            policy: CentroidPolicy::Restrict,
            dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmdOptions {
    pub metric: Metric,
    pub mass: MassMode,
    /// Scale the model map to the baseline's total before comparing.
    pub rebalance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub dataset_root: PathBuf,
    pub format: DataFormat,
    pub csv_sample_rate: Option<f64>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Electrode-to-grid mapping file; the built-in 64-channel montage
    /// when absent.
    pub montage: Option<PathBuf>,
    pub subjects: Vec<u32>,
    pub runs: Vec<u32>,
    pub models: Vec<ModelSpec>,
    pub channel_configs: Vec<ChannelConfig>,
    pub band: [f64; 2],
    pub shrinkage: f64,
    pub chance: ChanceMethod,
    pub selection_margin: f64,
    pub wilcoxon: WilcoxonMode,
    /// External predictions at `<dir>/<name>/<config>/S007.csv`
    /// (`epoch,predicted`).
    pub predictions_dir: Option<PathBuf>,
    pub epoch: EpochOptions,
    pub split: SplitSpec,
    pub relevance: RelevanceOptions,
    pub emd: EmdOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            dataset_root: PathBuf::from("data"),
            format: DataFormat::Edf,
            csv_sample_rate: None,
            cache_dir: PathBuf::from("cache"),
            output_dir: PathBuf::from("out"),
            montage: None,
            subjects: Vec::new(),
            runs: DEFAULT_RUNS.to_vec(),
            models: vec![ModelSpec::Mdm],
            channel_configs: ChannelConfig::ALL.to_vec(),
            band: [DEFAULT_BAND.0, DEFAULT_BAND.1],
            shrinkage: DEFAULT_SHRINKAGE,
            chance: ChanceMethod::Majority,
            selection_margin: 0.10,
            wilcoxon: WilcoxonMode::Auto,
            predictions_dir: None,
            epoch: EpochOptions::default(),
            split: SplitSpec::default(),
            relevance: RelevanceOptions::default(),
            emd: EmdOptions::default(),
        }
    }
}

/// Flag values that replace file keys when present.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub metric: Option<Metric>,
    pub mass: Option<MassMode>,
    pub rebalance: bool,
}

impl ExperimentConfig {
    /// Parses, resolves paths against `base_dir` and validates.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dataset_root);
        join(&mut self.cache_dir);
        join(&mut self.output_dir);
        if let Some(p) = self.montage.as_mut() {
            join(p);
        }
        if let Some(p) = self.predictions_dir.as_mut() {
            join(p);
        }
        if let Some(p) = self.relevance.dir.as_mut() {
            join(p);
        }
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.split.seed = seed;
        }
        if let Some(metric) = o.metric {
            self.emd.metric = metric;
        }
        if let Some(mass) = o.mass {
            self.emd.mass = mass;
        }
        self.emd.rebalance |= o.rebalance;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if self.version != CONFIG_VERSION {
            return err(format!("unsupported version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.format == DataFormat::Csv && !self.csv_sample_rate.is_some_and(|f| f > 0.0 && f.is_finite()) {
            return err("format = \"csv\" needs a positive csv_sample_rate".into());
        }
        if self.models.is_empty() || self.channel_configs.is_empty() {
            return err("models and channel_configs must be non-empty".into());
        }
        let [lo, hi] = self.band;
        if !(lo > 0.0 && hi > lo) {
            return err(format!("band [{lo}, {hi}] must satisfy 0 < lo < hi"));
        }
        if !(0.0..1.0).contains(&self.shrinkage) {
            return err(format!("shrinkage {} outside [0, 1)", self.shrinkage));
        }
        if self.relevance.k < 2 {
            return err(format!("relevance.k = {} must be at least 2", self.relevance.k));
        }
        if !(self.selection_margin >= 0.0) {
            return err(format!("selection_margin {} must be non-negative", self.selection_margin));
        }
        let external = self.models.iter().any(|m| matches!(m, ModelSpec::External(_)));
        if external && self.predictions_dir.is_none() {
            return err("external models need predictions_dir".into());
        }
        if external && self.channel_configs.contains(&ChannelConfig::Feat21) && self.relevance.dir.is_none() {
            return err("feat21 with external models needs relevance.dir".into());
        }
        Ok(())
    }

    pub fn require_subjects(&self) -> Result<(), CliError> {
        if self.subjects.is_empty() {
            return Err(CliError::EmptyCohort("subject list is empty".into()));
        }
        Ok(())
    }

    /// Every (model, channel config) pair, model-major.
    pub fn matrix(&self) -> Vec<(ModelSpec, ChannelConfig)> {
        self.models
            .iter()
            .flat_map(|m| self.channel_configs.iter().map(move |&c| (m.clone(), c)))
            .collect()
    }

    pub fn layout(&self) -> Result<GridLayout, CliError> {
        match &self.montage {
            None => Ok(GridLayout::physionet64()),
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Ok(load_grid_layout(&text)?)
            }
        }
    }

    pub fn subject_cache_dir(&self, subject: u32) -> PathBuf {
        self.cache_dir.join(subject_key(subject))
    }
}

/// `S007`
pub fn subject_key(subject: u32) -> String {
    format!("S{subject:03}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let cfg = ExperimentConfig::from_toml("version = 1\ncache_dir = \"c\"\n", Path::new("/exp")).unwrap();
        assert_eq!(cfg.cache_dir, Path::new("/exp/c"));
        assert_eq!(cfg.dataset_root, Path::new("/exp/data"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml("version = 1\nsubject = [1]\n", Path::new("")).is_err());
        assert!(ExperimentConfig::from_toml("version = 2\n", Path::new("")).is_err());
    }

    #[test]
    fn model_names() {
        assert_eq!("mdm".parse::<ModelSpec>().unwrap(), ModelSpec::Mdm);
        assert_eq!(
            "external:eegnet".parse::<ModelSpec>().unwrap(),
            ModelSpec::External("eegnet".into())
        );
        assert!("external:".parse::<ModelSpec>().is_err());
        assert!("external:a/b".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn nine_configurations_from_one_file() {
        let text = r#"
            version = 1
            models = ["mdm", "external:conformer", "external:eegnet"]
            predictions_dir = "pred"
            [relevance]
            dir = "rel"
        "#;
        let cfg = ExperimentConfig::from_toml(text, Path::new("")).unwrap();
        assert_eq!(cfg.matrix().len(), 9);
    }

    #[test]
    fn feat21_needs_a_relevance_source() {
        let text = "version = 1\nmodels = [\"external:x\"]\npredictions_dir = \"p\"\n";
        assert!(ExperimentConfig::from_toml(text, Path::new("")).is_err());
        let text = "version = 1\nmodels = [\"external:x\"]\npredictions_dir = \"p\"\nchannel_configs = [\"mi21\"]\n";
        assert!(ExperimentConfig::from_toml(text, Path::new("")).is_ok());
    }

    #[test]
    fn overrides_replace_file_keys() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(Overrides {
            seed: Some(7),
            metric: Some(Metric::Manhattan),
            mass: Some(MassMode::Normalized),
            rebalance: true,
        });
        assert_eq!(cfg.split.seed, 7);
        assert_eq!(cfg.emd.metric, Metric::Manhattan);
        assert_eq!(cfg.emd.mass, MassMode::Normalized);
        assert!(cfg.emd.rebalance);
    }
}
