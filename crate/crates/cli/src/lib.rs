//! Experiment runner for scalpemd: prepares epoch caches from EDF or CSV
//! recordings, trains and evaluates classifiers over channel
//! configurations, derives relevance maps, compares them with EMD and
//! writes tables and scalp plots.
//!
//! Every command is a plain function taking an [`ExperimentConfig`]; the
//! `scalpemd` binary is a thin argument parser around them.

pub mod compare;
pub mod config;
pub mod error;
pub mod output;
pub mod prepare;
pub mod report;
pub mod svg;
pub mod train;

pub use compare::{compare, EmdRow, EmdTable, MapKind};
pub use config::{ChannelConfig, DataFormat, ExperimentConfig, ModelSpec, Overrides};
pub use error::CliError;
pub use prepare::{cmd_prepare, PrepareSummary};
pub use report::{build_report, cmd_report, CohortReport};
pub use svg::render_svg;
pub use train::{cmd_select_channels, cmd_train_eval, RunReport, SubjectRow};
