//! `report`: result tables, Mean±SD footers and pairwise signed-rank tests.

use std::collections::BTreeSet;
use std::path::Path;

use scalpemd::stats::{cohort_summary, wilcoxon_signed_rank, StatsError, Summary, WilcoxonMode};
use serde::{Deserialize, Serialize};

use crate::config::{ChannelConfig, ExperimentConfig, ModelSpec};
use crate::error::CliError;
use crate::output::{read_json, write_json, write_text};
use crate::train::{RowStatus, RunReport};

/// Percentages for one subject under one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub overall: f64,
    pub left: Option<f64>,
    pub right: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub subject: String,
    /// Percent.
    pub chance: Option<f64>,
    /// Aligned with [`ModelTable::configs`]; `None` when the subject has
    /// no result there.
    pub cells: Vec<Option<Accuracy>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footer {
    pub overall: Summary<f64>,
    pub left: Option<Summary<f64>>,
    pub right: Option<Summary<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTable {
    pub model: ModelSpec,
    pub configs: Vec<ChannelConfig>,
    pub rows: Vec<TableRow>,
    pub chance: Option<Summary<f64>>,
    pub footer: Vec<Option<Footer>>,
}

/// Two-sided p-values between every pair of (model, config) columns over
/// the subjects both evaluated. Self-pairs and all-zero differences are 1;
/// `None` where the test is undefined (too few pairs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueMatrix {
    pub mode: WilcoxonMode,
    pub columns: Vec<String>,
    pub p: Vec<Vec<Option<f64>>>,
    pub n_pairs: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub tables: Vec<ModelTable>,
    pub p_values: PValueMatrix,
}

fn accuracy(report: &RunReport, subject: &str) -> Option<Accuracy> {
    let row = report
        .rows
        .iter()
        .find(|r| r.subject == subject && r.status == RowStatus::Ok)?;
    let res = row.result.as_ref()?;
    Some(Accuracy {
        overall: 100.0 * res.overall,
        left: res.per_class_recall.get("left").map(|v| 100.0 * v),
        right: res.per_class_recall.get("right").map(|v| 100.0 * v),
    })
}

fn summary(values: &[f64]) -> Option<Summary<f64>> {
    cohort_summary(values).ok()
}

fn model_table(model: &ModelSpec, reports: &[&RunReport], subjects: &BTreeSet<String>) -> ModelTable {
    let configs: Vec<ChannelConfig> = reports.iter().map(|r| r.channel_config).collect();
    let rows: Vec<TableRow> = subjects
        .iter()
        .map(|s| TableRow {
            subject: s.clone(),
            chance: reports.iter().find_map(|r| {
                r.rows
                    .iter()
                    .find(|row| &row.subject == s && row.status == RowStatus::Ok)
                    .and_then(|row| row.chance)
                    .map(|c| 100.0 * c)
            }),
            cells: reports.iter().map(|r| accuracy(r, s)).collect(),
        })
        .collect();
    let footer = (0..configs.len())
        .map(|k| {
            let cells: Vec<Accuracy> = rows.iter().filter_map(|r| r.cells[k]).collect();
            let overall = summary(&cells.iter().map(|a| a.overall).collect::<Vec<_>>())?;
            let side = |pick: fn(&Accuracy) -> Option<f64>| {
                let v: Option<Vec<f64>> = cells.iter().map(pick).collect();
                v.and_then(|v| summary(&v))
            };
            Some(Footer {
                overall,
                left: side(|a| a.left),
                right: side(|a| a.right),
            })
        })
        .collect();
    let chance: Vec<f64> = rows.iter().filter_map(|r| r.chance).collect();
    ModelTable {
        model: model.clone(),
        configs,
        chance: summary(&chance),
        rows,
        footer,
    }
}

fn p_matrix(reports: &[RunReport], subjects: &BTreeSet<String>, mode: WilcoxonMode) -> PValueMatrix {
    let n = reports.len();
    let columns = reports
        .iter()
        .map(|r| format!("{}/{}", r.model, r.channel_config))
        .collect();
    let mut p = vec![vec![Some(1.0); n]; n];
    let mut n_pairs = vec![vec![0; n]; n];
    for i in 0..n {
        for j in i..n {
            let (x, y): (Vec<f64>, Vec<f64>) = subjects
                .iter()
                .filter_map(|s| Some((accuracy(&reports[i], s)?.overall, accuracy(&reports[j], s)?.overall)))
                .unzip();
            n_pairs[i][j] = x.len();
            n_pairs[j][i] = x.len();
            if i == j {
                continue;
            }
            let value = match wilcoxon_signed_rank(&x, &y, mode) {
                Ok(t) => Some(t.p_value),
                Err(StatsError::AllZero) => Some(1.0),
                Err(_) => None,
            };
            p[i][j] = value;
            p[j][i] = value;
        }
    }
    PValueMatrix {
        mode,
        columns,
        p,
        n_pairs,
    }
}

/// Tables grouped by model (in first-seen order) plus the p-value matrix
/// over all reports.
pub fn build_report(reports: &[RunReport], mode: WilcoxonMode) -> Result<CohortReport, CliError> {
    if reports.is_empty() {
        return Err(CliError::Usage("no train-eval results to report".into()));
    }
    let subjects: BTreeSet<String> = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.subject.clone()))
        .collect();
    let mut models: Vec<&ModelSpec> = Vec::new();
    for r in reports {
        if !models.contains(&&r.model) {
            models.push(&r.model);
        }
    }
    let tables = models
        .into_iter()
        .map(|m| {
            let mine: Vec<&RunReport> = reports.iter().filter(|r| &r.model == m).collect();
            model_table(m, &mine, &subjects)
        })
        .collect();
    Ok(CohortReport {
        tables,
        p_values: p_matrix(reports, &subjects, mode),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:.2}"))
}

fn fmt_summary(s: Option<&Summary<f64>>) -> String {
    s.map_or_else(|| "NA".into(), |s| format!("{:.2}±{:.2}", s.mean, s.sd))
}

/// `ID,Chance,<config> Overall,<config> Left,<config> Right,...` with a
/// closing `Mean±SD` row.
pub fn table_csv(t: &ModelTable) -> String {
    let mut out = String::from("ID,Chance");
    for c in &t.configs {
        out.push_str(&format!(",{c} Overall,{c} Left,{c} Right"));
    }
    out.push('\n');
    for row in &t.rows {
        out.push_str(&row.subject);
        out.push(',');
        out.push_str(&fmt_opt(row.chance));
        for cell in &row.cells {
            for v in [cell.map(|a| a.overall), cell.and_then(|a| a.left), cell.and_then(|a| a.right)] {
                out.push(',');
                out.push_str(&fmt_opt(v));
            }
        }
        out.push('\n');
    }
    out.push_str("Mean±SD,");
    out.push_str(&fmt_summary(t.chance.as_ref()));
    for f in &t.footer {
        let parts = [
            f.as_ref().map(|f| &f.overall),
            f.as_ref().and_then(|f| f.left.as_ref()),
            f.as_ref().and_then(|f| f.right.as_ref()),
        ];
        for s in parts {
            out.push(',');
            out.push_str(&fmt_summary(s));
        }
    }
    out.push('\n');
    out
}

pub fn p_values_csv(m: &PValueMatrix) -> String {
    let mut out = String::new();
    for c in &m.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (name, row) in m.columns.iter().zip(&m.p) {
        out.push_str(name);
        for p in row {
            out.push(',');
            out.push_str(&p.map_or_else(|| "NA".into(), |p| format!("{p:.6}")));
        }
        out.push('\n');
    }
    out
}

/// Writes `report.json`, `pvalues.csv` and one `<model>.table.csv` per
/// model into `dir`.
pub fn write_report(dir: &Path, report: &CohortReport) -> Result<(), CliError> {
    write_json(&dir.join("report.json"), report)?;
    write_text(&dir.join("pvalues.csv"), &p_values_csv(&report.p_values))?;
    for t in &report.tables {
        write_text(&dir.join(format!("{}.table.csv", t.model.slug())), &table_csv(t))?;
    }
    Ok(())
}

/// Reports every configured cell that `train-eval` has produced.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<CohortReport, CliError> {
    let dir = cfg.output_dir.join("train_eval");
    let mut reports = Vec::new();
    for (model, config) in cfg.matrix() {
        let path = dir.join(RunReport::file_name(&model, config));
        if path.exists() {
            reports.push(read_json::<RunReport>(&path)?);
        } else {
            log::warn!("{model} {config}: no train-eval result at {}", path.display());
        }
    }
    let report = build_report(&reports, cfg.wilcoxon)?;
    write_report(&cfg.output_dir.join("report"), &report)?;
    Ok(report)
}
