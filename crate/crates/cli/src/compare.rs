//! `emd`: model relevance maps against the motor-imagery baseline.

use std::path::{Path, PathBuf};

use scalpemd::montage::{GridLayout, SpatialMap};
use scalpemd::relevance::{mi_baseline, BaselineWeighting};
use scalpemd::transport::{emd, rebalance, MassMode, Metric};
use serde::{Deserialize, Serialize};

use crate::config::{EmdOptions, ExperimentConfig};
use crate::error::CliError;
use crate::output::{read_json, write_json, write_text};
use crate::train::CohortSelection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    /// Top-k channels, mass 1 each.
    Binary,
    /// Per-channel selection counts.
    Weighted,
    /// A map file given on the command line.
    Custom,
}

impl MapKind {
    fn as_str(self) -> &'static str {
        match self {
            Self::Binary => "binary",
            Self::Weighted => "weighted",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmdRow {
    pub model: String,
    pub kind: MapKind,
    pub distance: f64,
    /// 1 = closest to the baseline among maps of the same kind.
    pub rank: usize,
    pub model_mass: f64,
    pub baseline_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmdTable {
    pub metric: Metric,
    pub mass: MassMode,
    pub rebalanced: bool,
    /// Grouped by kind, each group ordered by distance.
    pub rows: Vec<EmdRow>,
}

/// One map to compare, with the baseline it is measured against.
pub struct Comparison {
    pub model: String,
    pub kind: MapKind,
    pub map: SpatialMap<f64>,
    pub baseline: SpatialMap<f64>,
}

/// Distances for every comparison, sorted by kind then distance (model
/// name on ties).
pub fn compare(comparisons: Vec<Comparison>, opts: EmdOptions) -> Result<EmdTable, CliError> {
    let mut rows = Vec::with_capacity(comparisons.len());
    for c in comparisons {
        let (map, baseline) = if opts.rebalance {
            rebalance(&c.map, &c.baseline, c.baseline.total())?
        } else {
            (c.map, c.baseline)
        };
        let result = emd(&map, &baseline, opts.metric, opts.mass)?;
        rows.push(EmdRow {
            model: c.model,
            kind: c.kind,
            distance: result.distance,
            rank: 0,
            model_mass: map.total(),
            baseline_mass: baseline.total(),
        });
    }
    rows.sort_by(|a, b| {
        a.kind
            .cmp(&b.kind)
            .then(a.distance.total_cmp(&b.distance))
            .then_with(|| a.model.cmp(&b.model))
    });
    let mut rank = 0;
    for i in 0..rows.len() {
        rank = if i > 0 && rows[i - 1].kind == rows[i].kind { rank + 1 } else { 1 };
        rows[i].rank = rank;
    }
    Ok(EmdTable {
        metric: opts.metric,
        mass: opts.mass,
        rebalanced: opts.rebalance,
        rows,
    })
}

pub fn read_map(path: &Path) -> Result<SpatialMap<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    SpatialMap::from_csv(&text).map_err(|e| CliError::format(path, e))
}

/// Binary and weighted cohort maps written by `select-channels`, each
/// against the matching baseline: binary against one unit per baseline
/// channel, weighted against one unit per baseline channel per subject.
pub fn cohort_comparisons(cfg: &ExperimentConfig, layout: &GridLayout) -> Result<Vec<Comparison>, CliError> {
    let maps_dir = cfg.output_dir.join("maps");
    let binary_baseline = mi_baseline::<f64>(layout, BaselineWeighting::Binary)?;
    let mut out = Vec::new();
    for model in &cfg.models {
        let slug = model.slug();
        let cohort_path = maps_dir.join(format!("{slug}.cohort.json"));
        if !cohort_path.exists() {
            return Err(CliError::Usage(format!(
                "{} not found; run select-channels first",
                cohort_path.display()
            )));
        }
        let cohort: CohortSelection = read_json(&cohort_path)?;
        let n = cohort.subjects.len() as f64;
        out.push(Comparison {
            model: model.to_string(),
            kind: MapKind::Binary,
            map: read_map(&maps_dir.join(format!("{slug}.binary.csv")))?,
            baseline: binary_baseline.clone(),
        });
        out.push(Comparison {
            model: model.to_string(),
            kind: MapKind::Weighted,
            map: read_map(&maps_dir.join(format!("{slug}.weighted.csv")))?,
            baseline: mi_baseline(layout, BaselineWeighting::Uniform(n))?,
        });
    }
    Ok(out)
}

/// Command-line maps against `baseline` (the binary motor-imagery map when
/// `None`).
pub fn custom_comparisons(
    maps: &[(String, PathBuf)],
    baseline: Option<&Path>,
    layout: &GridLayout,
) -> Result<Vec<Comparison>, CliError> {
    let baseline = match baseline {
        Some(p) => read_map(p)?,
        None => mi_baseline(layout, BaselineWeighting::Binary)?,
    };
    maps.iter()
        .map(|(name, path)| {
            Ok(Comparison {
                model: name.clone(),
                kind: MapKind::Custom,
                map: read_map(path)?,
                baseline: baseline.clone(),
            })
        })
        .collect()
}

pub fn table_csv(table: &EmdTable) -> String {
    let mut out = String::from("kind,rank,model,distance,model_mass,baseline_mass\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.kind.as_str(),
            r.rank,
            r.model,
            r.distance,
            r.model_mass,
            r.baseline_mass
        ));
    }
    out
}

/// Writes `emd.json` and `emd.csv` into `dir`.
pub fn write_table(dir: &Path, table: &EmdTable) -> Result<(), CliError> {
    write_json(&dir.join("emd.json"), table)?;
    write_text(&dir.join("emd.csv"), &table_csv(table))
}
