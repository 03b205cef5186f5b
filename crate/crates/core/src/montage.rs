//! Electrode registry and projection of scalp electrodes onto an N×N grid.
//!
//! A [`GridLayout`] is loaded from a plain-text mapping file (`NAME,row,col`
//! per line, `#` comments, optional `#! n = <order>` pragma). A
//! [`SpatialMap`] holds nonnegative mass per grid cell; relevance sets and
//! weights are turned into maps with [`binary_map`] and [`weighted_map`].

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Mapping file for the 64-channel PhysioNet montage on an 11×11 grid.
pub const PHYSIONET64_GRID11: &str = include_str!("../data/physionet64_grid11.map");

/// Default grid order for the shipped layout.
pub const DEFAULT_GRID_ORDER: usize = 11;

#[derive(Debug, Error, PartialEq)]
pub enum MontageError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("electrode {0:?} listed more than once")]
    DuplicateName(String),
    #[error("electrodes {first:?} and {second:?} share cell ({row}, {col})")]
    DuplicateCell {
        first: String,
        second: String,
        row: usize,
        col: usize,
    },
    #[error("electrode {name:?} at ({row}, {col}) lies outside the {n}x{n} grid")]
    OutOfRange {
        name: String,
        row: usize,
        col: usize,
        n: usize,
    },
    #[error("layout contains no electrodes")]
    Empty,
    #[error("unknown electrode {0:?}")]
    UnknownElectrode(String),
    #[error("negative weight {weight} for electrode {name:?}")]
    NegativeWeight { name: String, weight: f64 },
    #[error("non-finite value {value} at cell ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("all weights are zero")]
    ZeroWeights,
    #[error("map has {found} rows/columns, expected a square grid")]
    NotSquare { found: usize },
    #[error("grid orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Electrode {
    pub name: String,
    pub row: usize,
    pub col: usize,
}

/// Normalizes an electrode label for lookup: trims whitespace and trailing
/// dots (PhysioNet pads labels like `Fc5.` or `Cz..`) and upper-cases.
pub fn normalize_label(label: &str) -> String {
    label.trim().trim_end_matches('.').to_ascii_uppercase()
}

/// Validated electrode → grid-cell assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    n: usize,
    electrodes: Vec<Electrode>,
    name_index: HashMap<String, usize>,
}

impl GridLayout {
    /// Builds a layout from electrodes, validating uniqueness and bounds.
    pub fn new(n: usize, electrodes: Vec<Electrode>) -> Result<Self, MontageError> {
        if electrodes.is_empty() {
            return Err(MontageError::Empty);
        }
        let mut name_index = HashMap::with_capacity(electrodes.len());
        let mut cells: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, e) in electrodes.iter().enumerate() {
            if e.row >= n || e.col >= n {
                return Err(MontageError::OutOfRange {
                    name: e.name.clone(),
                    row: e.row,
                    col: e.col,
                    n,
                });
            }
            if name_index.insert(normalize_label(&e.name), i).is_some() {
                return Err(MontageError::DuplicateName(e.name.clone()));
            }
            if let Some(&j) = cells.get(&(e.row, e.col)) {
                return Err(MontageError::DuplicateCell {
                    first: electrodes[j].name.clone(),
                    second: e.name.clone(),
                    row: e.row,
                    col: e.col,
                });
            }
            cells.insert((e.row, e.col), i);
        }
        Ok(Self {
            n,
            electrodes,
            name_index,
        })
    }

    /// The shipped 64-channel PhysioNet layout.
    pub fn physionet64() -> Self {
        load_grid_layout(PHYSIONET64_GRID11).expect("shipped layout is valid")
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn electrodes(&self) -> &[Electrode] {
        &self.electrodes
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    /// Montage index (file order) of a label, matched case-insensitively.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.name_index.get(&normalize_label(name)).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Electrode> {
        self.index_of(name).map(|i| &self.electrodes[i])
    }

    pub fn position(&self, name: &str) -> Result<(usize, usize), MontageError> {
        self.get(name)
            .map(|e| (e.row, e.col))
            .ok_or_else(|| MontageError::UnknownElectrode(name.to_string()))
    }

    /// Canonical spelling of a label as it appears in the mapping file.
    pub fn canonical(&self, name: &str) -> Option<&str> {
        self.get(name).map(|e| e.name.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.electrodes.iter().map(|e| e.name.as_str())
    }

    /// Electrodes occupying one grid row, ordered by column.
    pub fn row(&self, row: usize) -> Vec<&Electrode> {
        let mut v: Vec<_> = self.electrodes.iter().filter(|e| e.row == row).collect();
        v.sort_by_key(|e| e.col);
        v
    }

    /// Electrode at a cell, if any.
    pub fn at(&self, row: usize, col: usize) -> Option<&Electrode> {
        self.electrodes.iter().find(|e| e.row == row && e.col == col)
    }

    /// Serializes back to the mapping-file format.
    pub fn to_mapping_file(&self) -> String {
        let mut out = format!("#! n = {}\n", self.n);
        for e in &self.electrodes {
            let _ = writeln!(out, "{},{},{}", e.name, e.row, e.col);
        }
        out
    }
}

/// Parses mapping-file content into a validated [`GridLayout`].
///
/// The grid order comes from a `#! n = <order>` pragma when present, and is
/// otherwise the smallest order containing every coordinate.
pub fn load_grid_layout(source: &str) -> Result<GridLayout, MontageError> {
    let mut declared_n = None;
    let mut electrodes = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if let Some(pragma) = line.strip_prefix("#!") {
            declared_n = Some(parse_order_pragma(pragma).ok_or_else(|| MontageError::Parse {
                line: line_no,
                reason: format!("bad pragma {pragma:?}, expected `n = <order>`"),
            })?);
            continue;
        }
        let body = match line.find('#') {
            Some(p) => line[..p].trim(),
            None => line,
        };
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if fields.len() != 3 || fields[0].is_empty() {
            return Err(MontageError::Parse {
                line: line_no,
                reason: format!("expected NAME,row,col, got {body:?}"),
            });
        }
        let coord = |s: &str| {
            s.parse::<usize>().map_err(|_| MontageError::Parse {
                line: line_no,
                reason: format!("coordinate {s:?} is not a nonnegative integer"),
            })
        };
        electrodes.push(Electrode {
            name: fields[0].to_string(),
            row: coord(fields[1])?,
            col: coord(fields[2])?,
        });
    }
    let n = match declared_n {
        Some(n) => n,
        None => electrodes
            .iter()
            .map(|e| e.row.max(e.col) + 1)
            .max()
            .unwrap_or(0),
    };
    GridLayout::new(n, electrodes)
}

fn parse_order_pragma(pragma: &str) -> Option<usize> {
    let (key, value) = pragma.split_once('=')?;
    if key.trim() != "n" {
        return None;
    }
    value.trim().parse().ok().filter(|&n| n > 0)
}

/// Nonnegative mass over an N×N grid, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMap<T> {
    n: usize,
    mass: Vec<T>,
}

impl<T: Real> SpatialMap<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            mass: vec![T::zero(); n * n],
        }
    }

    /// Builds a map from row-major values, rejecting negative or non-finite
    /// entries.
    pub fn from_row_major(n: usize, mass: Vec<T>) -> Result<Self, MontageError> {
        if mass.len() != n * n {
            return Err(MontageError::NotSquare { found: mass.len() });
        }
        for (i, &v) in mass.iter().enumerate() {
            let (row, col) = (i / n.max(1), i % n.max(1));
            if !v.is_finite_value() {
                return Err(MontageError::NonFinite {
                    row,
                    col,
                    value: v.as_f64(),
                });
            }
            if v < T::zero() {
                return Err(MontageError::NegativeWeight {
                    name: format!("cell({row},{col})"),
                    weight: v.as_f64(),
                });
            }
        }
        Ok(Self { n, mass })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.mass[row * self.n + col]
    }

    pub(crate) fn add(&mut self, row: usize, col: usize, v: T) {
        self.mass[row * self.n + col] += v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.mass
    }

    pub fn total(&self) -> T {
        self.mass.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    /// Cells with strictly positive mass as `((row, col), mass)`, row-major.
    pub fn support(&self) -> Vec<((usize, usize), T)> {
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > T::zero())
            .map(|(i, &v)| ((i / self.n, i % self.n), v))
            .collect()
    }

    /// Every entry multiplied by `factor` (which must be nonnegative).
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            n: self.n,
            mass: self.mass.iter().map(|&v| v * factor).collect(),
        }
    }

    /// Writes the map as CSV: `n` lines of `n` comma-separated masses.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.n {
            let line: Vec<String> = (0..self.n).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form written by [`SpatialMap::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, MontageError> {
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map(T::lit)
                        .map_err(|_| MontageError::Parse {
                            line: idx + 1,
                            reason: format!("bad mass {s:?}"),
                        })
                })
                .collect::<Result<Vec<T>, _>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(MontageError::NotSquare { found: n });
        }
        Self::from_row_major(n, rows.into_iter().flatten().collect())
    }
}

/// Marks each named electrode's cell with mass 1.
///
/// Names are treated as a set: repeated labels count once, so the total
/// mass equals the number of distinct electrodes.
pub fn binary_map<T, I, S>(channels: I, layout: &GridLayout) -> Result<SpatialMap<T>, MontageError>
where
    T: Real,
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut map = SpatialMap::zeros(layout.order());
    let mut seen = vec![false; layout.len()];
    for name in channels {
        let name = name.as_ref();
        let idx = layout
            .index_of(name)
            .ok_or_else(|| MontageError::UnknownElectrode(name.to_string()))?;
        if !std::mem::replace(&mut seen[idx], true) {
            let e = &layout.electrodes()[idx];
            map.add(e.row, e.col, T::one());
        }
    }
    Ok(map)
}

/// Places each electrode's weight at its cell; unlisted electrodes get 0.
pub fn weighted_map<T, I, S>(weights: I, layout: &GridLayout) -> Result<SpatialMap<T>, MontageError>
where
    T: Real,
    I: IntoIterator<Item = (S, T)>,
    S: AsRef<str>,
{
    let mut map = SpatialMap::zeros(layout.order());
    let mut any_positive = false;
    for (name, w) in weights {
        let name = name.as_ref();
        let (row, col) = layout.position(name)?;
        if !w.is_finite_value() {
            return Err(MontageError::NonFinite {
                row,
                col,
                value: w.as_f64(),
            });
        }
        if w < T::zero() {
            return Err(MontageError::NegativeWeight {
                name: name.to_string(),
                weight: w.as_f64(),
            });
        }
        any_positive |= w > T::zero();
        map.add(row, col, w);
    }
    if !any_positive {
        return Err(MontageError::ZeroWeights);
    }
    Ok(map)
}
