//! Exact Earth Mover's Distance between spatial maps.
//!
//! [`emd`] drops empty cells, builds the ground cost between the remaining
//! source and destination cells and solves the balanced transportation
//! problem exactly. The returned [`TransportPlan`] is indexed by grid cell.

mod cost;
mod solver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cost::{ground_cost, CostMatrix, Metric};

use crate::montage::SpatialMap;
use crate::scalar::Real;

/// Relative tolerance on equal totals in [`MassMode::Raw`].
pub const MASS_BALANCE_RTOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("total masses differ ({p} vs {q}); rebalance the maps or use normalized mass")]
    MassMismatch { p: f64, q: f64 },
    #[error("{which} map has zero total mass")]
    ZeroMass { which: &'static str },
    #[error("grid orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("marginals must be positive and finite")]
    InvalidMarginal,
    #[error("cost matrix is {rows}x{cols} but marginals have lengths {m} and {n}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        m: usize,
        n: usize,
    },
    #[error("target total must be positive, got {0}")]
    InvalidTarget(f64),
    #[error("transportation simplex hit its iteration limit ({0})")]
    IterationLimit(usize),
}

/// How map masses enter the transport problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassMode {
    /// Masses used as given; totals must agree.
    #[default]
    Raw,
    /// Each map divided by its total first.
    Normalized,
}

impl std::str::FromStr for MassMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(MassMode::Raw),
            "normalized" | "normalised" => Ok(MassMode::Normalized),
            other => Err(format!("unknown mass mode {other:?} (expected raw or normalized)")),
        }
    }
}

impl std::fmt::Display for MassMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MassMode::Raw => "raw",
            MassMode::Normalized => "normalized",
        })
    }
}

/// Flows between the occupied cells of two maps.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    src_cells: Vec<(usize, usize)>,
    dst_cells: Vec<(usize, usize)>,
    flows: Vec<T>,
    src_mass: Vec<T>,
    dst_mass: Vec<T>,
}

impl<T: Real> TransportPlan<T> {
    pub fn src_cells(&self) -> &[(usize, usize)] {
        &self.src_cells
    }

    pub fn dst_cells(&self) -> &[(usize, usize)] {
        &self.dst_cells
    }

    pub fn src_mass(&self) -> &[T] {
        &self.src_mass
    }

    pub fn dst_mass(&self) -> &[T] {
        &self.dst_mass
    }

    /// Flow between the `i`-th source and `j`-th destination cell.
    pub fn flow(&self, i: usize, j: usize) -> T {
        self.flows[i * self.dst_cells.len() + j]
    }

    /// Flow between two grid cells (zero when either cell is empty).
    pub fn flow_between(&self, src: (usize, usize), dst: (usize, usize)) -> T {
        let i = self.src_cells.iter().position(|&c| c == src);
        let j = self.dst_cells.iter().position(|&c| c == dst);
        match (i, j) {
            (Some(i), Some(j)) => self.flow(i, j),
            _ => T::zero(),
        }
    }

    /// Nonzero flows as `(src cell, dst cell, amount)`.
    pub fn entries(&self) -> Vec<((usize, usize), (usize, usize), T)> {
        let n = self.dst_cells.len();
        self.flows
            .iter()
            .enumerate()
            .filter(|(_, &f)| f > T::zero())
            .map(|(k, &f)| (self.src_cells[k / n], self.dst_cells[k % n], f))
            .collect()
    }

    pub fn row_sums(&self) -> Vec<T> {
        let n = self.dst_cells.len();
        self.flows
            .chunks(n.max(1))
            .map(|row| row.iter().fold(T::zero(), |a, &b| a + b))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        let n = self.dst_cells.len();
        let mut sums = vec![T::zero(); n];
        for (k, &f) in self.flows.iter().enumerate() {
            sums[k % n] += f;
        }
        sums
    }

    /// Largest marginal violation relative to the total mass.
    pub fn marginal_error(&self) -> T {
        let total = self.src_mass.iter().fold(T::zero(), |a, &b| a + b);
        let rows = self
            .row_sums()
            .iter()
            .zip(&self.src_mass)
            .fold(T::zero(), |m, (&s, &p)| m.max((s - p).abs()));
        let cols = self
            .col_sums()
            .iter()
            .zip(&self.dst_mass)
            .fold(T::zero(), |m, (&s, &q)| m.max((s - q).abs()));
        rows.max(cols) / total
    }

    /// `Σ C_ij T_ij` under a metric.
    pub fn cost(&self, metric: Metric) -> T {
        self.entries()
            .into_iter()
            .fold(T::zero(), |acc, (a, b, f)| acc + metric.distance::<T>(a, b) * f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmdResult<T> {
    pub distance: T,
    pub plan: TransportPlan<T>,
}

/// Solves a balanced transportation problem on an explicit cost matrix and
/// returns the optimal flows (row-major, `supply.len() × demand.len()`) and
/// the optimal cost.
pub fn solve_transport<T: Real>(
    supply: &[T],
    demand: &[T],
    cost: &CostMatrix<T>,
) -> Result<(Vec<T>, T), TransportError> {
    if cost.rows() != supply.len() || cost.cols() != demand.len() {
        return Err(TransportError::ShapeMismatch {
            rows: cost.rows(),
            cols: cost.cols(),
            m: supply.len(),
            n: demand.len(),
        });
    }
    let valid = |v: &[T]| !v.is_empty() && v.iter().all(|&x| x.is_finite_value() && x > T::zero());
    if !valid(supply) || !valid(demand) {
        return Err(TransportError::InvalidMarginal);
    }
    let sol = solver::solve(supply, demand, cost).map_err(|e| match e {
        solver::SolveFailure::IterationLimit(k) => TransportError::IterationLimit(k),
    })?;
    let n = demand.len();
    let value = sol
        .flows
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (k, &f)| acc + f * cost.get(k / n, k % n));
    Ok((sol.flows, value))
}

/// Earth Mover's Distance between two maps of the same grid order.
pub fn emd<T: Real>(
    p: &SpatialMap<T>,
    q: &SpatialMap<T>,
    metric: Metric,
    mass_mode: MassMode,
) -> Result<EmdResult<T>, TransportError> {
    if p.order() != q.order() {
        return Err(TransportError::OrderMismatch(p.order(), q.order()));
    }
    let (tp, tq) = (p.total(), q.total());
    if tp <= T::zero() {
        return Err(TransportError::ZeroMass { which: "first" });
    }
    if tq <= T::zero() {
        return Err(TransportError::ZeroMass { which: "second" });
    }

    let (src, dst) = (p.support(), q.support());
    let src_cells: Vec<_> = src.iter().map(|&(c, _)| c).collect();
    let dst_cells: Vec<_> = dst.iter().map(|&(c, _)| c).collect();
    let mut supply: Vec<T> = src.iter().map(|&(_, m)| m).collect();
    let mut demand: Vec<T> = dst.iter().map(|&(_, m)| m).collect();

    match mass_mode {
        MassMode::Raw => {
            let rel = (tp - tq).abs() / tp.max(tq);
            if rel > T::lit(MASS_BALANCE_RTOL) {
                return Err(TransportError::MassMismatch {
                    p: tp.as_f64(),
                    q: tq.as_f64(),
                });
            }
            // Absorb rounding-level imbalance into the destination side.
            if tp != tq {
                let k = tp / tq;
                demand.iter_mut().for_each(|d| *d *= k);
            }
        }
        MassMode::Normalized => {
            supply.iter_mut().for_each(|s| *s /= tp);
            demand.iter_mut().for_each(|d| *d /= tq);
        }
    }

    let cost = ground_cost::<T>(&src_cells, &dst_cells, metric);
    let (flows, distance) = solve_transport(&supply, &demand, &cost)?;
    Ok(EmdResult {
        distance,
        plan: TransportPlan {
            src_cells,
            dst_cells,
            flows,
            src_mass: supply,
            dst_mass: demand,
        },
    })
}

/// Scales both maps so each totals `target_total`.
pub fn rebalance<T: Real>(
    p: &SpatialMap<T>,
    q: &SpatialMap<T>,
    target_total: T,
) -> Result<(SpatialMap<T>, SpatialMap<T>), TransportError> {
    if !(target_total > T::zero()) || !target_total.is_finite_value() {
        return Err(TransportError::InvalidTarget(target_total.as_f64()));
    }
    let (tp, tq) = (p.total(), q.total());
    if tp <= T::zero() {
        return Err(TransportError::ZeroMass { which: "first" });
    }
    if tq <= T::zero() {
        return Err(TransportError::ZeroMass { which: "second" });
    }
    let scale = |m: &SpatialMap<T>, t: T| {
        if t == target_total {
            m.clone()
        } else {
            m.scaled(target_total / t)
        }
    };
    Ok((scale(p, tp), scale(q, tq)))
}
