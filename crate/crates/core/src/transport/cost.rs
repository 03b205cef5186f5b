use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Ground metric between grid cells, in cell units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
}

impl Metric {
    pub fn distance<T: Real>(self, a: (usize, usize), b: (usize, usize)) -> T {
        let dr = T::from_usize_lossy(a.0.abs_diff(b.0));
        let dc = T::from_usize_lossy(a.1.abs_diff(b.1));
        match self {
            Metric::Euclidean => (dr * dr + dc * dc).sqrt(),
            Metric::Manhattan => dr + dc,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            other => Err(format!("unknown metric {other:?} (expected euclidean or manhattan)")),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
        })
    }
}

/// Dense `rows × cols` cost matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    costs: Vec<T>,
}

impl<T: Real> CostMatrix<T> {
    /// Wraps explicit costs. Returns `None` on a shape mismatch or a
    /// negative/non-finite entry.
    pub fn from_row_major(rows: usize, cols: usize, costs: Vec<T>) -> Option<Self> {
        let ok = costs.len() == rows * cols
            && costs.iter().all(|&c| c.is_finite_value() && c >= T::zero());
        ok.then_some(Self { rows, cols, costs })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.costs[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.costs
    }

    pub fn max_cost(&self) -> T {
        self.costs.iter().fold(T::zero(), |m, &c| m.max(c))
    }
}

/// Pairwise metric distances between two lists of cells.
pub fn ground_cost<T: Real>(
    src: &[(usize, usize)],
    dst: &[(usize, usize)],
    metric: Metric,
) -> CostMatrix<T> {
    let costs = src
        .iter()
        .flat_map(|&a| dst.iter().map(move |&b| metric.distance(a, b)))
        .collect();
    CostMatrix {
        rows: src.len(),
        cols: dst.len(),
        costs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let c = ground_cost::<f64>(&[(0, 0)], &[(3, 4)], Metric::Euclidean);
        assert_eq!(c.as_slice(), &[5.0]);
    }

    #[test]
    fn manhattan_diagonal_step() {
        let c = ground_cost::<f64>(&[(0, 0)], &[(1, 1)], Metric::Manhattan);
        assert_eq!(c.as_slice(), &[2.0]);
    }

    #[test]
    fn identical_lists_have_zero_diagonal() {
        let cells = [(0, 0), (2, 5), (7, 1), (10, 10)];
        for metric in [Metric::Euclidean, Metric::Manhattan] {
            let c = ground_cost::<f64>(&cells, &cells, metric);
            for i in 0..cells.len() {
                for j in 0..cells.len() {
                    assert_eq!(c.get(i, j) == 0.0, i == j);
                    assert_eq!(c.get(i, j), c.get(j, i));
                }
            }
        }
    }

    #[test]
    fn metric_parses() {
        assert_eq!("Euclidean".parse::<Metric>(), Ok(Metric::Euclidean));
        assert_eq!("manhattan".parse::<Metric>(), Ok(Metric::Manhattan));
        assert!("chebyshev".parse::<Metric>().is_err());
    }
}
