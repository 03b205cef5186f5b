//! Exact transportation-problem solver (primal transportation simplex).
//!
//! The basis is a spanning tree over `m` supply and `n` demand nodes with
//! `m + n - 1` basic cells. Each pivot prices nonbasic cells with node
//! potentials, pushes flow around the cycle closed by the entering cell and
//! drops one blocking cell. Dantzig pricing is used until a streak of
//! degenerate pivots is seen, after which Bland's smallest-index rule takes
//! over to rule out cycling.

use std::collections::VecDeque;

use super::cost::CostMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Solution<T> {
    pub flows: Vec<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SolveFailure {
    IterationLimit(usize),
}

const DEGENERATE_STREAK_FOR_BLAND: usize = 32;

/// Solves `min Σ c_ij x_ij` subject to row sums `supply`, column sums
/// `demand`, `x ≥ 0`. Both marginals must be strictly positive and have
/// (numerically) equal totals.
pub(crate) fn solve<T: Real>(
    supply: &[T],
    demand: &[T],
    cost: &CostMatrix<T>,
) -> Result<Solution<T>, SolveFailure> {
    let m = supply.len();
    let n = demand.len();
    debug_assert_eq!(cost.rows(), m);
    debug_assert_eq!(cost.cols(), n);

    let mut flows = vec![T::zero(); m * n];
    let mut basic = vec![false; m * n];
    northwest_corner(supply, demand, &mut flows, &mut basic);

    if m == 1 || n == 1 {
        return Ok(Solution {
            flows,
            iterations: 0,
        });
    }

    let tol = T::epsilon() * T::lit(64.0) * (T::one() + cost.max_cost());
    let max_iter = 100 * (m * n) + 1000;
    let mut u = vec![T::zero(); m];
    let mut v = vec![T::zero(); n];
    let mut degenerate_streak = 0usize;
    let mut tree = Tree::new(m, n);

    for iteration in 0..max_iter {
        tree.rebuild(&basic, m, n);
        tree.potentials(cost, &mut u, &mut v);

        let use_bland = degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND;
        let Some((ei, ej)) = entering_cell(cost, &basic, &u, &v, tol, use_bland) else {
            return Ok(Solution {
                flows,
                iterations: iteration,
            });
        };

        // Cycle: entering (ei, ej) gets +, then alternate - / + along the
        // tree path from column ej back to row ei.
        let path = tree.path_col_to_row(ej, ei);
        let mut theta = None::<T>;
        let mut leaving = usize::MAX;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = flows[cell];
                let better = match theta {
                    None => true,
                    Some(t) => f < t || (f == t && cell < leaving),
                };
                if better {
                    theta = Some(f);
                    leaving = cell;
                }
            }
        }
        let theta = theta.expect("cycle has at least one decreasing cell");
        degenerate_streak = if theta > T::zero() {
            0
        } else {
            degenerate_streak + 1
        };

        let entering = ei * n + ej;
        flows[entering] = theta;
        basic[entering] = true;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                flows[cell] -= theta;
            } else {
                flows[cell] += theta;
            }
        }
        flows[leaving] = T::zero();
        basic[leaving] = false;
    }
    Err(SolveFailure::IterationLimit(max_iter))
}

fn northwest_corner<T: Real>(supply: &[T], demand: &[T], flows: &mut [T], basic: &mut [bool]) {
    let (m, n) = (supply.len(), demand.len());
    let mut rs = supply.to_vec();
    let mut rd = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let x = rs[i].min(rd[j]);
        flows[i * n + j] = x;
        basic[i * n + j] = true;
        rs[i] -= x;
        rd[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i < m - 1 && (j == n - 1 || rs[i] <= rd[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
}

fn entering_cell<T: Real>(
    cost: &CostMatrix<T>,
    basic: &[bool],
    u: &[T],
    v: &[T],
    tol: T,
    bland: bool,
) -> Option<(usize, usize)> {
    let n = v.len();
    let mut best: Option<(T, usize, usize)> = None;
    for (i, &ui) in u.iter().enumerate() {
        for (j, &vj) in v.iter().enumerate() {
            if basic[i * n + j] {
                continue;
            }
            let reduced = cost.get(i, j) - ui - vj;
            if reduced < -tol {
                if bland {
                    return Some((i, j));
                }
                if best.is_none_or(|(b, _, _)| reduced < b) {
                    best = Some((reduced, i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Basis tree over nodes `0..m` (rows) and `m..m+n` (columns).
struct Tree {
    adjacency: Vec<Vec<(usize, usize)>>,
    parent: Vec<Option<(usize, usize)>>,
    order: Vec<usize>,
    m: usize,
    n: usize,
}

impl Tree {
    fn new(m: usize, n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); m + n],
            parent: vec![None; m + n],
            order: Vec::with_capacity(m + n),
            m,
            n,
        }
    }

    fn rebuild(&mut self, basic: &[bool], m: usize, n: usize) {
        for adj in &mut self.adjacency {
            adj.clear();
        }
        for i in 0..m {
            for j in 0..n {
                let cell = i * n + j;
                if basic[cell] {
                    self.adjacency[i].push((m + j, cell));
                    self.adjacency[m + j].push((i, cell));
                }
            }
        }
        // BFS from row 0 records parents and a visiting order.
        self.parent.iter_mut().for_each(|p| *p = None);
        self.order.clear();
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(node) = queue.pop_front() {
            self.order.push(node);
            for &(next, cell) in &self.adjacency[node] {
                if !seen[next] {
                    seen[next] = true;
                    self.parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        debug_assert_eq!(self.order.len(), m + n, "basis must span all nodes");
    }

    fn potentials<T: Real>(&self, cost: &CostMatrix<T>, u: &mut [T], v: &mut [T]) {
        let m = self.m;
        u[0] = T::zero();
        for &node in &self.order[1..] {
            let (p, cell) = self.parent[node].expect("non-root node has a parent");
            let (i, j) = (cell / self.n, cell % self.n);
            if node >= m {
                // column node, parent is row i
                debug_assert_eq!(p, i);
                v[node - m] = cost.get(i, j) - u[i];
            } else {
                u[node] = cost.get(i, j) - v[j];
            }
        }
    }

    /// Cells on the tree path from column `col` to row `row`, in walking
    /// order starting at the column.
    fn path_col_to_row(&self, col: usize, row: usize) -> Vec<usize> {
        let start = self.m + col;
        let ancestors = |mut node: usize| {
            let mut chain = vec![node];
            while let Some((p, _)) = self.parent[node] {
                chain.push(p);
                node = p;
            }
            chain
        };
        let a = ancestors(start);
        let b = ancestors(row);
        let on_b: std::collections::HashSet<usize> = b.iter().copied().collect();
        let lca = *a.iter().find(|x| on_b.contains(x)).expect("tree is connected");

        let mut cells = Vec::new();
        let mut node = start;
        while node != lca {
            let (p, cell) = self.parent[node].unwrap();
            cells.push(cell);
            node = p;
        }
        let mut tail = Vec::new();
        let mut node = row;
        while node != lca {
            let (p, cell) = self.parent[node].unwrap();
            tail.push(cell);
            node = p;
        }
        cells.extend(tail.into_iter().rev());
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cost(rows: usize, cols: usize, c: &[f64]) -> CostMatrix<f64> {
        CostMatrix::from_row_major(rows, cols, c.to_vec()).unwrap()
    }

    fn objective(c: &CostMatrix<f64>, flows: &[f64]) -> f64 {
        flows
            .iter()
            .enumerate()
            .map(|(k, f)| f * c.get(k / c.cols(), k % c.cols()))
            .sum()
    }

    #[test]
    fn textbook_instance() {
        // Classic 3x4 example with known optimum 743.
        let c = cost(
            3,
            4,
            &[
                19.0, 30.0, 50.0, 10.0, 70.0, 30.0, 40.0, 60.0, 40.0, 8.0, 70.0, 20.0,
            ],
        );
        let sol = solve(&[7.0, 9.0, 18.0], &[5.0, 8.0, 7.0, 14.0], &c).unwrap();
        assert_eq!(objective(&c, &sol.flows), 743.0);
    }

    #[test]
    fn degenerate_instance_terminates() {
        // Equal partial sums force degenerate pivots.
        let c = cost(3, 3, &[1.0, 2.0, 3.0, 3.0, 1.0, 2.0, 2.0, 3.0, 1.0]);
        let sol = solve(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &c).unwrap();
        assert_eq!(objective(&c, &sol.flows), 3.0);
    }

    #[test]
    fn single_source() {
        let c = cost(1, 3, &[1.0, 2.0, 3.0]);
        let sol = solve(&[6.0], &[1.0, 2.0, 3.0], &c).unwrap();
        assert_eq!(sol.flows, vec![1.0, 2.0, 3.0]);
    }
}
