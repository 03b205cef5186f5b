//! Reference linear-programming solver for transport problems.
//!
//! Dense two-phase tableau simplex with Bland's rule over the complete flow
//! polytope: one variable per (source cell, destination cell) pair, one
//! equality per source and per destination, zero-mass cells included. It
//! shares no code with the production transportation simplex.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, Zero};

/// Ordered field the oracle can pivot in.
pub trait OracleField: Clone + PartialOrd + Num + Signed + Debug {
    /// Values with magnitude at or below this are treated as zero.
    fn tolerance() -> Self;
    fn from_int(v: i64) -> Self;

    fn is_pos(&self) -> bool {
        *self > Self::tolerance()
    }

    fn is_neg(&self) -> bool {
        *self < -Self::tolerance()
    }
}

impl OracleField for f64 {
    fn tolerance() -> Self {
        1e-11
    }

    fn from_int(v: i64) -> Self {
        v as f64
    }
}

impl OracleField for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome<F> {
    Optimal { value: F, x: Vec<F> },
    Infeasible,
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`, with `b ≥ 0`.
pub fn minimize_equality<F: OracleField>(a: &[Vec<F>], b: &[F], c: &[F]) -> OracleOutcome<F> {
    let rows = a.len();
    let vars = c.len();
    // Tableau columns: original vars, artificials, rhs.
    let width = vars + rows + 1;
    let mut t: Vec<Vec<F>> = Vec::with_capacity(rows);
    for (i, row) in a.iter().enumerate() {
        let mut r = vec![F::zero(); width];
        r[..vars].clone_from_slice(row);
        r[vars + i] = F::one();
        r[width - 1] = b[i].clone();
        t.push(r);
    }
    let mut basis: Vec<usize> = (vars..vars + rows).collect();

    // Phase I: minimize the sum of artificials.
    let mut phase1 = vec![F::zero(); vars + rows];
    for p in phase1.iter_mut().skip(vars) {
        *p = F::one();
    }
    run_simplex(&mut t, &mut basis, &phase1, vars + rows);
    let infeasibility = basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= vars)
        .fold(F::zero(), |acc, (i, _)| acc + t[i][width - 1].clone());
    if infeasibility.is_pos() {
        return OracleOutcome::Infeasible;
    }

    // Drive remaining (zero-level) artificials out of the basis; rows
    // where that is impossible are redundant and dropped.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= vars {
            if let Some(j) = (0..vars).find(|&j| t[i][j].abs().is_pos()) {
                pivot(&mut t, &mut basis, i, j);
                i += 1;
            } else {
                t.remove(i);
                basis.remove(i);
            }
        } else {
            i += 1;
        }
    }
    // Forbid artificials from re-entering.
    for row in t.iter_mut() {
        for v in row.iter_mut().skip(vars).take(rows) {
            *v = F::zero();
        }
    }

    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(F::zero(), rows));
    run_simplex(&mut t, &mut basis, &phase2, vars);

    let mut x = vec![F::zero(); vars];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < vars {
            x[bv] = t[i][width - 1].clone();
        }
    }
    let value = x
        .iter()
        .zip(c)
        .fold(F::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    OracleOutcome::Optimal { value, x }
}

/// Bland's rule: smallest-index improving column, smallest-index basic
/// variable among ratio ties.
fn run_simplex<F: OracleField>(t: &mut [Vec<F>], basis: &mut [usize], cost: &[F], eligible: usize) {
    let width = t.first().map_or(0, Vec::len);
    loop {
        let entering = (0..eligible).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let mut reduced = cost[j].clone();
            for (i, &bv) in basis.iter().enumerate() {
                reduced = reduced - cost[bv].clone() * t[i][j].clone();
            }
            reduced.is_neg()
        });
        let Some(j) = entering else { return };

        let mut leave: Option<(usize, F)> = None;
        for i in 0..t.len() {
            if t[i][j].is_pos() {
                let ratio = t[i][width - 1].clone() / t[i][j].clone();
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((i, _)) = leave else {
            panic!("transport LP is bounded; unbounded direction indicates a bug");
        };
        pivot(t, basis, i, j);
    }
}

fn pivot<F: OracleField>(t: &mut [Vec<F>], basis: &mut [usize], r: usize, c: usize) {
    let p = t[r][c].clone();
    for v in t[r].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[c].clone();
        if f.is_zero() {
            continue;
        }
        for (v, pr) in row.iter_mut().zip(&pivot_row) {
            *v = v.clone() - f.clone() * pr.clone();
        }
    }
    basis[r] = c;
}

/// Optimal transport cost between two mass vectors over the complete
/// bipartite flow polytope. `cost[i][j]` is the unit cost from source `i`
/// to destination `j`.
pub fn transport_cost<F: OracleField>(supply: &[F], demand: &[F], cost: &[Vec<F>]) -> F {
    let (m, n) = (supply.len(), demand.len());
    let vars = m * n;
    let mut a = Vec::with_capacity(m + n);
    for i in 0..m {
        let mut row = vec![F::zero(); vars];
        for j in 0..n {
            row[i * n + j] = F::one();
        }
        a.push(row);
    }
    for j in 0..n {
        let mut row = vec![F::zero(); vars];
        for i in 0..m {
            row[i * n + j] = F::one();
        }
        a.push(row);
    }
    let mut b = supply.to_vec();
    b.extend_from_slice(demand);
    let c: Vec<F> = cost.iter().flat_map(|r| r.iter().cloned()).collect();
    match minimize_equality(&a, &b, &c) {
        OracleOutcome::Optimal { value, .. } => value,
        OracleOutcome::Infeasible => panic!("unbalanced transport instance given to oracle"),
    }
}

/// Grid-map EMD by the oracle: every cell of both `n×n` grids is a node.
pub fn grid_emd<F: OracleField>(
    n: usize,
    p: &[F],
    q: &[F],
    ground: impl Fn((usize, usize), (usize, usize)) -> F,
) -> F {
    let cells: Vec<(usize, usize)> = (0..n * n).map(|k| (k / n, k % n)).collect();
    let cost: Vec<Vec<F>> = cells
        .iter()
        .map(|&a| cells.iter().map(|&b| ground(a, b)).collect())
        .collect();
    transport_cost(p, q, &cost)
}

pub fn euclidean(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dr = a.0 as f64 - b.0 as f64;
    let dc = a.1 as f64 - b.1 as f64;
    (dr * dr + dc * dc).sqrt()
}

pub fn manhattan_rational(a: (usize, usize), b: (usize, usize)) -> BigRational {
    BigRational::from_int((a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as i64)
}

pub fn rational(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().expect("finite rational")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_transport_value() {
        let cost = vec![
            vec![19.0, 30.0, 50.0, 10.0],
            vec![70.0, 30.0, 40.0, 60.0],
            vec![40.0, 8.0, 70.0, 20.0],
        ];
        let v = transport_cost(&[7.0, 9.0, 18.0], &[5.0, 8.0, 7.0, 14.0], &cost);
        assert!((v - 743.0).abs() < 1e-9);
    }

    #[test]
    fn exact_rational_instance() {
        let s = [rational(1, 3), rational(2, 3)];
        let d = [rational(1, 2), rational(1, 2)];
        let cost = vec![
            vec![BigRational::from_int(0), BigRational::from_int(1)],
            vec![BigRational::from_int(1), BigRational::from_int(0)],
        ];
        assert_eq!(transport_cost(&s, &d, &cost), rational(1, 6));
    }

    #[test]
    fn grid_forced_move() {
        let mut p = vec![0.0; 16];
        let mut q = vec![0.0; 16];
        p[0] = 1.0;
        q[3] = 1.0;
        assert!((grid_emd(4, &p, &q, euclidean) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        let a = vec![vec![1.0, 1.0]];
        let out = minimize_equality(&a, &[1.0], &[1.0, 1.0]);
        assert!(matches!(out, OracleOutcome::Optimal { .. }));
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let out = minimize_equality(&a, &[1.0, 2.0], &[1.0, 1.0]);
        assert_eq!(out, OracleOutcome::Infeasible);
    }
}
