//! Classification metrics, chance levels, subject selection, cohort
//! summaries and the Wilcoxon signed-rank test.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("inputs differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("class {0:?} has no examples")]
    EmptyClass(String),
    #[error("all paired differences are zero")]
    AllZero,
    #[error("{0} nonzero differences; at least {MIN_PAIRS} required")]
    TooFewPairs(usize),
    #[error("subject {0:?} missing from one of the inputs")]
    KeyMismatch(String),
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
}

/// Smallest number of nonzero differences accepted by the signed-rank test.
pub const MIN_PAIRS: usize = 5;

/// Largest `n` for which `Auto` enumerates the exact null distribution.
pub const EXACT_MAX_PAIRS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub per_class_recall: BTreeMap<String, f64>,
    pub support: BTreeMap<String, usize>,
    /// Support-weighted: total correct over total examples.
    pub overall: f64,
    /// Unweighted mean of per-class recalls.
    pub macro_overall: f64,
    pub n_test: usize,
}

impl EvalResult {
    /// From `(class, correct, support)` triples.
    pub fn from_counts<S: AsRef<str>>(counts: &[(S, usize, usize)]) -> Result<Self, StatsError> {
        if counts.is_empty() {
            return Err(StatsError::Empty);
        }
        let mut per_class_recall = BTreeMap::new();
        let mut support = BTreeMap::new();
        let (mut correct_total, mut n_test) = (0, 0);
        for (class, correct, n) in counts {
            let class = class.as_ref();
            if *n == 0 {
                return Err(StatsError::EmptyClass(class.to_string()));
            }
            debug_assert!(correct <= n);
            per_class_recall.insert(class.to_string(), *correct as f64 / *n as f64);
            support.insert(class.to_string(), *n);
            correct_total += correct;
            n_test += n;
        }
        let macro_overall = per_class_recall.values().sum::<f64>() / per_class_recall.len() as f64;
        Ok(Self {
            per_class_recall,
            support,
            overall: correct_total as f64 / n_test as f64,
            macro_overall,
            n_test,
        })
    }
}

/// Per-class recall and both overall accuracies; classes are the distinct
/// true labels.
pub fn evaluate<P: AsRef<str>, L: AsRef<str>>(predicted: &[P], actual: &[L]) -> Result<EvalResult, StatsError> {
    if predicted.len() != actual.len() {
        return Err(StatsError::LengthMismatch(predicted.len(), actual.len()));
    }
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (p, a) in predicted.iter().zip(actual) {
        let entry = tally.entry(a.as_ref()).or_default();
        entry.1 += 1;
        if p.as_ref() == a.as_ref() {
            entry.0 += 1;
        }
    }
    let counts: Vec<(&str, usize, usize)> = tally.into_iter().map(|(c, (k, n))| (c, k, n)).collect();
    EvalResult::from_counts(&counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChanceMethod {
    /// Proportion of the most frequent class.
    Majority,
    /// One-sided upper `1 − alpha` bound of guessing among `k` classes:
    /// `1/k + z_{1−α}·√((1/k)(1 − 1/k)/n)`.
    BinomialCi { alpha: f64 },
}

impl Default for ChanceMethod {
    fn default() -> Self {
        Self::Majority
    }
}

pub fn chance_level<L: AsRef<str>>(labels: &[L], method: ChanceMethod) -> Result<f64, StatsError> {
    if labels.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_ref()).or_default() += 1;
    }
    let n = labels.len() as f64;
    match method {
        ChanceMethod::Majority => Ok(*counts.values().max().expect("non-empty") as f64 / n),
        ChanceMethod::BinomialCi { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(StatsError::Alpha(alpha));
            }
            let p = 1.0 / counts.len().max(2) as f64;
            let z = Normal::standard().inverse_cdf(1.0 - alpha);
            Ok(p + z * (p * (1.0 - p) / n).sqrt())
        }
    }
}

/// Subjects whose overall accuracy is at least `chance + margin`, in key
/// order.
pub fn select_subjects(
    results: &BTreeMap<String, EvalResult>,
    chance: &BTreeMap<String, f64>,
    margin: f64,
) -> Result<Vec<String>, StatsError> {
    if let Some(k) = results.keys().find(|k| !chance.contains_key(*k)) {
        return Err(StatsError::KeyMismatch(k.clone()));
    }
    if let Some(k) = chance.keys().find(|k| !results.contains_key(*k)) {
        return Err(StatsError::KeyMismatch(k.clone()));
    }
    // slack absorbs rounding in chance + margin so the boundary is inclusive
    Ok(results
        .iter()
        .filter(|(k, r)| r.overall >= chance[*k] + margin - 1e-12)
        .map(|(k, _)| k.clone())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// `n − 1` denominator.
    #[default]
    Sample,
    /// `n` denominator.
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub mean: T,
    pub sd: T,
    pub n: usize,
}

/// Mean and sample standard deviation; a single value has `sd = 0`.
pub fn cohort_summary<T: Real>(values: &[T]) -> Result<Summary<T>, StatsError> {
    cohort_summary_with(values, SdConvention::Sample)
}

pub fn cohort_summary_with<T: Real>(values: &[T], convention: SdConvention) -> Result<Summary<T>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = values.len();
    let nt = T::from_usize_lossy(n);
    let mean = values.iter().fold(T::zero(), |a, &v| a + v) / nt;
    let ss = values.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean));
    let denom = match convention {
        SdConvention::Sample if n > 1 => T::from_usize_lossy(n - 1),
        SdConvention::Sample => return Ok(Summary { mean, sd: T::zero(), n }),
        SdConvention::Population => nt,
    };
    Ok(Summary {
        mean,
        sd: (ss / denom).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMode {
    /// Enumerate the null distribution of the signed-rank sum.
    Exact,
    /// Normal approximation with tie correction, no continuity correction.
    NormalApprox,
    /// Exact for at most [`EXACT_MAX_PAIRS`] pairs without ties or zero
    /// differences, otherwise the normal approximation.
    #[default]
    Auto,
}

impl FromStr for WilcoxonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "normal-approx" | "normal" => Ok(Self::NormalApprox),
            "auto" => Ok(Self::Auto),
            other => Err(format!("unknown Wilcoxon mode {other:?}")),
        }
    }
}

impl fmt::Display for WilcoxonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::NormalApprox => "normal-approx",
            Self::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    /// `min(W+, W−)`.
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub n_pairs: usize,
    pub zero_dropped: usize,
    /// `Exact` or `NormalApprox`, never `Auto`.
    pub mode: WilcoxonMode,
}

/// Mid-ranks (1-based) of `values`; entries within `tol` of their sorted
/// neighbour share a rank.
fn mid_ranks(values: &[f64], tol: f64) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] - values[order[j - 1]] <= tol {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Two-sided exact p-value for `W+ = w_plus` with the given ranks. Ranks
/// are doubled so mid-ranks become integers.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    // counts[s] = number of sign assignments with doubled W+ equal to s
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = counts[..=w].iter().sum::<f64>() / all;
    let upper: f64 = counts[w..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Paired two-sided Wilcoxon signed-rank test of `x − y`.
///
/// Zero differences are dropped and equal absolute differences share a
/// mid-rank. Equality is exact floating-point equality, so differences of
/// decimal data that are equal as printed may rank apart; see
/// [`wilcoxon_signed_rank_with`].
pub fn wilcoxon_signed_rank<T: Real>(x: &[T], y: &[T], mode: WilcoxonMode) -> Result<PairedTestResult, StatsError> {
    wilcoxon_signed_rank_with(x, y, mode, 0.0)
}

/// As [`wilcoxon_signed_rank`], treating differences within
/// `tie_rtol · max|x − y|` of each other (or of zero) as equal.
pub fn wilcoxon_signed_rank_with<T: Real>(
    x: &[T],
    y: &[T],
    mode: WilcoxonMode,
    tie_rtol: f64,
) -> Result<PairedTestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(&a, &b)| (a - b).as_f64()).collect();
    let scale = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let tol = tie_rtol * scale;
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| d.abs() > tol).collect();
    let zero_dropped = diffs.len() - nonzero.len();
    if nonzero.is_empty() {
        return Err(StatsError::AllZero);
    }
    let n = nonzero.len();
    if n < MIN_PAIRS {
        return Err(StatsError::TooFewPairs(n));
    }

    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = mid_ranks(&abs, tol);
    let w_plus: f64 = ranks.iter().zip(&nonzero).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let w_minus = (n * (n + 1)) as f64 / 2.0 - w_plus;
    let statistic = w_plus.min(w_minus);

    let mode = match mode {
        WilcoxonMode::Auto if n <= EXACT_MAX_PAIRS && ties.is_empty() && zero_dropped == 0 => WilcoxonMode::Exact,
        WilcoxonMode::Auto => WilcoxonMode::NormalApprox,
        m => m,
    };
    let p_value = match mode {
        WilcoxonMode::Exact => exact_p(&ranks, w_plus),
        _ => {
            let nf = n as f64;
            let mean = nf * (nf + 1.0) / 4.0;
            let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
            let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
            let z = (statistic - mean) / var.sqrt();
            (2.0 * Normal::standard().cdf(-z.abs())).min(1.0)
        }
    };
    Ok(PairedTestResult {
        statistic,
        p_value,
        n_pairs: n,
        zero_dropped,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct() {
        let labels = ["left", "right", "left"];
        let r = evaluate(&labels, &labels).unwrap();
        assert_eq!(r.overall, 1.0);
        assert_eq!(r.macro_overall, 1.0);
        assert!(r.per_class_recall.values().all(|&v| v == 1.0));
        assert_eq!(r.n_test, 3);
    }

    #[test]
    fn macro_of_unequal_recalls() {
        let r = EvalResult::from_counts(&[("left", 8, 10), ("right", 6, 10)]).unwrap();
        assert!((r.macro_overall - 0.7).abs() < 1e-15);
        assert!((r.overall - 0.7).abs() < 1e-15);
    }

    #[test]
    fn evaluate_errors() {
        assert_eq!(evaluate(&["a"], &["a", "b"]), Err(StatsError::LengthMismatch(1, 2)));
        assert_eq!(evaluate::<&str, &str>(&[], &[]), Err(StatsError::Empty));
        assert_eq!(
            EvalResult::from_counts(&[("a", 0, 0)]),
            Err(StatsError::EmptyClass("a".into()))
        );
    }

    #[test]
    fn chance_levels() {
        let balanced = ["l", "r", "l", "r"];
        assert_eq!(chance_level(&balanced, ChanceMethod::Majority).unwrap(), 0.5);
        let skewed: Vec<&str> = std::iter::repeat_n("l", 56).chain(std::iter::repeat_n("r", 37)).collect();
        assert!((chance_level(&skewed, ChanceMethod::Majority).unwrap() - 56.0 / 93.0).abs() < 1e-15);
        let ci = chance_level(&skewed, ChanceMethod::BinomialCi { alpha: 0.05 }).unwrap();
        assert!((ci - 0.5853).abs() < 5e-5, "{ci}");
        assert!(chance_level::<&str>(&[], ChanceMethod::Majority).is_err());
        assert!(chance_level(&balanced, ChanceMethod::BinomialCi { alpha: 0.0 }).is_err());
    }

    fn result(overall: f64) -> EvalResult {
        EvalResult {
            per_class_recall: BTreeMap::new(),
            support: BTreeMap::new(),
            overall,
            macro_overall: overall,
            n_test: 1,
        }
    }

    #[test]
    fn subject_selection() {
        let results: BTreeMap<String, EvalResult> =
            [("a".to_string(), result(0.736)), ("b".to_string(), result(0.6)), ("c".to_string(), result(0.59))].into();
        let chance: BTreeMap<String, f64> = [("a".into(), 0.581), ("b".into(), 0.5), ("c".into(), 0.5)].into();
        assert_eq!(select_subjects(&results, &chance, 0.10).unwrap(), ["a", "b"]);
        assert!(select_subjects(&BTreeMap::new(), &BTreeMap::new(), 0.1).unwrap().is_empty());
        let mut missing = chance.clone();
        missing.remove("c");
        assert_eq!(
            select_subjects(&results, &missing, 0.1),
            Err(StatsError::KeyMismatch("c".into()))
        );
    }

    #[test]
    fn summaries() {
        let s = cohort_summary(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.sd - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(cohort_summary(&[4.0f32; 5]).unwrap().sd, 0.0);
        assert_eq!(cohort_summary(&[9.0]).unwrap().sd, 0.0);
        let p = cohort_summary_with(&[1.0, 3.0], SdConvention::Population).unwrap();
        assert_eq!(p.sd, 1.0);
        assert!(cohort_summary::<f64>(&[]).is_err());
    }

    #[test]
    fn mid_ranks_share_ties() {
        let (r, ties) = mid_ranks(&[3.0, 1.0, 3.0, 2.0], 0.0);
        assert_eq!(r, [3.5, 1.0, 3.5, 2.0]);
        assert_eq!(ties, [2]);
    }

    #[test]
    fn exact_distribution_small_case() {
        // n = 5, all positive: W+ = 15 is the single most extreme of 32
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.0; 5];
        let r = wilcoxon_signed_rank(&x, &y, WilcoxonMode::Exact).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 2.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_errors() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(wilcoxon_signed_rank(&x, &x, WilcoxonMode::Exact), Err(StatsError::AllZero));
        assert_eq!(
            wilcoxon_signed_rank(&x, &x[..4], WilcoxonMode::Exact),
            Err(StatsError::LengthMismatch(5, 4))
        );
        let y = [1.0, 2.0, 3.0, 3.0, 4.0];
        assert_eq!(wilcoxon_signed_rank(&x, &y, WilcoxonMode::Exact), Err(StatsError::TooFewPairs(2)));
    }

    #[test]
    fn auto_picks_mode() {
        let x = [1.1, 2.3, 3.6, 4.0, 5.5, 6.1];
        let y = [0.0, 0.2, 0.4, 0.5, 0.1, 0.3];
        assert_eq!(wilcoxon_signed_rank(&x, &y, WilcoxonMode::Auto).unwrap().mode, WilcoxonMode::Exact);
        let tied = [1.0, 1.0, 3.0, 4.0, 5.5, 6.1];
        let zero = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(
            wilcoxon_signed_rank(&tied, &zero, WilcoxonMode::Auto).unwrap().mode,
            WilcoxonMode::NormalApprox
        );
    }
}
