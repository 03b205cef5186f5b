//! Backward-elimination channel selection.
//!
//! Starting from every channel, each iteration tries removing each remaining
//! channel, scores the subset by the summed pairwise Riemannian distance
//! between class centroids, and permanently drops the channel whose removal
//! keeps that distance largest.

use serde::{Deserialize, Serialize};

use super::{mdm_fit, riemannian_distance, FrechetOptions, MdmModel, SpdError, SpdMatrix};
use crate::scalar::Real;

/// How centroids on a candidate subset are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentroidPolicy {
    /// Estimate centroids once on all channels and take principal
    /// sub-matrices.
    #[default]
    Restrict,
    /// Re-estimate the Fréchet means on every candidate subset.
    Refit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions<T> {
    pub policy: CentroidPolicy,
    pub frechet: FrechetOptions<T>,
}

impl<T: Real> Default for SelectionOptions<T> {
    fn default() -> Self {
        Self {
            policy: CentroidPolicy::Restrict,
            frechet: FrechetOptions::default(),
        }
    }
}

/// One elimination step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub iteration: usize,
    pub removed: usize,
    /// Inter-centroid distance of the subset left after this removal.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub initial_channels: usize,
    pub removal_order: Vec<Removal>,
    pub final_subset: Vec<usize>,
    /// Final subset ordered from most to least relevant by how much the
    /// inter-centroid distance drops when the channel is left out.
    pub final_ranking: Vec<usize>,
}

impl SelectionTrace {
    /// Every channel from most to least relevant: the ranked final subset,
    /// then removed channels from last-removed to first-removed.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order = self.final_ranking.clone();
        order.extend(self.removal_order.iter().rev().map(|r| r.removed));
        order
    }

    /// Relevance score per channel index: `initial_channels − rank`, so the
    /// most relevant channel scores highest.
    pub fn scores(&self) -> Vec<f64> {
        let mut scores = vec![0.0; self.initial_channels];
        for (rank, ch) in self.ranking().into_iter().enumerate() {
            scores[ch] = (self.initial_channels - rank) as f64;
        }
        scores
    }
}

struct Scorer<'a, T: Real> {
    policy: CentroidPolicy,
    full: Option<MdmModel<T>>,
    covs: &'a [SpdMatrix<T>],
    labels: &'a [String],
    frechet: FrechetOptions<T>,
}

impl<T: Real> Scorer<'_, T> {
    fn centroids(&self, subset: &[usize]) -> Result<Vec<SpdMatrix<T>>, SpdError> {
        match (&self.full, self.policy) {
            (Some(full), CentroidPolicy::Restrict) => full
                .centroids()
                .iter()
                .map(|c| c.restrict(subset))
                .collect(),
            _ => Ok(mdm_fit(self.covs, self.labels, subset, self.frechet)?
                .centroids()
                .to_vec()),
        }
    }

    fn separation(&self, subset: &[usize]) -> Result<T, SpdError> {
        let cents = self.centroids(subset)?;
        let mut total = T::zero();
        for i in 0..cents.len() {
            for j in (i + 1)..cents.len() {
                total += riemannian_distance(&cents[i], &cents[j])?;
            }
        }
        Ok(total)
    }
}

/// Removes channels one at a time until `target_k` remain.
///
/// Ties between candidates resolve to the lowest channel index.
pub fn backward_elimination<T: Real, L: AsRef<str>>(
    covs: &[SpdMatrix<T>],
    labels: &[L],
    target_k: usize,
    opts: SelectionOptions<T>,
) -> Result<SelectionTrace, SpdError> {
    let dim = covs.first().ok_or(SpdError::Empty)?.dim();
    if target_k < 2 || target_k >= dim {
        return Err(SpdError::TargetOutOfRange {
            target: target_k,
            current: dim,
        });
    }
    let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    let all: Vec<usize> = (0..dim).collect();
    let full = match opts.policy {
        CentroidPolicy::Restrict => Some(mdm_fit(covs, &labels, &all, opts.frechet)?),
        CentroidPolicy::Refit => None,
    };
    let scorer = Scorer {
        policy: opts.policy,
        full,
        covs,
        labels: &labels,
        frechet: opts.frechet,
    };

    let mut subset = all;
    let mut removal_order = Vec::with_capacity(dim - target_k);
    let mut iteration = 0;
    while subset.len() > target_k {
        let mut best: Option<(usize, T)> = None;
        for pos in 0..subset.len() {
            let candidate: Vec<usize> = subset
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != pos)
                .map(|(_, &c)| c)
                .collect();
            let d = scorer.separation(&candidate)?;
            // subset is ascending, so strict improvement keeps the lowest
            // index on ties
            if best.is_none_or(|(_, b)| d > b) {
                best = Some((pos, d));
            }
        }
        let (pos, distance) = best.expect("subset is non-empty");
        let removed = subset.remove(pos);
        removal_order.push(Removal {
            iteration,
            removed,
            distance: distance.as_f64(),
        });
        iteration += 1;
    }

    let base = scorer.separation(&subset)?;
    let mut drops: Vec<(usize, T)> = Vec::with_capacity(subset.len());
    for &ch in &subset {
        let rest: Vec<usize> = subset.iter().copied().filter(|&c| c != ch).collect();
        drops.push((ch, base - scorer.separation(&rest)?));
    }
    drops.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));

    Ok(SelectionTrace {
        initial_channels: dim,
        removal_order,
        final_subset: subset,
        final_ranking: drops.into_iter().map(|(c, _)| c).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SpdMatrix<f64> {
        SpdMatrix::from_diagonal(v).unwrap()
    }

    #[test]
    fn keeps_the_discriminative_diagonal_channels() {
        // classes differ only on channels 1 and 3
        let a = diag(&[1.0, 4.0, 1.0, 1.0, 1.0]);
        let b = diag(&[1.0, 1.0, 1.0, 9.0, 1.0]);
        let trace = backward_elimination(&[a, b], &["l", "r"], 2, SelectionOptions::default()).unwrap();
        assert_eq!(trace.final_subset, vec![1, 3]);
        assert_eq!(trace.removal_order.len(), 3);
        // channel 3 separates more (ln 9 > ln 4)
        assert_eq!(trace.final_ranking, vec![3, 1]);
        // ties among the uninformative channels go to the lowest index
        let removed: Vec<usize> = trace.removal_order.iter().map(|r| r.removed).collect();
        assert_eq!(removed, vec![0, 2, 4]);
        assert_eq!(trace.ranking(), vec![3, 1, 4, 2, 0]);
        assert_eq!(trace.scores(), vec![1.0, 4.0, 2.0, 5.0, 3.0]);
    }

    #[test]
    fn target_out_of_range() {
        let a = diag(&[1.0, 4.0, 1.0]);
        let b = diag(&[1.0, 1.0, 9.0]);
        for k in [0, 1, 3, 4] {
            assert!(matches!(
                backward_elimination(&[a.clone(), b.clone()], &["l", "r"], k, SelectionOptions::default()),
                Err(SpdError::TargetOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn trace_serializes() {
        let a = diag(&[1.0, 4.0, 1.0]);
        let b = diag(&[1.0, 1.0, 9.0]);
        let t = backward_elimination(&[a, b], &["l", "r"], 2, SelectionOptions::default()).unwrap();
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json["removal_order"][0]["removed"], 0);
        assert!(json["removal_order"][0]["distance"].is_number());
    }
}
