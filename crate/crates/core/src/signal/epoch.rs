use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Epoch, Label, Recording, SignalError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpochOptions {
    pub slice_seconds: f64,
    pub slices_per_trial: usize,
    pub left_code: String,
    pub right_code: String,
}

impl Default for EpochOptions {
    fn default() -> Self {
        Self {
            slice_seconds: 1.0,
            slices_per_trial: 4,
            left_code: "T1".into(),
            right_code: "T2".into(),
        }
    }
}

impl EpochOptions {
    pub fn slice_len(&self, sample_rate: f64) -> usize {
        (self.slice_seconds * sample_rate).round() as usize
    }

    fn label(&self, code: &str) -> Option<Label> {
        if code == self.left_code {
            Some(Label::Left)
        } else if code == self.right_code {
            Some(Label::Right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Epoching<T: Real> {
    pub epochs: Vec<Epoch<T>>,
    /// Labeled trials dropped because the recording ends inside them.
    pub truncated_trials: usize,
}

/// Cuts every labeled trial into `slices_per_trial` consecutive,
/// non-overlapping slices starting at the trial onset. Other annotation
/// codes are ignored.
pub fn epoch_trials<T: Real>(
    rec: &Recording<T>,
    subject: u32,
    run: u32,
    opts: &EpochOptions,
) -> Epoching<T> {
    let len = opts.slice_len(rec.sample_rate());
    let span = len * opts.slices_per_trial;
    let mut epochs = Vec::new();
    let mut truncated_trials = 0;
    let mut trial = 0;
    for a in rec.annotations() {
        let Some(label) = opts.label(&a.code) else {
            continue;
        };
        if len == 0 || a.onset + span > rec.n_samples() {
            truncated_trials += 1;
            trial += 1;
            continue;
        }
        for slice in 0..opts.slices_per_trial {
            let start = a.onset + slice * len;
            epochs.push(Epoch {
                data: rec.data().columns(start, len).into_owned(),
                label,
                subject,
                run,
                trial,
                slice,
            });
        }
        trial += 1;
    }
    Epoching {
        epochs,
        truncated_trials,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            seed: 42,
            test_fraction: 0.25,
        }
    }
}

/// Indices into the epoch list, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per-class test quotas summing to `total`, proportional to class sizes by
/// largest remainder and kept within `[1, size − 1]`.
fn quotas(sizes: &[usize], total: usize) -> Option<Vec<usize>> {
    let n: usize = sizes.iter().sum();
    if total < sizes.len() || total + sizes.len() > n {
        return None;
    }
    let mut q: Vec<usize> = sizes.iter().map(|&s| s * total / n).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // remainder of s·total/n is (s·total mod n); larger first, then class order
    order.sort_by_key(|&c| std::cmp::Reverse((sizes[c] * total) % n));
    let short = total - q.iter().sum::<usize>();
    for &c in order.iter().take(short) {
        q[c] += 1;
    }
    for (c, &s) in sizes.iter().enumerate() {
        q[c] = q[c].clamp(1, s - 1);
    }
    loop {
        let sum: usize = q.iter().sum();
        if sum == total {
            return Some(q);
        }
        let c = if sum < total {
            (0..q.len()).filter(|&c| q[c] < sizes[c] - 1).max_by_key(|&c| sizes[c] - q[c])?
        } else {
            (0..q.len()).filter(|&c| q[c] > 1).max_by_key(|&c| q[c])?
        };
        if sum < total {
            q[c] += 1;
        } else {
            q[c] -= 1;
        }
    }
}

/// Seeded stratified split with `round(test_fraction · n)` test epochs and
/// every class on both sides.
pub fn split<T: Real>(epochs: &[Epoch<T>], spec: SplitSpec) -> Result<Split, SignalError> {
    let labels: Vec<Label> = epochs.iter().map(|e| e.label).collect();
    split_labels(&labels, spec)
}

pub(crate) fn split_labels(labels: &[Label], spec: SplitSpec) -> Result<Split, SignalError> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(SignalError::TestFraction(spec.test_fraction));
    }
    let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.len() < Label::ALL.len() {
        return Err(SignalError::MissingClass);
    }
    if let Some((&label, members)) = by_class.iter().find(|(_, m)| m.len() < 2) {
        return Err(SignalError::TooFewEpochs {
            label,
            count: members.len(),
        });
    }
    let n = labels.len();
    let total = (spec.test_fraction * n as f64).round() as usize;
    let sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
    let quota = quotas(&sizes, total).ok_or(SignalError::SplitSize { test: total, total: n })?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::with_capacity(n - total);
    let mut test = Vec::with_capacity(total);
    for (mut members, q) in by_class.into_values().zip(quota) {
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..q]);
        train.extend_from_slice(&members[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
