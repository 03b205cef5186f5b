//! Synthetic EEG with known class structure.
//!
//! Background activity is white Gaussian noise plus one source shared by
//! every channel (so covariances are not diagonal). During a labelled trial
//! the class-specific channel is amplified by `gain`; nothing else differs
//! between classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Channel labels in PhysioNet EEGMMIDB EDF order, with the dot padding the
/// files use.
pub const PHYSIONET_EDF_LABELS: [&str; 64] = [
    "Fc5.", "Fc3.", "Fc1.", "Fcz.", "Fc2.", "Fc4.", "Fc6.", "C5..", "C3..", "C1..", "Cz..",
    "C2..", "C4..", "C6..", "Cp5.", "Cp3.", "Cp1.", "Cpz.", "Cp2.", "Cp4.", "Cp6.", "Fp1.",
    "Fpz.", "Fp2.", "Af7.", "Af3.", "Afz.", "Af4.", "Af8.", "F7..", "F5..", "F3..", "F1..",
    "Fz..", "F2..", "F4..", "F6..", "F8..", "Ft7.", "Ft8.", "T7..", "T8..", "T9..", "T10.",
    "Tp7.", "Tp8.", "P7..", "P5..", "P3..", "P1..", "Pz..", "P2..", "P4..", "P6..", "P8..",
    "Po7.", "Po3.", "Poz.", "Po4.", "Po8.", "O1..", "Oz..", "O2..", "Iz..",
];

/// Seconds of rest and task per PhysioNet-style trial.
pub const REST_SECONDS: f64 = 4.2;
pub const TASK_SECONDS: f64 = 4.1;

#[derive(Debug, Clone)]
pub struct SyntheticEpoch {
    /// `channels × samples`
    pub data: Vec<Vec<f64>>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassStructure {
    /// Channel amplified for class 0 and class 1.
    pub informative: [usize; 2],
    /// Standard-deviation multiplier on the informative channel.
    pub gain: f64,
    /// Weight of the source common to all channels.
    pub shared: f64,
}

impl Default for ClassStructure {
    fn default() -> Self {
        Self {
            informative: [3, 7],
            gain: 2.5,
            shared: 0.3,
        }
    }
}

fn noise_block(
    rng: &mut ChaCha8Rng,
    channels: usize,
    samples: usize,
    boost: Option<(usize, f64)>,
    shared: f64,
    scale: f64,
) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let common: Vec<f64> = (0..samples).map(|_| normal.sample(rng)).collect();
    (0..channels)
        .map(|ch| {
            let g = match boost {
                Some((c, g)) if c == ch => g,
                _ => 1.0,
            };
            (0..samples)
                .map(|t| scale * (g * normal.sample(rng) + shared * common[t]))
                .collect()
        })
        .collect()
}

/// Independent epochs, `per_class` of each label, interleaved 0,1,0,1,...
pub fn discriminative_epochs(
    seed: u64,
    channels: usize,
    samples: usize,
    per_class: usize,
    structure: ClassStructure,
) -> Vec<SyntheticEpoch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2 * per_class)
        .map(|k| {
            let label = k % 2;
            let data = noise_block(
                &mut rng,
                channels,
                samples,
                Some((structure.informative[label], structure.gain)),
                structure.shared,
                1.0,
            );
            SyntheticEpoch { data, label }
        })
        .collect()
}

/// One continuous run: alternating rest (`T0`) and task (`T1` = left,
/// `T2` = right) blocks, `n_trials` task blocks, starting with rest.
///
/// Returns `(data, annotations)`, `data` in microvolt-like units and each
/// annotation as `(onset_sample, duration_samples, code)`.
pub fn synthetic_run(
    seed: u64,
    channels: usize,
    sample_rate: usize,
    n_trials: usize,
    structure: ClassStructure,
) -> (Vec<Vec<f64>>, Vec<(usize, usize, String)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest = (REST_SECONDS * sample_rate as f64).round() as usize;
    let task = (TASK_SECONDS * sample_rate as f64).round() as usize;
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); channels];
    let mut annotations = Vec::new();
    let mut cursor = 0;
    let scale = 10.0;
    for _ in 0..n_trials {
        let block = noise_block(&mut rng, channels, rest, None, structure.shared, scale);
        annotations.push((cursor, rest, "T0".to_string()));
        for (d, b) in data.iter_mut().zip(block) {
            d.extend(b);
        }
        cursor += rest;

        let label = rng.random_range(0..2usize);
        let block = noise_block(
            &mut rng,
            channels,
            task,
            Some((structure.informative[label], structure.gain)),
            structure.shared,
            scale,
        );
        annotations.push((cursor, task, if label == 0 { "T1" } else { "T2" }.to_string()));
        for (d, b) in data.iter_mut().zip(block) {
            d.extend(b);
        }
        cursor += task;
    }
    // trailing rest
    let block = noise_block(&mut rng, channels, rest, None, structure.shared, scale);
    annotations.push((cursor, rest, "T0".to_string()));
    for (d, b) in data.iter_mut().zip(block) {
        d.extend(b);
    }
    (data, annotations)
}

/// Trials per run giving 93 trials over the six left/right fist runs.
pub const TRIALS_PER_RUN: [usize; 6] = [16, 15, 16, 15, 16, 15];

/// PhysioNet run indices holding left/right fist execution and imagery.
pub const FIST_RUNS: [u32; 6] = [3, 4, 7, 8, 11, 12];

pub fn sinusoid(freq: f64, sample_rate: f64, samples: usize, amplitude: f64) -> Vec<f64> {
    (0..samples)
        .map(|t| amplitude * (2.0 * std::f64::consts::PI * freq * t as f64 / sample_rate).sin())
        .collect()
}

/// Random nonnegative vector on `len` cells, roughly `density` of them
/// nonzero (at least one), with masses in `(0, 1]`.
pub fn random_masses(rng: &mut impl Rng, len: usize, density: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            if rng.random::<f64>() < density {
                1.0 - rng.random::<f64>()
            } else {
                0.0
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        let k = rng.random_range(0..len);
        v[k] = 1.0;
    }
    v
}

/// Random integer masses in `1..=max` on a random subset, exact in any
/// float type.
pub fn random_integer_masses(rng: &mut impl Rng, len: usize, density: f64, max: u32) -> Vec<u32> {
    let mut v: Vec<u32> = (0..len)
        .map(|_| {
            if rng.random::<f64>() < density {
                rng.random_range(1..=max)
            } else {
                0
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0) {
        let k = rng.random_range(0..len);
        v[k] = 1;
    }
    v
}
