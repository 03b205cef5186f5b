use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::DMatrix;
use proptest::prelude::*;
use scalpemd::signal::{
    bandpass, encode_edf, epoch_trials, filtfilt, parse_edf, physionet_path, read_edf, split, write_edf, Annotation,
    Butterworth, Epoch, EpochOptions, Label, Recording, SplitSpec, DEFAULT_RUNS,
};
use scalpemd_testkit::synthetic::{synthetic_run, ClassStructure, PHYSIONET_EDF_LABELS, TRIALS_PER_RUN};

const FS: f64 = 160.0;

fn tone(freq: f64, seconds: f64, offset: f64) -> Vec<f64> {
    let n = (seconds * FS) as usize;
    (0..n).map(|k| offset + (2.0 * PI * freq * k as f64 / FS).sin()).collect()
}

fn single_channel(x: Vec<f64>) -> Recording<f64> {
    let n = x.len();
    Recording::new(vec!["Cz".into()], FS, DMatrix::from_row_slice(1, n, &x), vec![]).unwrap()
}

/// Peak amplitude of the central half, away from edge effects.
fn central_amplitude(y: &[f64]) -> f64 {
    let n = y.len();
    let mid = &y[n / 4..3 * n / 4];
    (2.0 * mid.iter().map(|v| v * v).sum::<f64>() / mid.len() as f64).sqrt()
}

fn synthetic_recording(seed: u64, channels: usize, trials: usize) -> Recording<f64> {
    let (rows, marks) = synthetic_run(seed, channels, FS as usize, trials, ClassStructure::default());
    let samples = rows[0].len();
    let data = DMatrix::from_fn(channels, samples, |c, k| rows[c][k]);
    let names = PHYSIONET_EDF_LABELS[..channels].iter().map(|s| s.to_string()).collect();
    let annotations = marks.into_iter().map(|(o, d, c)| Annotation::new(o, d, c)).collect();
    Recording::new(names, FS, data, annotations).unwrap()
}

#[test]
fn in_band_tone_keeps_its_amplitude() {
    let y = bandpass(&single_channel(tone(20.0, 10.0, 0.0)), 8.0, 30.0).unwrap();
    let amp = central_amplitude(y.data().row(0).iter().copied().collect::<Vec<_>>().as_slice());
    assert!((amp - 1.0).abs() < 0.05, "amplitude {amp}");
}

#[test]
fn low_tone_attenuated_by_20_db() {
    let y = bandpass(&single_channel(tone(2.0, 10.0, 0.0)), 8.0, 30.0).unwrap();
    let amp = central_amplitude(y.data().row(0).iter().copied().collect::<Vec<_>>().as_slice());
    let db = 20.0 * amp.log10();
    assert!(db <= -20.0, "attenuation {db} dB");
}

#[test]
fn dc_offset_removed() {
    let offset = 7.5;
    let y = bandpass(&single_channel(tone(20.0, 5.0, offset)), 8.0, 30.0).unwrap();
    let mean = y.data().row(0).mean();
    assert!(mean.abs() < 1e-3 * offset, "mean {mean}");
    let flat = bandpass(&single_channel(vec![offset; 800]), 8.0, 30.0).unwrap();
    assert!(flat.data().amax() < 1e-9);
}

#[test]
fn shape_and_metadata_preserved() {
    let rec = synthetic_recording(1, 4, 3);
    let y = bandpass(&rec, 8.0, 30.0).unwrap();
    assert_eq!(y.data().shape(), rec.data().shape());
    assert_eq!(y.channel_names(), rec.channel_names());
    assert_eq!(y.annotations(), rec.annotations());
}

/// Reference output of scipy.signal.sosfiltfilt with
/// butter(4, [8, 30], btype="bandpass", fs=160, output="sos") on
/// sin(2π·20t) + 0.5·sin(2π·3t) + 1 sampled at 160 Hz for 800 samples.
#[test]
fn matches_reference_forward_backward_output() {
    let x: Vec<f64> = (0..800)
        .map(|k| {
            let t = k as f64 / FS;
            (2.0 * PI * 20.0 * t).sin() + 0.5 * (2.0 * PI * 3.0 * t).sin() + 1.0
        })
        .collect();
    let f = Butterworth::bandpass(4, 8.0, 30.0, FS).unwrap();
    let y = filtfilt(&f, &x).unwrap();
    let head = [-0.00705346, 0.6957829, 0.98589948, 0.691822, -0.01477883];
    for (got, want) in y.iter().zip(head) {
        assert!((got - want).abs() < 1e-7, "{got} vs {want}");
    }
    let mid = [-4.35762537e-15, 0.707041104, 0.999905255];
    for (got, want) in y[400..403].iter().zip(mid) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn f32_filtering_tracks_f64() {
    let x = tone(20.0, 4.0, 0.5);
    let f = Butterworth::bandpass(4, 8.0, 30.0, FS).unwrap();
    let y64 = filtfilt(&f, &x).unwrap();
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    let y32 = filtfilt(&f, &x32).unwrap();
    for (a, b) in y64.iter().zip(&y32) {
        assert!((a - f64::from(*b)).abs() < 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bandpass_is_linear(
        x in prop::collection::vec(-100.0f64..100.0, 200),
        y in prop::collection::vec(-100.0f64..100.0, 200),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let f = Butterworth::bandpass(4, 8.0, 30.0, FS).unwrap();
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = filtfilt(&f, &mixed).unwrap();
        let fx = filtfilt(&f, &x).unwrap();
        let fy = filtfilt(&f, &y).unwrap();
        let scale = lhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for k in 0..lhs.len() {
            let rhs = a * fx[k] + b * fy[k];
            prop_assert!((lhs[k] - rhs).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn split_is_a_stratified_partition(
        labels in prop::collection::vec(prop::bool::ANY, 8..120),
        seed in any::<u64>(),
        frac in 0.1f64..0.5,
    ) {
        let epochs: Vec<Epoch<f64>> = labels
            .iter()
            .map(|&l| Epoch {
                data: DMatrix::zeros(1, 1),
                label: if l { Label::Left } else { Label::Right },
                subject: 1,
                run: 3,
                trial: 0,
                slice: 0,
            })
            .collect();
        let lefts = labels.iter().filter(|&&l| l).count();
        prop_assume!(lefts >= 2 && labels.len() - lefts >= 2);
        let spec = SplitSpec { seed, test_fraction: frac };
        let Ok(s) = split(&epochs, spec) else {
            // only when the rounded size cannot keep both classes on both sides
            let t = (frac * labels.len() as f64).round() as usize;
            prop_assert!(t < 2 || t + 2 > labels.len());
            return Ok(());
        };
        prop_assert_eq!(s.test.len(), (frac * labels.len() as f64).round() as usize);
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for side in [&s.train, &s.test] {
            for l in Label::ALL {
                prop_assert!(side.iter().any(|&i| epochs[i].label == l));
            }
        }
        prop_assert_eq!(&s, &split(&epochs, spec).unwrap());
    }
}

#[test]
fn edf_round_trip_of_synthetic_recording() {
    let rec = synthetic_recording(5, 2, 4);
    let bytes = encode_edf(&rec).unwrap();
    let back: Recording<f64> = parse_edf(&bytes).unwrap();
    assert_eq!(back.channel_names(), rec.channel_names());
    assert_eq!(back.sample_rate(), FS);
    assert_eq!(back.annotations(), rec.annotations());
    for c in 0..2 {
        let row = rec.data().row(c);
        let step = (row.max() - row.min()) / 65535.0;
        for (a, b) in row.iter().zip(back.data().row(c).iter()) {
            assert!((a - b).abs() <= 0.5 * step + 1e-9 * row.amax());
        }
    }
    assert_eq!(encode_edf(&rec).unwrap(), bytes);
}

#[test]
fn edf_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("S001R03.edf");
    let rec = synthetic_recording(6, 3, 2);
    write_edf(&rec, &path).unwrap();
    let back: Recording<f64> = read_edf(&path).unwrap();
    assert_eq!(back.n_samples(), rec.n_samples());
    assert_eq!(back.annotations().len(), rec.annotations().len());
}

#[test]
fn full_subject_yields_about_372_epochs() {
    let opts = EpochOptions::default();
    let mut total = 0;
    for (run, &trials) in TRIALS_PER_RUN.iter().enumerate() {
        let rec = synthetic_recording(100 + run as u64, 2, trials);
        let out = epoch_trials(&bandpass(&rec, 8.0, 30.0).unwrap(), 1, DEFAULT_RUNS[run], &opts);
        assert_eq!(out.truncated_trials, 0);
        assert_eq!(out.epochs.len(), 4 * trials);
        // lossless: slices tile the first four seconds of each trial
        for e in &out.epochs {
            assert_eq!(e.data.ncols(), 160);
        }
        total += out.epochs.len();
    }
    assert_eq!(total, 372);
    assert!((total as f64 - 370.0).abs() <= 0.05 * 370.0);
}

#[test]
fn epochs_tile_each_trial_without_gaps() {
    let rec = synthetic_recording(9, 3, 5);
    let out = epoch_trials(&rec, 2, 4, &EpochOptions::default());
    let tasks: Vec<&Annotation> = rec.annotations().iter().filter(|a| a.code != "T0").collect();
    assert_eq!(out.epochs.len(), 4 * tasks.len());
    for e in &out.epochs {
        let start = tasks[e.trial].onset + 160 * e.slice;
        assert_eq!(e.data, rec.data().columns(start, 160).into_owned());
        let expected = if tasks[e.trial].code == "T1" { Label::Left } else { Label::Right };
        assert_eq!(e.label, expected);
    }
}

/// Runs only when `SCALPEMD_PHYSIONET` points at a local copy of the
/// EEG Motor Movement/Imagery dataset.
#[test]
fn physionet_subject_has_64_channels_at_160_hz() {
    let Some(root) = std::env::var_os("SCALPEMD_PHYSIONET").map(PathBuf::from) else {
        eprintln!("SCALPEMD_PHYSIONET not set; skipping");
        return;
    };
    let path = physionet_path(&root, 7, 3);
    if !path.exists() {
        eprintln!("{} missing; skipping", path.display());
        return;
    }
    let rec: Recording<f64> = read_edf(&path).unwrap();
    assert_eq!(rec.n_channels(), 64);
    assert_eq!(rec.sample_rate(), 160.0);
}
