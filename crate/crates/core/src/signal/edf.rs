//! EDF and EDF+ (continuous) reader and writer.
//!
//! Samples are 16-bit little-endian integers mapped to physical units by the
//! per-signal linear calibration in the header. EDF+ annotations are decoded
//! from the `EDF Annotations` signal's time-stamped annotation lists (TALs):
//! `+onset[\x15duration]\x14text\x14...\x00`.

use std::path::Path;

use nalgebra::DMatrix;

use super::{Annotation, Recording, SignalError};
use crate::scalar::Real;

pub const EDF_ANNOTATIONS_LABEL: &str = "EDF Annotations";

const FIXED_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;
const TAL_DURATION: u8 = 0x15;
const TAL_SEPARATOR: u8 = 0x14;

struct SignalHeader {
    label: String,
    phys_min: f64,
    phys_max: f64,
    dig_min: f64,
    dig_max: f64,
    samples_per_record: usize,
}

impl SignalHeader {
    fn is_annotation(&self) -> bool {
        self.label == EDF_ANNOTATIONS_LABEL
    }

    fn to_physical(&self, digital: i16) -> f64 {
        let gain = (self.phys_max - self.phys_min) / (self.dig_max - self.dig_min);
        self.phys_min + (f64::from(digital) - self.dig_min) * gain
    }
}

fn text(bytes: &[u8], start: usize, len: usize, what: &str) -> Result<String, SignalError> {
    let raw = bytes
        .get(start..start + len)
        .ok_or_else(|| SignalError::Header(format!("file ends inside {what}")))?;
    let s = std::str::from_utf8(raw).map_err(|_| SignalError::Header(format!("{what} is not ASCII")))?;
    Ok(s.trim().to_string())
}

fn number<N: std::str::FromStr>(bytes: &[u8], start: usize, len: usize, what: &str) -> Result<N, SignalError> {
    let s = text(bytes, start, len, what)?;
    s.parse()
        .map_err(|_| SignalError::Header(format!("{what}: cannot parse {s:?}")))
}

/// Decodes an EDF or continuous EDF+ file held in memory.
pub fn parse_edf<T: Real>(bytes: &[u8]) -> Result<Recording<T>, SignalError> {
    let version = text(bytes, 0, 8, "version")?;
    if version != "0" {
        return Err(SignalError::Header(format!("version {version:?}, expected \"0\"")));
    }
    let header_bytes: usize = number(bytes, 184, 8, "header size")?;
    let reserved = text(bytes, 192, 44, "reserved field")?;
    if reserved.starts_with("EDF+D") {
        return Err(SignalError::Unsupported("discontinuous EDF+ (EDF+D)".into()));
    }
    let declared_records: i64 = number(bytes, 236, 8, "record count")?;
    let record_seconds: f64 = number(bytes, 244, 8, "record duration")?;
    let ns: usize = number(bytes, 252, 4, "signal count")?;
    if ns == 0 {
        return Err(SignalError::NoChannels);
    }
    if header_bytes != FIXED_HEADER + ns * SIGNAL_HEADER {
        return Err(SignalError::Header(format!(
            "header size {header_bytes} inconsistent with {ns} signals"
        )));
    }
    if bytes.len() < header_bytes {
        return Err(SignalError::Header("file ends inside signal headers".into()));
    }

    // signal header fields are stored field-major: all labels, then all
    // transducers, ...
    let field = |offset: usize, width: usize, i: usize| FIXED_HEADER + ns * offset + i * width;
    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let s = SignalHeader {
            label: text(bytes, field(0, 16, i), 16, "label")?,
            phys_min: number(bytes, field(104, 8, i), 8, "physical minimum")?,
            phys_max: number(bytes, field(112, 8, i), 8, "physical maximum")?,
            dig_min: number(bytes, field(120, 8, i), 8, "digital minimum")?,
            dig_max: number(bytes, field(128, 8, i), 8, "digital maximum")?,
            samples_per_record: number(bytes, field(216, 8, i), 8, "samples per record")?,
        };
        if s.dig_max <= s.dig_min {
            return Err(SignalError::Header(format!("{}: digital maximum not above minimum", s.label)));
        }
        if s.phys_max == s.phys_min {
            return Err(SignalError::Header(format!("{}: physical range is empty", s.label)));
        }
        signals.push(s);
    }

    let data_signals: Vec<usize> = (0..ns).filter(|&i| !signals[i].is_annotation()).collect();
    let Some(&first) = data_signals.first() else {
        return Err(SignalError::NoChannels);
    };
    let spr = signals[first].samples_per_record;
    if let Some(&odd) = data_signals.iter().find(|&&i| signals[i].samples_per_record != spr) {
        return Err(SignalError::Unsupported(format!(
            "mixed sample rates ({} has {} samples per record, {} has {spr})",
            signals[odd].label, signals[odd].samples_per_record, signals[first].label
        )));
    }
    if record_seconds.is_nan() || record_seconds <= 0.0 || spr == 0 {
        return Err(SignalError::Header("record duration and samples per record must be positive".into()));
    }
    let sample_rate = spr as f64 / record_seconds;

    let record_bytes: usize = signals.iter().map(|s| 2 * s.samples_per_record).sum();
    let body = &bytes[header_bytes..];
    let n_records = if declared_records < 0 {
        if body.len() % record_bytes != 0 {
            return Err(SignalError::Truncated {
                expected: body.len().div_ceil(record_bytes) * record_bytes,
                found: body.len(),
            });
        }
        body.len() / record_bytes
    } else {
        let n = declared_records as usize;
        if body.len() < n * record_bytes {
            return Err(SignalError::Truncated {
                expected: n * record_bytes,
                found: body.len(),
            });
        }
        n
    };

    let mut data = DMatrix::<T>::zeros(data_signals.len(), n_records * spr);
    let mut annotations = Vec::new();
    for r in 0..n_records {
        let mut offset = r * record_bytes;
        for (i, sig) in signals.iter().enumerate() {
            let chunk = &body[offset..offset + 2 * sig.samples_per_record];
            offset += chunk.len();
            if sig.is_annotation() {
                decode_tals(chunk, sample_rate, &mut annotations)?;
                continue;
            }
            let row = data_signals.binary_search(&i).expect("data signal index");
            for (k, pair) in chunk.chunks_exact(2).enumerate() {
                let digital = i16::from_le_bytes([pair[0], pair[1]]);
                data[(row, r * spr + k)] = T::lit(sig.to_physical(digital));
            }
        }
    }

    let names = data_signals.iter().map(|&i| signals[i].label.clone()).collect();
    Recording::new(names, sample_rate, data, annotations)
}

fn seconds_to_samples(field: &str, sample_rate: f64) -> Result<usize, SignalError> {
    let secs: f64 = field
        .parse()
        .map_err(|_| SignalError::Annotation(format!("bad time {field:?}")))?;
    if !secs.is_finite() || secs < 0.0 {
        return Err(SignalError::Annotation(format!("time {field:?} is negative or not finite")));
    }
    Ok((secs * sample_rate).round() as usize)
}

fn decode_tals(chunk: &[u8], sample_rate: f64, out: &mut Vec<Annotation>) -> Result<(), SignalError> {
    for tal in chunk.split(|&b| b == 0).filter(|t| !t.is_empty()) {
        let mut parts = tal.split(|&b| b == TAL_SEPARATOR);
        let stamp = parts.next().unwrap_or_default();
        let stamp = std::str::from_utf8(stamp).map_err(|_| SignalError::Annotation("onset is not ASCII".into()))?;
        if !stamp.starts_with(['+', '-']) {
            return Err(SignalError::Annotation(format!("onset {stamp:?} lacks a sign")));
        }
        let (onset, duration) = match stamp.split_once(char::from(TAL_DURATION)) {
            Some((o, d)) => (o, Some(d)),
            None => (stamp, None),
        };
        let onset = seconds_to_samples(onset.trim_start_matches('+'), sample_rate)?;
        let duration = match duration {
            Some(d) if !d.is_empty() => seconds_to_samples(d, sample_rate)?,
            _ => 0,
        };
        for texts in parts.filter(|t| !t.is_empty()) {
            let code = std::str::from_utf8(texts)
                .map_err(|_| SignalError::Annotation("annotation text is not UTF-8".into()))?;
            out.push(Annotation::new(onset, duration, code));
        }
    }
    Ok(())
}

pub fn read_edf<T: Real>(path: &Path) -> Result<Recording<T>, SignalError> {
    let bytes = std::fs::read(path).map_err(|e| SignalError::io(path, e))?;
    parse_edf(&bytes)
}

/// Shortest decimal of at most `width` characters that is `≤ v` (or `≥ v`
/// when `up`).
fn bound_field(v: f64, width: usize, up: bool) -> Option<String> {
    for decimals in (0..width).rev() {
        let scale = 10f64.powi(decimals as i32);
        let r = if up { (v * scale).ceil() } else { (v * scale).floor() } / scale;
        let s = format!("{r:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        let s = if s == "-0" { "0".to_string() } else { s };
        if s.len() <= width {
            return Some(s);
        }
    }
    None
}

fn push_field(out: &mut Vec<u8>, value: &str, width: usize) -> Result<(), SignalError> {
    if !value.is_ascii() || value.len() > width {
        return Err(SignalError::Unsupported(format!(
            "header value {value:?} does not fit {width} ASCII characters"
        )));
    }
    out.extend_from_slice(value.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - value.len()));
    Ok(())
}

/// Samples per record whose duration prints exactly in 8 characters, so the
/// reader recovers the same sample rate. Records of at most one second are
/// preferred.
fn record_layout(n_samples: usize, sample_rate: f64) -> Option<(usize, String)> {
    let divisors: Vec<usize> = (1..=n_samples).filter(|d| n_samples % d == 0).collect();
    let short = divisors.iter().rev().filter(|&&d| d as f64 <= sample_rate);
    let long = divisors.iter().filter(|&&d| d as f64 > sample_rate);
    short.chain(long).find_map(|&d| {
        let s = format!("{}", d as f64 / sample_rate);
        let parsed: f64 = s.parse().ok()?;
        (s.len() <= 8 && d as f64 / parsed == sample_rate).then_some((d, s))
    })
}

/// Encodes `rec` as EDF+C. Each channel is calibrated to its own data range,
/// so values come back within half a quantization step.
pub fn encode_edf<T: Real>(rec: &Recording<T>) -> Result<Vec<u8>, SignalError> {
    let n = rec.n_samples();
    let fs = rec.sample_rate();
    let (spr, duration) = record_layout(n, fs)
        .ok_or_else(|| SignalError::Unsupported(format!("no EDF record layout for {n} samples at {fs} Hz")))?;
    let n_records = n / spr;
    let (dig_min, dig_max) = (f64::from(i16::MIN), f64::from(i16::MAX));

    let mut tals = vec![Vec::<u8>::new(); n_records];
    for (r, tal) in tals.iter_mut().enumerate() {
        tal.extend_from_slice(format!("+{}\x14\x14\x00", (r * spr) as f64 / fs).as_bytes());
    }
    for a in rec.annotations() {
        if a.code.bytes().any(|b| b == 0 || b == TAL_SEPARATOR) {
            return Err(SignalError::Unsupported(format!("annotation code {:?}", a.code)));
        }
        let r = (a.onset / spr).min(n_records - 1);
        let mut s = format!("+{}", a.onset as f64 / fs);
        if a.duration > 0 {
            s.push(char::from(TAL_DURATION));
            s.push_str(&format!("{}", a.duration as f64 / fs));
        }
        s.push_str(&format!("\x14{}\x14\x00", a.code));
        tals[r].extend_from_slice(s.as_bytes());
    }
    let ann_spr = tals.iter().map(|t| t.len().div_ceil(2)).max().unwrap_or(1);

    let mut calib = Vec::with_capacity(rec.n_channels());
    for row in rec.data().row_iter() {
        let lo = row.iter().map(|v| v.as_f64()).fold(f64::INFINITY, f64::min);
        let hi = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
        let lo_s = bound_field(lo, 8, false);
        let hi_s = bound_field(if hi > lo { hi } else { lo + 1.0 }, 8, true);
        let (Some(lo_s), Some(hi_s)) = (lo_s, hi_s) else {
            return Err(SignalError::Unsupported(format!("physical range [{lo}, {hi}] too wide for EDF")));
        };
        calib.push((lo_s, hi_s));
    }

    let ns = rec.n_channels() + 1;
    let mut out = Vec::with_capacity(FIXED_HEADER * (ns + 1) + n_records * 2 * (rec.n_channels() * spr + ann_spr));
    push_field(&mut out, "0", 8)?;
    push_field(&mut out, "X X X X", 80)?;
    push_field(&mut out, "Startdate X X X X", 80)?;
    push_field(&mut out, "01.01.85", 8)?;
    push_field(&mut out, "00.00.00", 8)?;
    push_field(&mut out, &(FIXED_HEADER * (ns + 1)).to_string(), 8)?;
    push_field(&mut out, "EDF+C", 44)?;
    push_field(&mut out, &n_records.to_string(), 8)?;
    push_field(&mut out, &duration, 8)?;
    push_field(&mut out, &ns.to_string(), 4)?;

    let labels: Vec<&str> = rec
        .channel_names()
        .iter()
        .map(String::as_str)
        .chain([EDF_ANNOTATIONS_LABEL])
        .collect();
    for l in &labels {
        push_field(&mut out, l, 16)?;
    }
    for _ in 0..ns {
        push_field(&mut out, "", 80)?;
    }
    for _ in 0..ns {
        push_field(&mut out, "", 8)?;
    }
    for (lo, _) in &calib {
        push_field(&mut out, lo, 8)?;
    }
    push_field(&mut out, "-1", 8)?;
    for (_, hi) in &calib {
        push_field(&mut out, hi, 8)?;
    }
    push_field(&mut out, "1", 8)?;
    for _ in 0..ns {
        push_field(&mut out, &dig_min.to_string(), 8)?;
    }
    for _ in 0..ns {
        push_field(&mut out, &dig_max.to_string(), 8)?;
    }
    for _ in 0..ns {
        push_field(&mut out, "", 80)?;
    }
    for _ in 0..rec.n_channels() {
        push_field(&mut out, &spr.to_string(), 8)?;
    }
    push_field(&mut out, &ann_spr.to_string(), 8)?;
    for _ in 0..ns {
        push_field(&mut out, "", 32)?;
    }

    let calib: Vec<(f64, f64)> = calib
        .iter()
        .map(|(lo, hi)| (lo.parse().expect("formatted"), hi.parse().expect("formatted")))
        .collect();
    for (r, tal) in tals.iter().enumerate() {
        for (ch, &(lo, hi)) in calib.iter().enumerate() {
            let gain = (hi - lo) / (dig_max - dig_min);
            for k in 0..spr {
                let x = rec.data()[(ch, r * spr + k)].as_f64();
                let d = ((x - lo) / gain + dig_min).round().clamp(dig_min, dig_max) as i16;
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
        out.extend_from_slice(tal);
        out.extend(std::iter::repeat_n(0u8, 2 * ann_spr - tal.len()));
    }
    Ok(out)
}

pub fn write_edf<T: Real>(rec: &Recording<T>, path: &Path) -> Result<(), SignalError> {
    let bytes = encode_edf(rec)?;
    std::fs::write(path, bytes).map_err(|e| SignalError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integer_recording() -> Recording<f64> {
        let data = DMatrix::from_fn(2, 320, |c, k| {
            if k == 0 {
                -32768.0
            } else if k == 1 {
                32767.0
            } else {
                ((k * 37 + c * 101) % 2001) as f64 - 1000.0
            }
        });
        Recording::new(
            vec!["Fc5.".into(), "Cz..".into()],
            160.0,
            data,
            vec![Annotation::new(0, 672, "T0"), Annotation::new(200, 656, "T1")],
        )
        .unwrap()
    }

    #[test]
    fn integer_data_round_trips_exactly() {
        let rec = integer_recording();
        let back: Recording<f64> = parse_edf(&encode_edf(&rec).unwrap()).unwrap();
        assert_eq!(back, rec);
    }

    #[test]
    fn bound_fields_bracket_the_value() {
        assert_eq!(bound_field(-123.456789, 8, false).unwrap(), "-123.457");
        assert_eq!(bound_field(123.4567891, 8, true).unwrap(), "123.4568");
        assert_eq!(bound_field(-0.0, 8, false).unwrap(), "0");
        assert_eq!(bound_field(5.0, 8, true).unwrap(), "5");
        assert!(bound_field(1e12, 8, true).is_none());
    }

    #[test]
    fn layout_prefers_one_second_records() {
        assert_eq!(record_layout(320, 160.0), Some((160, "1".into())));
        assert_eq!(record_layout(100, 160.0), Some((100, "0.625".into())));
    }

    #[test]
    fn zero_signals_rejected() {
        let mut bytes = encode_edf(&integer_recording()).unwrap();
        bytes[252..256].copy_from_slice(b"0   ");
        assert!(matches!(parse_edf::<f64>(&bytes), Err(SignalError::NoChannels)));
    }

    #[test]
    fn truncated_records_rejected() {
        let bytes = encode_edf(&integer_recording()).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        assert!(matches!(parse_edf::<f64>(cut), Err(SignalError::Truncated { .. })));
    }

    #[test]
    fn bad_annotation_rejected() {
        let rec = integer_recording();
        let mut bytes = encode_edf(&rec).unwrap();
        let header = FIXED_HEADER * 4;
        let record = 2 * 2 * 160;
        // overwrite the first time-keeping TAL's sign
        let pos = header + record;
        assert_eq!(bytes[pos], b'+');
        bytes[pos] = b'x';
        assert!(matches!(parse_edf::<f64>(&bytes), Err(SignalError::Annotation(_))));
    }

    #[test]
    fn discontinuous_rejected() {
        let mut bytes = encode_edf(&integer_recording()).unwrap();
        bytes[192..197].copy_from_slice(b"EDF+D");
        assert!(matches!(parse_edf::<f64>(&bytes), Err(SignalError::Unsupported(_))));
    }
}
