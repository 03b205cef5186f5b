//! Butterworth band-pass design and zero-phase (forward-backward) filtering.
//!
//! The analog low-pass prototype is shifted to a band-pass, mapped through
//! the bilinear transform with frequency prewarping and realized as
//! second-order sections in transposed direct form II. Edges are padded by
//! odd reflection and the filter state starts at its step steady state, so
//! constant signals pass through without transients.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Recording, SignalError};
use crate::scalar::Real;

/// Order of the low-pass prototype; the band-pass has twice as many poles.
pub const BUTTERWORTH_ORDER: usize = 4;

/// Second-order section `b(z)/a(z)` with `a[0] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Sos>,
    sample_rate: f64,
}

impl Butterworth {
    pub fn bandpass(order: usize, lo: f64, hi: f64, sample_rate: f64) -> Result<Self, SignalError> {
        let nyquist = sample_rate / 2.0;
        if !(lo > 0.0 && lo < hi && hi < nyquist) || order == 0 {
            return Err(SignalError::Band { lo, hi, nyquist });
        }
        let fs2 = 2.0 * sample_rate;
        let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();
        let (w1, w2) = (warp(lo), warp(hi));
        let bw = w2 - w1;
        let w0 = (w1 * w2).sqrt();

        let mut upper = Vec::new();
        let mut real = Vec::new();
        for k in 0..order {
            let theta = PI * (2 * k + 1 + order) as f64 / (2 * order) as f64;
            let q = Complex64::from_polar(1.0, theta) * (bw / 2.0);
            let disc = (q * q - w0 * w0).sqrt();
            for s in [q + disc, q - disc] {
                let z = (fs2 + s) / (fs2 - s);
                if z.im > 1e-12 {
                    upper.push(z);
                } else if z.im.abs() <= 1e-12 {
                    real.push(z.re);
                }
            }
        }
        real.sort_by(f64::total_cmp);

        let mut sections: Vec<Sos> = upper
            .iter()
            .map(|p| Sos {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * p.re, p.norm_sqr()],
            })
            .chain(real.chunks(2).map(|pair| {
                let (p1, p2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
                Sos {
                    b: [1.0, 0.0, -1.0],
                    a: [1.0, -(p1 + p2), p1 * p2],
                }
            }))
            .collect();
        debug_assert_eq!(sections.len(), order);

        // unit gain at the band centre, where the analog prototype peaks
        let centre = 2.0 * (w0 / fs2).atan();
        let mut filt = Self {
            sections: sections.clone(),
            sample_rate,
        };
        let g = 1.0 / filt.response_at_radians(centre).norm();
        for b in &mut sections[0].b {
            *b *= g;
        }
        filt.sections = sections;
        Ok(filt)
    }

    pub fn sections(&self) -> &[Sos] {
        &self.sections
    }

    /// Edge padding length, matching the common `3·(2·sections + 1)` rule.
    pub fn padlen(&self) -> usize {
        3 * (2 * self.sections.len() + 1)
    }

    fn response_at_radians(&self, omega: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    /// Single-pass complex response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        self.response_at_radians(2.0 * PI * freq / self.sample_rate)
    }

    /// Per-section initial state for a unit step input.
    fn step_state(&self) -> Vec<[f64; 2]> {
        let mut level = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let g = s.dc_gain();
                let z = [level * (g - s.b[0]), level * (s.b[2] - s.a[2] * g)];
                level *= g;
                z
            })
            .collect()
    }

    fn run<T: Real>(&self, x: &mut [T], init: &[[f64; 2]], scale: T) {
        for (s, z0) in self.sections.iter().zip(init) {
            let [b0, b1, b2] = s.b.map(T::lit);
            let [_, a1, a2] = s.a.map(T::lit);
            let mut z1 = T::lit(z0[0]) * scale;
            let mut z2 = T::lit(z0[1]) * scale;
            for v in x.iter_mut() {
                let input = *v;
                let y = b0 * input + z1;
                z1 = b1 * input - a1 * y + z2;
                z2 = b2 * input - a2 * y;
                *v = y;
            }
        }
    }
}

/// Zero-phase filtering: forward pass, time reversal, second pass.
pub fn filtfilt<T: Real>(filter: &Butterworth, x: &[T]) -> Result<Vec<T>, SignalError> {
    let pad = filter.padlen();
    let n = x.len();
    if n <= pad {
        return Err(SignalError::TooShort { len: n, needed: pad });
    }
    let two = T::lit(2.0);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|k| two * x[0] - x[k]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|k| two * x[n - 1] - x[n - 1 - k]));

    let zi = filter.step_state();
    let first = ext[0];
    filter.run(&mut ext, &zi, first);
    ext.reverse();
    let first = ext[0];
    filter.run(&mut ext, &zi, first);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// Zero-phase Butterworth band-pass of every channel; shape and metadata
/// are preserved.
pub fn bandpass<T: Real>(rec: &Recording<T>, lo: f64, hi: f64) -> Result<Recording<T>, SignalError> {
    let filter = Butterworth::bandpass(BUTTERWORTH_ORDER, lo, hi, rec.sample_rate())?;
    let (channels, samples) = rec.data().shape();
    let mut out = DMatrix::<T>::zeros(channels, samples);
    for c in 0..channels {
        let row: Vec<T> = rec.data().row(c).iter().copied().collect();
        let y = filtfilt(&filter, &row)?;
        for (k, v) in y.into_iter().enumerate() {
            out[(c, k)] = v;
        }
    }
    Ok(rec.with_data(out))
}
