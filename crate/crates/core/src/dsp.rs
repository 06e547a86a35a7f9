//! Pre-processing chain and sub-band decomposition.
//!
//! Pre-emphasis, energy-based endpoint detection, framing with a Hamming
//! window, and second-order Butterworth band-pass filters applied
//! forward-backward (zero phase).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub const DEFAULT_PRE_EMPHASIS: f64 = 0.97;
pub const DEFAULT_FRAME_MS: f64 = 25.0;
pub const DEFAULT_HOP_MS: f64 = 10.0;

/// `y[0] = x[0]`, `y[n] = x[n] - alpha * x[n-1]`.
pub fn pre_emphasize(samples: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "pre-emphasis coefficient {alpha} outside [0, 1)"
        )));
    }
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        out.push(if i == 0 { x } else { x - alpha * prev });
        prev = x;
    }
    Ok(out)
}

/// Inverse of [`pre_emphasize`].
pub fn de_emphasize(samples: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut prev = 0.0;
    for (i, &y) in samples.iter().enumerate() {
        let x = if i == 0 { y } else { y + alpha * prev };
        out.push(x);
        prev = x;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointParams {
    pub frame_ms: f64,
    /// Leading frames averaged into the noise floor.
    pub floor_frames: usize,
    pub threshold_db: f64,
    /// Consecutive frames above threshold needed to confirm an onset/offset.
    pub hysteresis: usize,
    /// Mean-square energy below which a frame never counts as speech.
    pub min_energy: f64,
    /// Floor-to-peak contrast below which the clip has no detectable
    /// silence and is kept whole.
    pub min_contrast_db: f64,
}

impl Default for EndpointParams {
    fn default() -> Self {
        EndpointParams {
            frame_ms: 10.0,
            floor_frames: 5,
            threshold_db: 10.0,
            hysteresis: 3,
            min_energy: 1e-10,
            min_contrast_db: 3.0,
        }
    }
}

/// Returns the `[start, end)` sample range of the utterance.
///
/// Frame energies are mean squares over non-overlapping frames. The threshold
/// is `threshold_db` above the leading noise floor, or halfway (in dB) between
/// floor and loudest frame when the contrast is smaller than twice that, as
/// happens under strong stationary noise. Clips with less than
/// `min_contrast_db` of contrast are kept whole. Onset is the first run of `hysteresis` active frames, offset
/// the last such run scanning backwards. When the last full frame is active
/// the trailing partial frame is included.
pub fn detect_endpoints(
    samples: &[f64],
    sample_rate: u32,
    params: &EndpointParams,
) -> Result<(usize, usize)> {
    let flen = ((params.frame_ms * sample_rate as f64 / 1000.0).round() as usize).max(1);
    let n_frames = samples.len() / flen;
    if n_frames < 3 || n_frames < params.hysteresis {
        return Err(Error::Framing(format!(
            "{} samples is fewer than 3 endpoint frames of {flen}",
            samples.len()
        )));
    }
    let energy: Vec<f64> = samples
        .chunks_exact(flen)
        .map(|f| f.iter().map(|x| x * x).sum::<f64>() / flen as f64)
        .collect();
    let k = params.floor_frames.clamp(1, n_frames);
    let floor = energy[..k].iter().sum::<f64>() / k as f64;
    let peak = energy.iter().cloned().fold(0.0, f64::max);
    if peak <= params.min_energy {
        return Err(Error::Silence);
    }
    let contrast_db = if floor > 0.0 { 10.0 * (peak / floor).log10() } else { f64::INFINITY };
    if contrast_db < params.min_contrast_db {
        return Ok((0, samples.len()));
    }
    let margin_db = params.threshold_db.min(contrast_db / 2.0);
    let threshold = (floor * 10f64.powf(margin_db / 10.0)).max(params.min_energy);
    let active: Vec<bool> = energy.iter().map(|&e| e > threshold).collect();
    let h = params.hysteresis.max(1);
    let run_at = |i: usize| active[i..i + h].iter().all(|&a| a);
    let first = (0..=n_frames - h).find(|&i| run_at(i)).ok_or(Error::Silence)?;
    let last = (0..=n_frames - h).rev().find(|&i| run_at(i)).ok_or(Error::Silence)? + h - 1;
    let start = first * flen;
    let end = if last == n_frames - 1 {
        samples.len()
    } else {
        (last + 1) * flen
    };
    Ok((start, end))
}

/// `w[n] = 0.54 - 0.46 cos(2 pi n / (L - 1))`.
pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
        .collect()
}

/// Windowed frames stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct FramedSignal {
    frame_len: usize,
    hop: usize,
    data: Vec<f64>,
    pub frame_len_ms: f64,
    pub hop_ms: f64,
}

impl FramedSignal {
    pub fn n_frames(&self) -> usize {
        self.data.len() / self.frame_len
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.frame_len..(t + 1) * self.frame_len]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.frame_len)
    }
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// Splits into `T = floor((N - L) / hop) + 1` frames and applies a Hamming window.
pub fn frame_and_window(
    samples: &[f64],
    sample_rate: u32,
    frame_len_ms: f64,
    hop_ms: f64,
) -> Result<FramedSignal> {
    let frame_len = ms_to_samples(frame_len_ms, sample_rate);
    let hop = ms_to_samples(hop_ms, sample_rate);
    if frame_len < 2 || hop < 1 {
        return Err(Error::Framing(format!(
            "frame of {frame_len} samples / hop of {hop} samples is degenerate"
        )));
    }
    if samples.len() < frame_len {
        return Err(Error::Framing(format!(
            "{} samples is shorter than one {frame_len}-sample frame",
            samples.len()
        )));
    }
    let n_frames = (samples.len() - frame_len) / hop + 1;
    let window = hamming(frame_len);
    let mut data = Vec::with_capacity(n_frames * frame_len);
    for t in 0..n_frames {
        let start = t * hop;
        data.extend(
            samples[start..start + frame_len]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w),
        );
    }
    Ok(FramedSignal {
        frame_len,
        hop,
        data,
        frame_len_ms,
        hop_ms,
    })
}

/// One biquad: `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + z_inv * self.b1 + z2 * self.b2) / (1.0 + z_inv * self.a1 + z2 * self.a2)
    }

    pub fn poles(&self) -> [Complex64; 2] {
        // roots of z^2 + a1 z + a2
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        [(-self.a1 + disc) / 2.0, (-self.a1 - disc) / 2.0]
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.norm() < 1.0)
    }
}

/// Second-order-section cascade.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterCoeffs {
    pub sections: Vec<Biquad>,
}

impl FilterCoeffs {
    /// Complex response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, sample_rate: u32) -> Complex64 {
        let w = 2.0 * PI * freq_hz / sample_rate as f64;
        let z_inv = Complex64::new(w.cos(), -w.sin());
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude_db(&self, freq_hz: f64, sample_rate: u32) -> f64 {
        20.0 * self.response(freq_hz, sample_rate).norm().log10()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }

    /// Causal single pass, transposed direct form II, zero initial state.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for x in out.iter_mut() {
                let y = s.b0 * *x + z1;
                z1 = s.b1 * *x - s.a1 * y + z2;
                z2 = s.b2 * *x - s.a2 * y;
                *x = y;
            }
        }
        out
    }

    /// Forward pass then backward pass; zero phase, squared magnitude.
    pub fn filtfilt(&self, input: &[f64]) -> Vec<f64> {
        let mut y = self.apply(input);
        y.reverse();
        let mut y = self.apply(&y);
        y.reverse();
        y
    }
}

/// Bilinear map `z = (2 fs + s) / (2 fs - s)`.
fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    (2.0 * fs + s) / (2.0 * fs - s)
}

fn prewarp(freq_hz: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * freq_hz / fs).tan()
}

/// Poles of the normalised 2nd-order Butterworth prototype.
fn prototype_poles() -> [Complex64; 2] {
    let r = core::f64::consts::FRAC_1_SQRT_2;
    [Complex64::new(-r, r), Complex64::new(-r, -r)]
}

fn section_from_pole(p: Complex64, b: [f64; 3]) -> Biquad {
    Biquad {
        b0: b[0],
        b1: b[1],
        b2: b[2],
        a1: -2.0 * p.re,
        a2: p.norm_sqr(),
    }
}

/// Digital 2nd-order Butterworth band-pass (bilinear transform, both edges
/// pre-warped): the low-pass prototype mapped to a band-pass, giving four
/// poles in two sections and exactly -3 dB at both edges. `low_hz == 0`
/// yields a 2nd-order low-pass at `high_hz` instead.
pub fn design_bandpass(low_hz: f64, high_hz: f64, sample_rate: u32) -> Result<FilterCoeffs> {
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    if !(low_hz.is_finite() && high_hz.is_finite())
        || low_hz < 0.0
        || high_hz <= low_hz
        || high_hz >= nyquist
    {
        return Err(Error::Design(format!(
            "band {low_hz}-{high_hz} Hz is not inside (0, {nyquist}) Hz"
        )));
    }
    if low_hz == 0.0 {
        let wc = prewarp(high_hz, fs);
        let p = bilinear(prototype_poles()[0] * wc, fs);
        let mut s = section_from_pole(p, [1.0, 2.0, 1.0]);
        // unit gain at DC
        let g = (1.0 + s.a1 + s.a2) / 4.0;
        s.b0 *= g;
        s.b1 *= g;
        s.b2 *= g;
        return Ok(FilterCoeffs { sections: vec![s] });
    }
    let w1 = prewarp(low_hz, fs);
    let w2 = prewarp(high_hz, fs);
    let bw = w2 - w1;
    let w0_sq = w1 * w2;
    // s = (p B +- sqrt(p^2 B^2 - 4 w0^2)) / 2 for the upper-half prototype pole;
    // the conjugate pole yields the conjugates.
    let p = prototype_poles()[0];
    let root = (p * p * bw * bw - 4.0 * w0_sq).sqrt();
    let analog = [(p * bw + root) / 2.0, (p * bw - root) / 2.0];
    let mut sections: Vec<Biquad> = analog
        .iter()
        .map(|&s| {
            let z = bilinear(s, fs);
            // conjugate pair per section; one zero at z = 1 and one at z = -1
            let pole = if z.im >= 0.0 { z } else { z.conj() };
            section_from_pole(pole, [1.0, 0.0, -1.0])
        })
        .collect();
    let mut coeffs = FilterCoeffs {
        sections: sections.clone(),
    };
    let center = (w0_sq.sqrt() / (2.0 * fs)).atan() * fs / PI;
    let gain = coeffs.response(center, sample_rate).norm();
    let per_section = 1.0 / gain.sqrt();
    for s in sections.iter_mut() {
        s.b0 *= per_section;
        s.b1 *= per_section;
        s.b2 *= per_section;
    }
    coeffs.sections = sections;
    Ok(coeffs)
}

/// Ordered list of (low, high) band edges in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPlan {
    bands: Vec<(f64, f64)>,
    sample_rate: u32,
}

impl BandPlan {
    pub fn new(bands: Vec<(f64, f64)>, sample_rate: u32) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        if bands.is_empty() {
            return Err(Error::InvalidArgument("band plan has no bands".into()));
        }
        for &(lo, hi) in &bands {
            if !(lo >= 0.0 && lo < hi && hi <= nyquist) {
                return Err(Error::InvalidArgument(format!(
                    "band {lo}-{hi} Hz outside [0, {nyquist}]"
                )));
            }
        }
        if bands.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidArgument(
                "bands must be ordered by their low edge".into(),
            ));
        }
        Ok(BandPlan { bands, sample_rate })
    }

    /// Single band covering the whole spectrum (the wide-band baseline).
    pub fn full(sample_rate: u32) -> Self {
        BandPlan {
            bands: vec![(0.0, sample_rate as f64 / 2.0)],
            sample_rate,
        }
    }

    /// The overlapping 2-, 4- and 7-band layouts; `1` gives [`BandPlan::full`].
    pub fn preset(n_bands: usize, sample_rate: u32) -> Result<Self> {
        let bands: &[(f64, f64)] = match n_bands {
            1 => return Ok(BandPlan::full(sample_rate)),
            2 => &[(0.0, 1140.0), (1046.0, 4000.0)],
            4 => &[(0.0, 765.0), (400.0, 1640.0), (1020.0, 2700.0), (1860.0, 4000.0)],
            7 => &[
                (0.0, 360.0),
                (330.0, 640.0),
                (580.0, 950.0),
                (860.0, 1360.0),
                (1265.0, 1920.0),
                (1800.0, 2700.0),
                (2515.0, 4000.0),
            ],
            n => {
                return Err(Error::InvalidArgument(format!(
                    "no preset band plan with {n} bands (use 1, 2, 4 or 7)"
                )))
            }
        };
        BandPlan::new(bands.to_vec(), sample_rate)
    }

    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn is_full_range(&self, band: usize) -> bool {
        let (lo, hi) = self.bands[band];
        lo == 0.0 && hi >= self.sample_rate as f64 / 2.0
    }

    /// Filter for `band`, or `None` for a full-range band.
    pub fn filter(&self, band: usize) -> Result<Option<FilterCoeffs>> {
        if self.is_full_range(band) {
            return Ok(None);
        }
        let (lo, hi) = self.bands[band];
        design_bandpass(lo, hi, self.sample_rate).map(Some)
    }
}

/// Per-band signals, one for each band of the plan.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandSet {
    pub band_signals: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

/// Zero-phase filtering of the full clip through each band's filter. Full
/// range bands pass the input through untouched.
pub fn decompose_subbands(samples: &[f64], sample_rate: u32, plan: &BandPlan) -> Result<SubbandSet> {
    if plan.sample_rate() != sample_rate {
        return Err(Error::InvalidArgument(format!(
            "band plan is for {} Hz, clip is {sample_rate} Hz",
            plan.sample_rate()
        )));
    }
    let band_signals = (0..plan.len())
        .map(|b| {
            Ok(match plan.filter(b)? {
                Some(f) => f.filtfilt(samples),
                None => samples.to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubbandSet {
        band_signals,
        sample_rate,
    })
}
