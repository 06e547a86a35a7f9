//! MFCC extraction with delta and delta-delta appendage, run independently
//! for every sub-band.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dsp::{self, FramedSignal, SubbandSet};
use crate::{Error, Matrix, Result};

pub const LOG_FLOOR: f64 = 1e-10;
pub const WIDE_BAND_FILTERS: usize = 26;
pub const MAX_CEPS: usize = 13;
pub const MIN_SUBBAND_FILTERS: usize = 8;
pub const DEFAULT_FFT_SIZE: usize = 512;
pub const DEFAULT_DELTA_WINDOW: usize = 2;

/// `2595 log10(1 + f / 700)`.
pub fn mel(f_hz: f64) -> f64 {
    2595.0 * (1.0 + f_hz / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MfccConfig {
    pub n_mel_filters: usize,
    pub n_ceps: usize,
    pub fft_size: usize,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    /// Replace c0 with the log frame energy.
    pub include_log_energy: bool,
    pub delta_window: usize,
}

impl MfccConfig {
    /// 26 filters, 13 cepstra over `[0, nyquist]`.
    pub fn wide_band(sample_rate: u32) -> Self {
        MfccConfig {
            n_mel_filters: WIDE_BAND_FILTERS,
            n_ceps: MAX_CEPS,
            fft_size: DEFAULT_FFT_SIZE,
            band_low_hz: 0.0,
            band_high_hz: sample_rate as f64 / 2.0,
            include_log_energy: false,
            delta_window: DEFAULT_DELTA_WINDOW,
        }
    }

    /// Filter count scaled with the band's share of the full mel range
    /// (at least 8), `n_ceps = min(13, filters)`.
    pub fn for_band(low_hz: f64, high_hz: f64, sample_rate: u32) -> Self {
        let full = mel(sample_rate as f64 / 2.0);
        let share = (mel(high_hz) - mel(low_hz)) / full;
        let n_mel_filters = ((WIDE_BAND_FILTERS as f64 * share).round() as usize).max(MIN_SUBBAND_FILTERS);
        MfccConfig {
            n_mel_filters,
            n_ceps: MAX_CEPS.min(n_mel_filters),
            band_low_hz: low_hz,
            band_high_hz: high_hz,
            ..MfccConfig::wide_band(sample_rate)
        }
    }

    pub fn validate(&self, frame_len: usize) -> Result<()> {
        if self.n_mel_filters == 0 || self.n_ceps == 0 || self.n_ceps > self.n_mel_filters {
            return Err(Error::Config(format!(
                "n_ceps {} must be in 1..={}",
                self.n_ceps, self.n_mel_filters
            )));
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < frame_len {
            return Err(Error::Config(format!(
                "fft size {} must be a power of two no smaller than the {frame_len}-sample frame",
                self.fft_size
            )));
        }
        if !(self.band_low_hz >= 0.0 && self.band_low_hz < self.band_high_hz) {
            return Err(Error::Config(format!(
                "filterbank span {}-{} Hz is empty",
                self.band_low_hz, self.band_high_hz
            )));
        }
        Ok(())
    }

    /// Feature dimension after deltas.
    pub fn output_dim(&self) -> usize {
        3 * self.n_ceps
    }
}

/// T x D matrix of per-frame feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSequence(Matrix);

impl FeatureSequence {
    pub fn new(frames: Matrix) -> Result<Self> {
        if frames.rows() == 0 {
            return Err(Error::InvalidArgument("feature sequence has no frames".into()));
        }
        if frames.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("feature sequence has non-finite values".into()));
        }
        Ok(FeatureSequence(frames))
    }

    pub fn n_frames(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        self.0.row(t)
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.0.iter_rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Frames of `self` followed by frames of `other`.
    pub fn concat(&self, other: &FeatureSequence) -> Result<FeatureSequence> {
        Ok(FeatureSequence(self.0.vstack(&other.0)?))
    }
}

/// In-place iterative radix-2 FFT; `buf.len()` must be a power of two.
fn fft(buf: &mut [Complex64]) {
    let n = buf.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let step = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
                w *= step;
            }
        }
        len <<= 1;
    }
}

/// `|X[k]|^2` for `k = 0..=fft_size/2`.
pub fn power_spectrum(frame: &[f64], fft_size: usize) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for (b, &x) in buf.iter_mut().zip(frame) {
        b.re = x;
    }
    fft(&mut buf);
    buf[..=fft_size / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// `|X[k]|` for `k = 0..=fft_size/2`.
pub fn magnitude_spectrum(frame: &[f64], fft_size: usize) -> Vec<f64> {
    power_spectrum(frame, fft_size).into_iter().map(|p| p.sqrt()).collect()
}

/// Triangular mel filters with centres evenly spaced in mel from the band's
/// low edge to its high edge (inclusive); each foot sits on the neighbouring
/// centre, so responses inside the band sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MelFilterbank {
    centers_mel: Vec<f64>,
    spacing: f64,
    /// n_filters x (fft_size/2 + 1)
    weights: Matrix,
}

impl MelFilterbank {
    pub fn new(config: &MfccConfig, sample_rate: u32) -> Self {
        let lo = mel(config.band_low_hz);
        let hi = mel(config.band_high_hz);
        let n = config.n_mel_filters;
        let spacing = if n > 1 { (hi - lo) / (n - 1) as f64 } else { hi - lo };
        let centers_mel: Vec<f64> = if n > 1 {
            (0..n).map(|i| lo + spacing * i as f64).collect()
        } else {
            vec![(lo + hi) / 2.0]
        };
        let n_bins = config.fft_size / 2 + 1;
        let mut fb = MelFilterbank {
            centers_mel,
            spacing,
            weights: Matrix::zeros(n, n_bins),
        };
        for k in 0..n_bins {
            let f = k as f64 * sample_rate as f64 / config.fft_size as f64;
            for i in 0..n {
                let w = fb.response(i, f);
                fb.weights.set(i, k, w);
            }
        }
        fb
    }

    pub fn n_filters(&self) -> usize {
        self.centers_mel.len()
    }

    pub fn center_hz(&self, i: usize) -> f64 {
        mel_to_hz(self.centers_mel[i])
    }

    /// Response of filter `i` at `f_hz`.
    pub fn response(&self, i: usize, f_hz: f64) -> f64 {
        let m = mel(f_hz);
        (1.0 - (m - self.centers_mel[i]).abs() / self.spacing).max(0.0)
    }

    /// Filterbank energies of one power spectrum.
    pub fn energies(&self, power: &[f64]) -> Vec<f64> {
        self.weights
            .iter_rows()
            .map(|w| w.iter().zip(power).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Orthonormal DCT-II, first `n_out` coefficients.
fn dct2(input: &[f64], n_out: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * input
                    .iter()
                    .enumerate()
                    .map(|(i, x)| x * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Power spectrum -> mel filterbank -> floored log -> DCT-II, per frame.
pub fn compute_mfcc(framed: &FramedSignal, config: &MfccConfig, sample_rate: u32) -> Result<FeatureSequence> {
    config.validate(framed.frame_len())?;
    if framed.n_frames() == 0 {
        return Err(Error::InvalidArgument("no frames".into()));
    }
    let fb = MelFilterbank::new(config, sample_rate);
    let mut out = Matrix::zeros(framed.n_frames(), config.n_ceps);
    for (t, frame) in framed.frames().enumerate() {
        let mag = magnitude_spectrum(frame, config.fft_size);
        let log_e: Vec<f64> = fb.energies(&mag).iter().map(|&e| e.max(LOG_FLOOR).ln()).collect();
        let mut ceps = dct2(&log_e, config.n_ceps);
        if config.include_log_energy {
            let e: f64 = frame.iter().map(|x| x * x).sum();
            ceps[0] = e.max(LOG_FLOOR).ln();
        }
        out.row_mut(t).copy_from_slice(&ceps);
    }
    FeatureSequence::new(out)
}

/// Regression deltas over `+-window` frames with edge replication.
fn deltas(m: &Matrix, window: usize) -> Matrix {
    let t_len = m.rows() as isize;
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for t in 0..m.rows() {
        for n in 1..=window {
            let fwd = m.row(((t + n) as isize).min(t_len - 1) as usize);
            let back = m.row((t as isize - n as isize).max(0) as usize);
            let row = out.row_mut(t);
            for d in 0..row.len() {
                row[d] += n as f64 * (fwd[d] - back[d]);
            }
        }
        for v in out.row_mut(t) {
            *v /= denom;
        }
    }
    out
}

/// `[c, delta c, delta-delta c]` per frame.
pub fn append_deltas(features: &FeatureSequence, delta_window: usize) -> Result<FeatureSequence> {
    let t = features.n_frames();
    if delta_window == 0 || t < 2 * delta_window + 1 {
        return Err(Error::Delta {
            frames: t,
            window: delta_window,
        });
    }
    let base = features.matrix();
    let d1 = deltas(base, delta_window);
    let d2 = deltas(&d1, delta_window);
    let dim = base.cols();
    let mut out = Matrix::zeros(t, 3 * dim);
    for i in 0..t {
        let row = out.row_mut(i);
        row[..dim].copy_from_slice(base.row(i));
        row[dim..2 * dim].copy_from_slice(d1.row(i));
        row[2 * dim..].copy_from_slice(d2.row(i));
    }
    FeatureSequence::new(out)
}

/// Framing geometry plus one MFCC config per band.
#[derive(Clone, Debug, PartialEq)]
pub struct BandFeatureConfig {
    pub frame_len_ms: f64,
    pub hop_ms: f64,
    pub bands: Vec<MfccConfig>,
}

impl BandFeatureConfig {
    /// Default geometry with per-band configs derived from the plan's edges.
    pub fn for_plan(plan: &dsp::BandPlan) -> Self {
        let sr = plan.sample_rate();
        let bands = (0..plan.len())
            .map(|b| {
                if plan.is_full_range(b) {
                    MfccConfig::wide_band(sr)
                } else {
                    let (lo, hi) = plan.bands()[b];
                    MfccConfig::for_band(lo, hi, sr)
                }
            })
            .collect();
        BandFeatureConfig {
            frame_len_ms: dsp::DEFAULT_FRAME_MS,
            hop_ms: dsp::DEFAULT_HOP_MS,
            bands,
        }
    }
}

/// frame_and_window -> compute_mfcc -> append_deltas for each band signal.
pub fn extract_band_features(set: &SubbandSet, config: &BandFeatureConfig) -> Result<Vec<FeatureSequence>> {
    if set.band_signals.len() != config.bands.len() {
        return Err(Error::Shape {
            expected: config.bands.len(),
            got: set.band_signals.len(),
        });
    }
    set.band_signals
        .iter()
        .zip(&config.bands)
        .map(|(signal, mfcc)| {
            let framed = dsp::frame_and_window(signal, set.sample_rate, config.frame_len_ms, config.hop_ms)?;
            let ceps = compute_mfcc(&framed, mfcc, set.sample_rate)?;
            append_deltas(&ceps, mfcc.delta_window)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{decompose_subbands, frame_and_window, BandPlan};

    fn tone(freq: f64, n: usize, sr: f64, amp: f64) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / sr).sin()).collect()
    }

    #[test]
    fn mel_scale() {
        assert_eq!(mel(0.0), 0.0);
        assert!((mel(700.0) - 781.17).abs() < 0.01);
        assert!(mel(1000.0) > mel(700.0));
        assert!((mel_to_hz(mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn fft_matches_direct_dft() {
        let x: Vec<f64> = (0..16).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let p = power_spectrum(&x, 16);
        for k in 0..=8 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * n) as f64 / 16.0;
                acc += Complex64::new(a.cos(), a.sin()) * v;
            }
            assert!((acc.norm_sqr() - p[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn subband_filter_counts() {
        let c = MfccConfig::for_band(0.0, 360.0, 16_000);
        assert_eq!(c.n_mel_filters, MIN_SUBBAND_FILTERS);
        assert_eq!(c.n_ceps, 8);
        let c = MfccConfig::for_band(1046.0, 4000.0, 16_000);
        assert!(c.n_mel_filters >= 8 && c.n_mel_filters < 26);
        assert_eq!(c.output_dim(), 3 * c.n_ceps);
        assert_eq!(MfccConfig::wide_band(16_000).output_dim(), 39);
    }

    #[test]
    fn config_validation() {
        let mut c = MfccConfig::wide_band(16_000);
        assert!(c.validate(400).is_ok());
        c.fft_size = 256;
        assert!(matches!(c.validate(400), Err(Error::Config(_))));
        c.fft_size = 600;
        assert!(c.validate(400).is_err());
        let mut c = MfccConfig::wide_band(16_000);
        c.n_ceps = 27;
        assert!(c.validate(400).is_err());
    }

    #[test]
    fn mfcc_shape_and_determinism() {
        let x = tone(500.0, 4000, 16_000.0, 0.5);
        let framed = frame_and_window(&x, 16_000, 25.0, 10.0).unwrap();
        let cfg = MfccConfig::wide_band(16_000);
        let f = compute_mfcc(&framed, &cfg, 16_000).unwrap();
        assert_eq!(f.n_frames(), framed.n_frames());
        assert_eq!(f.dim(), 13);
        // periodic tone with hop a multiple of the period -> identical frames
        let period_aligned = tone(500.0, 4000, 16_000.0, 0.5);
        let fr = frame_and_window(&period_aligned, 16_000, 25.0, 10.0).unwrap();
        let g = compute_mfcc(&fr, &cfg, 16_000).unwrap();
        for t in 1..g.n_frames() {
            for (a, b) in g.frame(0).iter().zip(g.frame(t)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_frames_stay_finite() {
        let framed = frame_and_window(&[0.0; 800], 16_000, 25.0, 10.0).unwrap();
        let f = compute_mfcc(&framed, &MfccConfig::wide_band(16_000), 16_000).unwrap();
        assert!(f.matrix().as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn sine_at_filter_center_peaks_that_filter() {
        let cfg = MfccConfig::wide_band(16_000);
        let fb = MelFilterbank::new(&cfg, 16_000);
        for k in [3usize, 8, 15, 20] {
            let f = fb.center_hz(k);
            let framed = frame_and_window(&tone(f, 400, 16_000.0, 0.8), 16_000, 25.0, 10.0).unwrap();
            let e = fb.energies(&magnitude_spectrum(framed.frame(0), 512));
            let arg = e
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v > e[best] { i } else { best });
            assert_eq!(arg, k, "centre {f} Hz");
        }
    }

    #[test]
    fn filterbank_covers_band_evenly() {
        for (lo, hi) in [(0.0, 8000.0), (1046.0, 4000.0), (330.0, 640.0)] {
            let mut cfg = MfccConfig::for_band(lo, hi, 16_000);
            if lo == 0.0 && hi == 8000.0 {
                cfg = MfccConfig::wide_band(16_000);
            }
            let fb = MelFilterbank::new(&cfg, 16_000);
            for step in 0..=200 {
                let f = lo + (hi - lo) * step as f64 / 200.0;
                let s: f64 = (0..fb.n_filters()).map(|i| fb.response(i, f)).sum();
                assert!((0.5..=1.5).contains(&s), "{f} Hz sum {s}");
            }
        }
    }

    #[test]
    fn deltas_constant_and_ramp() {
        let c = Matrix::from_rows(&vec![vec![1.5, -2.0]; 9]).unwrap();
        let out = append_deltas(&FeatureSequence::new(c).unwrap(), 2).unwrap();
        assert_eq!(out.dim(), 6);
        for f in out.frames() {
            assert!(f[2..].iter().all(|&v| v == 0.0));
        }
        let ramp: Vec<Vec<f64>> = (0..12).map(|t| vec![t as f64, -3.0 * t as f64]).collect();
        let out = append_deltas(&FeatureSequence::new(Matrix::from_rows(&ramp).unwrap()).unwrap(), 2).unwrap();
        // interior: delta equals the slope, delta-delta vanishes
        for t in 4..8 {
            let f = out.frame(t);
            assert!((f[2] - 1.0).abs() < 1e-12 && (f[3] + 3.0).abs() < 1e-12);
            assert!(f[4].abs() < 1e-12 && f[5].abs() < 1e-12);
        }
        let short = FeatureSequence::new(Matrix::from_rows(&vec![vec![0.0]; 4]).unwrap()).unwrap();
        assert_eq!(append_deltas(&short, 2), Err(Error::Delta { frames: 4, window: 2 }));
    }

    #[test]
    fn band_features_share_frame_count() {
        let x = tone(800.0, 8000, 16_000.0, 0.3);
        let plan = BandPlan::preset(2, 16_000).unwrap();
        let set = decompose_subbands(&x, 16_000, &plan).unwrap();
        let feats = extract_band_features(&set, &BandFeatureConfig::for_plan(&plan)).unwrap();
        assert_eq!(feats.len(), 2);
        assert_eq!(feats[0].n_frames(), feats[1].n_frames());
        assert_eq!(feats[0].n_frames(), (8000 - 400) / 160 + 1);
    }

    #[test]
    fn full_band_plan_matches_wide_band_chain() {
        let x = tone(800.0, 4000, 16_000.0, 0.3);
        let plan = BandPlan::full(16_000);
        let set = decompose_subbands(&x, 16_000, &plan).unwrap();
        let via_plan = extract_band_features(&set, &BandFeatureConfig::for_plan(&plan)).unwrap();
        let framed = frame_and_window(&x, 16_000, 25.0, 10.0).unwrap();
        let direct = append_deltas(&compute_mfcc(&framed, &MfccConfig::wide_band(16_000), 16_000).unwrap(), 2).unwrap();
        assert_eq!(via_plan[0], direct);
    }

    #[test]
    fn out_of_band_energy_barely_moves_band_features() {
        // low band 0-1140 Hz; inject a tone two octaves above its edge
        let sr = 16_000.0;
        let plan = BandPlan::preset(2, 16_000).unwrap();
        let cfg = BandFeatureConfig::for_plan(&plan);
        let base = tone(500.0, 8000, sr, 0.4);
        let noisy: Vec<f64> = base
            .iter()
            .zip(tone(4560.0, 8000, sr, 0.4))
            .map(|(a, b)| a + b)
            .collect();
        let energies = |x: &[f64]| -> Vec<f64> {
            let set = decompose_subbands(x, 16_000, &plan).unwrap();
            let framed = frame_and_window(&set.band_signals[0], 16_000, 25.0, 10.0).unwrap();
            let fb = MelFilterbank::new(&cfg.bands[0], 16_000);
            let mut total = vec![0.0; fb.n_filters()];
            for f in framed.frames().skip(5).take(30) {
                for (t, e) in total.iter_mut().zip(fb.energies(&magnitude_spectrum(f, 512))) {
                    *t += e;
                }
            }
            total
        };
        let a = energies(&base);
        let b = energies(&noisy);
        let rel = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.iter().sum::<f64>();
        assert!(rel <= 0.10, "relative change {rel}");
    }
}
