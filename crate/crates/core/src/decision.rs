//! Likelihood-ratio confidence, accept/reject thresholding and the
//! evaluation metrics: identification rate, reliability, FAR/FRR sweeps and
//! score histograms.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceScore {
    pub lr: f64,
    pub claimed_index: usize,
    pub l_claimed: f64,
    pub l_avg: f64,
    pub n_speakers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accepted,
    Rejected,
}

impl Decision {
    pub fn is_accepted(self) -> bool {
        self == Decision::Accepted
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accepted => "accepted",
            Decision::Rejected => "rejected",
        }
    }
}

/// `lr = (l_claimed - mean(l)) / N`.
pub fn likelihood_ratio(scores: &[f64], claimed_index: usize) -> Result<ConfidenceScore> {
    if claimed_index >= scores.len() {
        return Err(Error::Index {
            index: claimed_index,
            len: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidArgument("scores must be finite".into()));
    }
    let n = scores.len();
    let l_avg = scores.iter().sum::<f64>() / n as f64;
    let l_claimed = scores[claimed_index];
    Ok(ConfidenceScore {
        lr: (l_claimed - l_avg) / n as f64,
        claimed_index,
        l_claimed,
        l_avg,
        n_speakers: n,
    })
}

/// Accepts iff `lr >= tau`.
pub fn decide(confidence: &ConfidenceScore, tau: f64) -> Decision {
    if confidence.lr >= tau {
        Decision::Accepted
    } else {
        Decision::Rejected
    }
}

/// Percentage of decisions equal to the ground truth.
pub fn identification_rate(decisions: &[u32], truth: &[u32]) -> Result<f64> {
    if decisions.is_empty() {
        return Err(Error::Metric("no trials".into()));
    }
    if decisions.len() != truth.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            got: decisions.len(),
        });
    }
    let correct = decisions.iter().zip(truth).filter(|(d, t)| d == t).count();
    Ok(100.0 * correct as f64 / decisions.len() as f64)
}

/// Identification rate minus true-rejection rate, both in percent.
pub fn reliability(identification_rate: f64, true_rejection_rate: f64) -> f64 {
    identification_rate - true_rejection_rate
}

fn percent_where(values: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    100.0 * values.iter().filter(|&&v| pred(v)).count() as f64 / values.len() as f64
}

/// Percentage of impostor LRs accepted at `tau`.
pub fn false_acceptance_rate(impostor_lrs: &[f64], tau: f64) -> Result<f64> {
    if impostor_lrs.is_empty() {
        return Err(Error::Metric("empty impostor population".into()));
    }
    Ok(percent_where(impostor_lrs, |v| v >= tau))
}

/// Percentage of genuine LRs rejected at `tau`.
pub fn false_rejection_rate(genuine_lrs: &[f64], tau: f64) -> Result<f64> {
    if genuine_lrs.is_empty() {
        return Err(Error::Metric("empty genuine population".into()));
    }
    Ok(percent_where(genuine_lrs, |v| v < tau))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub tau: f64,
    pub far: f64,
    pub frr: f64,
}

pub fn far_frr_sweep(genuine_lrs: &[f64], impostor_lrs: &[f64], taus: &[f64]) -> Result<Vec<CurvePoint>> {
    if genuine_lrs.is_empty() || impostor_lrs.is_empty() {
        return Err(Error::Metric("FAR/FRR sweep needs both populations".into()));
    }
    if taus.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Metric("tau grid must be sorted ascending".into()));
    }
    taus.iter()
        .map(|&tau| {
            Ok(CurvePoint {
                tau,
                far: false_acceptance_rate(impostor_lrs, tau)?,
                frr: false_rejection_rate(genuine_lrs, tau)?,
            })
        })
        .collect()
}

/// `n` evenly spaced thresholds running from just below the smallest pooled
/// LR to just above the largest, so the sweep starts at (100, 0) and ends at
/// (0, 100).
pub fn tau_grid(genuine_lrs: &[f64], impostor_lrs: &[f64], n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = pooled_range(genuine_lrs, impostor_lrs)?;
    let margin = ((hi - lo) * 0.01).max(1e-9 * (1.0 + lo.abs().max(hi.abs())));
    let (lo, hi) = (lo - margin, hi + margin);
    Ok(match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    })
}

fn pooled_range(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Metric("empty population".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in a.iter().chain(b) {
        if !v.is_finite() {
            return Err(Error::Metric(format!("non-finite score {v}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub genuine_mass: f64,
    pub impostor_mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histograms {
    pub bins: Vec<HistogramBin>,
}

impl Histograms {
    fn mode(&self, mass: impl Fn(&HistogramBin) -> f64) -> usize {
        let mut best = 0;
        for (i, b) in self.bins.iter().enumerate() {
            if mass(b) > mass(&self.bins[best]) {
                best = i;
            }
        }
        best
    }

    /// Index of the fullest genuine bin (lowest on ties).
    pub fn genuine_mode(&self) -> usize {
        self.mode(|b| b.genuine_mass)
    }

    pub fn impostor_mode(&self) -> usize {
        self.mode(|b| b.impostor_mass)
    }
}

/// Equal-width bins over the pooled range, each population normalized to
/// unit mass. A degenerate range puts everything into the first bin.
pub fn score_histograms(genuine_lrs: &[f64], impostor_lrs: &[f64], n_bins: usize) -> Result<Histograms> {
    if n_bins == 0 {
        return Err(Error::Metric("need at least one bin".into()));
    }
    let (lo, hi) = pooled_range(genuine_lrs, impostor_lrs)?;
    let width = (hi - lo) / n_bins as f64;
    let bin_of = |v: f64| -> usize {
        if width > 0.0 {
            (((v - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        }
    };
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            low: lo + width * i as f64,
            high: if i + 1 == n_bins { hi } else { lo + width * (i + 1) as f64 },
            genuine_mass: 0.0,
            impostor_mass: 0.0,
        })
        .collect();
    let g = 1.0 / genuine_lrs.len() as f64;
    for &v in genuine_lrs {
        bins[bin_of(v)].genuine_mass += g;
    }
    let w = 1.0 / impostor_lrs.len() as f64;
    for &v in impostor_lrs {
        bins[bin_of(v)].impostor_mass += w;
    }
    Ok(Histograms { bins })
}

/// Everything measured for one recognizer configuration at one threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Closed-set identification rate over the enrolled test utterances.
    pub identification_rate: f64,
    /// Impostor utterances rejected at `tau`, percent.
    pub true_rejection_rate: f64,
    /// `identification_rate - true_rejection_rate`, taken literally.
    pub reliability: f64,
    /// Genuine acceptance minus impostor acceptance at `tau`.
    pub decision_gap: f64,
    pub tau: f64,
    pub genuine_acceptance: f64,
    pub impostor_acceptance: f64,
    pub far_frr_curve: Vec<CurvePoint>,
    pub histograms: Histograms,
    pub genuine_lrs: Vec<f64>,
    pub impostor_lrs: Vec<f64>,
}

pub const SWEEP_POINTS: usize = 200;
pub const HISTOGRAM_BINS: usize = 30;

impl EvalReport {
    pub fn from_trials(
        decisions: &[u32],
        truth: &[u32],
        genuine_lrs: Vec<f64>,
        impostor_lrs: Vec<f64>,
        tau: f64,
    ) -> Result<Self> {
        let ir = identification_rate(decisions, truth)?;
        let far = false_acceptance_rate(&impostor_lrs, tau)?;
        let frr = false_rejection_rate(&genuine_lrs, tau)?;
        let taus = tau_grid(&genuine_lrs, &impostor_lrs, SWEEP_POINTS)?;
        let far_frr_curve = far_frr_sweep(&genuine_lrs, &impostor_lrs, &taus)?;
        let histograms = score_histograms(&genuine_lrs, &impostor_lrs, HISTOGRAM_BINS)?;
        let trr = 100.0 - far;
        Ok(EvalReport {
            identification_rate: ir,
            true_rejection_rate: trr,
            reliability: reliability(ir, trr),
            decision_gap: (100.0 - frr) - far,
            tau,
            genuine_acceptance: 100.0 - frr,
            impostor_acceptance: far,
            far_frr_curve,
            histograms,
            genuine_lrs,
            impostor_lrs,
        })
    }
}
