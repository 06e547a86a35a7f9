//! Audio clips, dataset manifests, the enrolled/impostor split protocol and a
//! deterministic synthetic speaker corpus.

use alloc::borrow::Cow;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::rng::Stream;
use crate::{Error, Result};

/// Mono PCM utterance with samples in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("clip has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample {i} = {} is outside [-1, 1]",
                samples[i]
            )));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    /// Builds a clip from arbitrary finite samples, saturating at +-1.
    pub fn saturating(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let samples = samples
            .into_iter()
            .map(|s| if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) })
            .collect();
        AudioClip::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Enrolled,
    Impostor,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Enrolled => "enrolled",
            Role::Impostor => "impostor",
        }
    }

    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "enrolled" => Some(Role::Enrolled),
            "impostor" => Some(Role::Impostor),
            _ => None,
        }
    }
}

/// (speaker id, utterance id).
pub type UtteranceKey = (u32, u32);

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub speaker_id: u32,
    pub utterance_id: u32,
    /// Where the clip lives; a relative path for on-disk corpora.
    pub path: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
    roles: BTreeMap<u32, Role>,
}

impl Manifest {
    /// Validates uniqueness of (speaker, utterance) and that every enrolled
    /// speaker has at least two utterances. Entries are kept sorted by key.
    pub fn new(mut entries: Vec<ManifestEntry>, roles: BTreeMap<u32, Role>) -> Result<Self> {
        entries.sort_by_key(|e| (e.speaker_id, e.utterance_id));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].speaker_id, w[0].utterance_id) == (w[1].speaker_id, w[1].utterance_id))
        {
            return Err(Error::InvalidArgument(format!(
                "duplicate manifest entry speaker {} utterance {}",
                w[0].speaker_id, w[0].utterance_id
            )));
        }
        for e in &entries {
            if !roles.contains_key(&e.speaker_id) {
                return Err(Error::InvalidArgument(format!(
                    "speaker {} has no role",
                    e.speaker_id
                )));
            }
        }
        for (&speaker, &role) in &roles {
            let n = entries.iter().filter(|e| e.speaker_id == speaker).count();
            if role == Role::Enrolled && n < 2 {
                return Err(Error::InvalidArgument(format!(
                    "enrolled speaker {speaker} has {n} utterances, need at least 2"
                )));
            }
        }
        Ok(Manifest { entries, roles })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn roles(&self) -> &BTreeMap<u32, Role> {
        &self.roles
    }

    pub fn role(&self, speaker: u32) -> Option<Role> {
        self.roles.get(&speaker).copied()
    }

    /// Speaker ids in ascending order.
    pub fn speakers(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.entries.iter().map(|e| e.speaker_id).collect();
        set.into_iter().collect()
    }

    pub fn utterances_of(&self, speaker: u32) -> Vec<u32> {
        self.entries
            .iter()
            .filter(|e| e.speaker_id == speaker)
            .map(|e| e.utterance_id)
            .collect()
    }

    pub fn entry(&self, key: UtteranceKey) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by_key(&key, |e| (e.speaker_id, e.utterance_id))
            .ok()
            .map(|i| &self.entries[i])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitPlan {
    pub train: Vec<UtteranceKey>,
    pub test: Vec<UtteranceKey>,
    pub impostor_test: Vec<UtteranceKey>,
}

impl SplitPlan {
    /// Enrolled speaker ids, ascending.
    pub fn enrolled(&self) -> Vec<u32> {
        let set: BTreeSet<u32> = self.train.iter().map(|k| k.0).collect();
        set.into_iter().collect()
    }
}

/// The first `enrolled_count` speakers (ascending id) are enrolled: their
/// first `train_per_speaker` utterances train, the rest test. Every remaining
/// speaker goes wholly to the impostor set. No shuffling.
pub fn split_manifest(
    manifest: &Manifest,
    train_per_speaker: usize,
    enrolled_count: usize,
) -> Result<SplitPlan> {
    let speakers = manifest.speakers();
    if enrolled_count == 0 || speakers.len() < enrolled_count {
        return Err(Error::Split(format!(
            "need {enrolled_count} enrolled speakers, manifest has {}",
            speakers.len()
        )));
    }
    if train_per_speaker == 0 {
        return Err(Error::Split("train_per_speaker must be at least 1".into()));
    }
    let mut plan = SplitPlan::default();
    for (rank, &speaker) in speakers.iter().enumerate() {
        let utts = manifest.utterances_of(speaker);
        if rank < enrolled_count {
            if utts.len() < train_per_speaker + 1 {
                return Err(Error::Split(format!(
                    "speaker {speaker} has {} utterances, need {} for {train_per_speaker} training + 1 test",
                    utts.len(),
                    train_per_speaker + 1
                )));
            }
            let (train, test) = utts.split_at(train_per_speaker);
            plan.train.extend(train.iter().map(|&u| (speaker, u)));
            plan.test.extend(test.iter().map(|&u| (speaker, u)));
        } else {
            plan.impostor_test.extend(utts.iter().map(|&u| (speaker, u)));
        }
    }
    Ok(plan)
}

/// Anything that can hand out clips by key.
pub trait ClipSource {
    fn clip(&self, key: UtteranceKey) -> Result<Cow<'_, AudioClip>>;
}

impl ClipSource for BTreeMap<UtteranceKey, AudioClip> {
    fn clip(&self, key: UtteranceKey) -> Result<Cow<'_, AudioClip>> {
        self.get(&key)
            .map(Cow::Borrowed)
            .ok_or_else(|| Error::Source(format!("no clip for speaker {} utterance {}", key.0, key.1)))
    }
}

pub const SYNTH_SAMPLE_RATE: u32 = 16_000;
pub const F0_RANGE: (f64, f64) = (90.0, 260.0);
pub const FORMANT_RANGES: [(f64, f64); 3] = [(300.0, 900.0), (900.0, 2200.0), (2200.0, 3500.0)];
pub const JITTER: f64 = 0.02;
pub const SYNTH_SNR_DB: f64 = 25.0;
const FORMANT_BANDWIDTHS: [f64; 3] = [90.0, 120.0, 180.0];
const FORMANT_GAINS: [f64; 3] = [1.0, 0.6, 0.35];
const EDGE_SILENCE_S: f64 = 0.15;
const VOICED_RMS: f64 = 0.1;
const MAX_HARMONIC_HZ: f64 = 7000.0;
/// Formant multipliers at the start of each of the three "syllables" of the
/// shared pass-phrase, interpolated linearly in between.
const WORD_SHAPE: [[f64; 3]; 4] = [
    [1.00, 1.00, 1.00],
    [0.80, 1.15, 1.00],
    [1.15, 0.85, 0.95],
    [0.95, 1.05, 1.05],
];

/// Per-speaker generator parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeakerParams {
    pub f0: f64,
    pub formants: [f64; 3],
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub manifest: Manifest,
    pub speakers: BTreeMap<u32, SpeakerParams>,
    pub clips: BTreeMap<UtteranceKey, AudioClip>,
}

impl ClipSource for SyntheticCorpus {
    fn clip(&self, key: UtteranceKey) -> Result<Cow<'_, AudioClip>> {
        self.clips.clip(key)
    }
}

/// Speaker parameter table: each parameter is Latin-hypercube sampled over
/// its range so that no two speakers share a stratum.
pub fn synthetic_speakers(n_speakers: usize, seed: u64) -> Vec<SpeakerParams> {
    let mut rng = Stream::new(seed, 0);
    let draw = |lo: f64, hi: f64, rng: &mut Stream| -> Vec<f64> {
        let mut strata: Vec<usize> = (0..n_speakers).collect();
        rng.shuffle(&mut strata);
        let width = (hi - lo) / n_speakers as f64;
        strata
            .into_iter()
            .map(|s| lo + width * (s as f64 + rng.uniform()))
            .collect()
    };
    let f0 = draw(F0_RANGE.0, F0_RANGE.1, &mut rng);
    let f1 = draw(FORMANT_RANGES[0].0, FORMANT_RANGES[0].1, &mut rng);
    let f2 = draw(FORMANT_RANGES[1].0, FORMANT_RANGES[1].1, &mut rng);
    let f3 = draw(FORMANT_RANGES[2].0, FORMANT_RANGES[2].1, &mut rng);
    (0..n_speakers)
        .map(|i| SpeakerParams {
            f0: f0[i],
            formants: [f1[i], f2[i], f3[i]],
        })
        .collect()
}

/// Generates `n_speakers` x `n_utterances` clips of the same synthetic
/// pass-phrase at 16 kHz. Speakers and utterances are numbered from 1; the
/// first half of the speakers (rounded up) is marked enrolled.
pub fn generate_synthetic_corpus(
    n_speakers: usize,
    n_utterances: usize,
    duration_s: f64,
    seed: u64,
) -> Result<SyntheticCorpus> {
    if n_speakers < 2 || n_utterances < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 speakers and 2 utterances, got {n_speakers} x {n_utterances}"
        )));
    }
    if !(duration_s.is_finite() && duration_s >= 2.0 * EDGE_SILENCE_S + 0.2) {
        return Err(Error::InvalidArgument(format!(
            "duration {duration_s} s is too short for a synthetic utterance"
        )));
    }
    let params = synthetic_speakers(n_speakers, seed);
    let mut speakers = BTreeMap::new();
    let mut clips = BTreeMap::new();
    let mut entries = Vec::new();
    let mut roles = BTreeMap::new();
    let n_enrolled = n_speakers.div_ceil(2);
    for (i, p) in params.iter().enumerate() {
        let speaker = i as u32 + 1;
        speakers.insert(speaker, *p);
        roles.insert(
            speaker,
            if i < n_enrolled {
                Role::Enrolled
            } else {
                Role::Impostor
            },
        );
        for u in 0..n_utterances {
            let utterance = u as u32 + 1;
            let stream = 1 + (i * n_utterances + u) as u64;
            let clip = synthesize_utterance(p, duration_s, &mut Stream::new(seed, stream))?;
            clips.insert((speaker, utterance), clip);
            entries.push(ManifestEntry {
                speaker_id: speaker,
                utterance_id: utterance,
                path: format!("spk{speaker:03}/utt{utterance:03}.wav"),
            });
        }
    }
    Ok(SyntheticCorpus {
        manifest: Manifest::new(entries, roles)?,
        speakers,
        clips,
    })
}

fn resonance(f: f64, center: f64, bandwidth: f64) -> f64 {
    let d = (f - center) / bandwidth;
    1.0 / (1.0 + d * d)
}

/// One utterance: a harmonic stack whose amplitudes follow three resonances,
/// with the word's formant trajectory, a falling pitch contour, raised-cosine
/// on/offsets, silent edges and white noise at the corpus SNR.
pub fn synthesize_utterance(
    speaker: &SpeakerParams,
    duration_s: f64,
    rng: &mut Stream,
) -> Result<AudioClip> {
    let sr = SYNTH_SAMPLE_RATE as f64;
    let n = (duration_s * sr).round() as usize;
    let mut jitter = || 1.0 + rng.uniform_range(-JITTER, JITTER);
    let f0 = speaker.f0 * jitter();
    let formants = [
        speaker.formants[0] * jitter(),
        speaker.formants[1] * jitter(),
        speaker.formants[2] * jitter(),
    ];

    let edge = (EDGE_SILENCE_S * sr).round() as usize;
    let voiced_len = n - 2 * edge;
    let ramp = (0.02 * sr) as usize;
    let mut voiced = Vec::with_capacity(voiced_len);
    let mut phase = 0.0f64;
    // Harmonic amplitudes are refreshed every block; phases advance per sample.
    const BLOCK: usize = 80;
    let mut amps: Vec<f64> = Vec::new();
    for t in 0..voiced_len {
        let progress = t as f64 / voiced_len as f64;
        let pitch = f0 * (1.06 - 0.12 * progress);
        if t % BLOCK == 0 {
            let pos = progress * (WORD_SHAPE.len() - 1) as f64;
            let seg = (pos as usize).min(WORD_SHAPE.len() - 2);
            let frac = pos - seg as f64;
            let n_harm = (MAX_HARMONIC_HZ / pitch) as usize;
            amps.clear();
            for h in 1..=n_harm {
                let f = h as f64 * pitch;
                let mut a = 0.0;
                for r in 0..3 {
                    let mult = WORD_SHAPE[seg][r] * (1.0 - frac) + WORD_SHAPE[seg + 1][r] * frac;
                    a += FORMANT_GAINS[r] * resonance(f, formants[r] * mult, FORMANT_BANDWIDTHS[r]);
                }
                // glottal roll-off
                amps.push(a / (h as f64).sqrt());
            }
        }
        phase = (phase + TAU * pitch / sr) % TAU;
        let step = Complex64::new(phase.cos(), phase.sin());
        let mut rot = step;
        let mut s = 0.0;
        for a in &amps {
            s += a * rot.im;
            rot *= step;
        }
        let env = if t < ramp {
            0.5 - 0.5 * (core::f64::consts::PI * t as f64 / ramp as f64).cos()
        } else if voiced_len - t <= ramp {
            0.5 - 0.5 * (core::f64::consts::PI * (voiced_len - t) as f64 / ramp as f64).cos()
        } else {
            1.0
        };
        voiced.push(s * env);
    }
    let power = voiced.iter().map(|s| s * s).sum::<f64>() / voiced_len as f64;
    let gain = if power > 0.0 { VOICED_RMS / power.sqrt() } else { 0.0 };
    let noise_sd = VOICED_RMS / 10f64.powf(SYNTH_SNR_DB / 20.0);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let clean = if i >= edge && i < edge + voiced_len {
            voiced[i - edge] * gain
        } else {
            0.0
        };
        samples.push(clean + noise_sd * rng.normal());
    }
    AudioClip::saturating(samples, SYNTH_SAMPLE_RATE)
}
