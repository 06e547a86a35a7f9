//! The wide-band baseline and the sub-band recognizer: front end, per-band
//! HMM banks, merger training, threshold tuning, identification and
//! evaluation with optional band-limited noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::corpus::{AudioClip, ClipSource, SplitPlan, UtteranceKey};
use crate::decision::{self, decide, likelihood_ratio, ConfidenceScore, Decision, EvalReport};
use crate::dsp::{self, BandPlan, EndpointParams};
use crate::features::{self, BandFeatureConfig, FeatureSequence};
use crate::fusion::{self, compute_weights, Merger, MergerKind, ScoreMatrix};
use crate::ga::{self, GaConfig};
use crate::gaussian::CovarianceType;
use crate::gmm::EmConfig;
use crate::hmm::{self, HmmModel, TrainConfig};
use crate::parallel::Executor;
use crate::rng::Stream;
use crate::{Error, Matrix, Result};

pub const DEFAULT_STATES: usize = 4;
pub const DEFAULT_MIXTURES: usize = 4;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandModelConfig {
    pub n_states: usize,
    pub n_mix: usize,
    pub cov_type: CovarianceType,
}

impl Default for BandModelConfig {
    fn default() -> Self {
        BandModelConfig {
            n_states: DEFAULT_STATES,
            n_mix: DEFAULT_MIXTURES,
            cov_type: CovarianceType::Diagonal,
        }
    }
}

/// Baum-Welch settings shared by every band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainSettings {
    pub max_iters: usize,
    pub ll_tol: f64,
    pub variance_floor: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSettings {
            max_iters: d.max_iters,
            ll_tol: d.ll_tol,
            variance_floor: d.variance_floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecognizerConfig {
    pub sample_rate: u32,
    /// Band edges in Hz. One full-range band is the wide-band baseline.
    pub bands: Vec<(f64, f64)>,
    pub models: Vec<BandModelConfig>,
    pub merger: MergerKind,
    pub train: TrainSettings,
    pub pre_emphasis: f64,
    pub endpoint: EndpointParams,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub gmm_components: usize,
    pub svm_c: f64,
    /// Share of each speaker's training utterances held out to rate bands
    /// and tune the threshold.
    pub validation_fraction: f64,
    pub ga: GaConfig,
    /// Fixed threshold; `None` tunes it by GA.
    pub tau: Option<f64>,
}

impl RecognizerConfig {
    pub fn baseline(sample_rate: u32) -> Self {
        RecognizerConfig {
            sample_rate,
            bands: BandPlan::full(sample_rate).bands().to_vec(),
            models: vec![BandModelConfig::default()],
            merger: MergerKind::None,
            train: TrainSettings::default(),
            pre_emphasis: dsp::DEFAULT_PRE_EMPHASIS,
            endpoint: EndpointParams::default(),
            frame_ms: dsp::DEFAULT_FRAME_MS,
            hop_ms: dsp::DEFAULT_HOP_MS,
            gmm_components: fusion::DEFAULT_GMM_COMPONENTS,
            svm_c: crate::svm::DEFAULT_C,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            ga: GaConfig::default(),
            tau: None,
        }
    }

    /// One of the preset 2-, 4- or 7-band plans with the given merger.
    pub fn subband(n_bands: usize, merger: MergerKind, sample_rate: u32) -> Result<Self> {
        let plan = BandPlan::preset(n_bands, sample_rate)?;
        let mut c = RecognizerConfig::baseline(sample_rate);
        c.models = vec![BandModelConfig::default(); plan.len()];
        c.bands = plan.bands().to_vec();
        c.merger = merger;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let plan = self.plan()?;
        if self.models.len() != plan.len() {
            return Err(Error::Shape {
                expected: plan.len(),
                got: self.models.len(),
            });
        }
        if plan.len() == 1 && self.merger != MergerKind::None {
            return Err(Error::InvalidArgument("a single band takes no merger".into()));
        }
        if plan.len() > 1 && self.merger == MergerKind::None {
            return Err(Error::InvalidArgument(format!("{} bands need a merger", plan.len())));
        }
        for m in &self.models {
            if m.n_states == 0 || m.n_mix == 0 {
                return Err(Error::InvalidArgument("states and mixtures must be at least 1".into()));
            }
        }
        if self.train.max_iters == 0 || !(self.train.variance_floor > 0.0) || !(self.train.ll_tol >= 0.0) {
            return Err(Error::InvalidArgument("invalid Baum-Welch settings".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument("validation fraction must lie in (0, 1)".into()));
        }
        if self.gmm_components == 0 || !(self.svm_c > 0.0) {
            return Err(Error::InvalidArgument("merger hyper-parameters must be positive".into()));
        }
        if let Some(t) = self.tau {
            if !t.is_finite() {
                return Err(Error::InvalidArgument("tau must be finite".into()));
            }
        }
        self.ga.validate()?;
        let fc = self.feature_config(&plan);
        let frame_len = dsp::ms_to_samples(self.frame_ms, self.sample_rate);
        for m in &fc.bands {
            m.validate(frame_len)?;
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<BandPlan> {
        BandPlan::new(self.bands.clone(), self.sample_rate)
    }

    pub fn feature_config(&self, plan: &BandPlan) -> BandFeatureConfig {
        let mut fc = BandFeatureConfig::for_plan(plan);
        fc.frame_len_ms = self.frame_ms;
        fc.hop_ms = self.hop_ms;
        fc
    }

    pub fn hmm_config(&self, band: usize) -> TrainConfig {
        TrainConfig {
            max_iters: self.train.max_iters,
            ll_tol: self.train.ll_tol,
            variance_floor: self.train.variance_floor,
            cov_type: self.models[band].cov_type,
        }
    }
}

/// Clip to per-band feature sequences.
#[derive(Clone, Debug)]
pub struct FrontEnd {
    plan: BandPlan,
    features: BandFeatureConfig,
    pre_emphasis: f64,
    endpoint: EndpointParams,
}

impl FrontEnd {
    pub fn new(config: &RecognizerConfig) -> Result<Self> {
        let plan = config.plan()?;
        Ok(FrontEnd {
            features: config.feature_config(&plan),
            plan,
            pre_emphasis: config.pre_emphasis,
            endpoint: config.endpoint,
        })
    }

    pub fn plan(&self) -> &BandPlan {
        &self.plan
    }

    /// pre-emphasis -> endpoint trim -> band split -> MFCC + deltas.
    pub fn features(&self, clip: &AudioClip) -> Result<Vec<FeatureSequence>> {
        if clip.sample_rate() != self.plan.sample_rate() {
            return Err(Error::InvalidArgument(format!(
                "clip is sampled at {} Hz, recognizer at {} Hz",
                clip.sample_rate(),
                self.plan.sample_rate()
            )));
        }
        let emphasized = dsp::pre_emphasize(clip.samples(), self.pre_emphasis)?;
        let (start, end) = dsp::detect_endpoints(clip.samples(), clip.sample_rate(), &self.endpoint)?;
        let set = dsp::decompose_subbands(&emphasized[start..end], clip.sample_rate(), &self.plan)?;
        features::extract_band_features(&set, &self.features)
    }
}

/// Band-limited white noise added at a fixed SNR relative to the clip's
/// mean-square level inside the same band.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn apply(&self, clip: &AudioClip, key: UtteranceKey) -> Result<AudioClip> {
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidArgument("noise SNR must be finite".into()));
        }
        let sr = clip.sample_rate();
        let full = BandPlan::new(vec![(self.low_hz, self.high_hz)], sr)?;
        let mut rng = Stream::new(self.seed, ((key.0 as u64) << 32) | key.1 as u64);
        let white: Vec<f64> = (0..clip.len()).map(|_| rng.normal()).collect();
        let (noise, in_band) = match full.filter(0)? {
            Some(f) => (f.filtfilt(&white), f.filtfilt(clip.samples())),
            None => (white, clip.samples().to_vec()),
        };
        let power = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let (ps, pn) = (power(&in_band), power(&noise));
        if !(pn > 0.0) {
            return Ok(clip.clone());
        }
        let gain = (ps / 10f64.powf(self.snr_db / 10.0) / pn).sqrt();
        let mixed = clip.samples().iter().zip(&noise).map(|(s, n)| s + gain * n).collect();
        AudioClip::saturating(mixed, sr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedRecognizer {
    config: RecognizerConfig,
    front_end_plan: BandPlan,
    speakers: Vec<u32>,
    /// `bank[band][speaker]`.
    bank: Vec<Vec<HmmModel>>,
    merger: Merger,
    tau: f64,
    validation_rates: Vec<f64>,
    ga_convergence: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub speaker: u32,
    pub confidence: ConfidenceScore,
    pub decision: Decision,
    pub scores: ScoreMatrix,
}

impl TrainedRecognizer {
    pub fn from_parts(
        config: RecognizerConfig,
        speakers: Vec<u32>,
        bank: Vec<Vec<HmmModel>>,
        merger: Merger,
        tau: f64,
        validation_rates: Vec<f64>,
        ga_convergence: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let plan = config.plan()?;
        if speakers.len() < 2 {
            return Err(Error::InvalidArgument("need at least two enrolled speakers".into()));
        }
        if bank.len() != plan.len() || validation_rates.len() != plan.len() {
            return Err(Error::Shape {
                expected: plan.len(),
                got: bank.len(),
            });
        }
        for row in &bank {
            if row.len() != speakers.len() {
                return Err(Error::Shape {
                    expected: speakers.len(),
                    got: row.len(),
                });
            }
            let dim = row[0].dim();
            if row.iter().any(|m| m.dim() != dim) {
                return Err(Error::Shape {
                    expected: dim,
                    got: row.iter().map(|m| m.dim()).find(|&d| d != dim).unwrap_or(dim),
                });
            }
        }
        if merger.kind() != config.merger {
            return Err(Error::State(format!(
                "merger is {} but config says {}",
                merger.kind().as_str(),
                config.merger.as_str()
            )));
        }
        if !tau.is_finite() {
            return Err(Error::InvalidArgument("tau must be finite".into()));
        }
        Ok(TrainedRecognizer {
            config,
            front_end_plan: plan,
            speakers,
            bank,
            merger,
            tau,
            validation_rates,
            ga_convergence,
        })
    }

    pub fn config(&self) -> &RecognizerConfig {
        &self.config
    }

    pub fn speakers(&self) -> &[u32] {
        &self.speakers
    }

    pub fn bank(&self) -> &[Vec<HmmModel>] {
        &self.bank
    }

    pub fn merger(&self) -> &Merger {
        &self.merger
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn set_tau(&mut self, tau: f64) -> Result<()> {
        if !tau.is_finite() {
            return Err(Error::InvalidArgument("tau must be finite".into()));
        }
        self.tau = tau;
        Ok(())
    }

    /// Per-band identification rates on the validation sub-split.
    pub fn validation_rates(&self) -> &[f64] {
        &self.validation_rates
    }

    /// Best threshold fitness per GA generation (empty for a fixed tau).
    pub fn ga_convergence(&self) -> &[f64] {
        &self.ga_convergence
    }

    pub fn set_ga_convergence(&mut self, curve: Vec<f64>) {
        self.ga_convergence = curve;
    }

    pub fn front_end(&self) -> FrontEnd {
        FrontEnd {
            features: self.config.feature_config(&self.front_end_plan),
            plan: self.front_end_plan.clone(),
            pre_emphasis: self.config.pre_emphasis,
            endpoint: self.config.endpoint,
        }
    }

    pub fn score_features(&self, feats: &[FeatureSequence]) -> Result<ScoreMatrix> {
        score_matrix(&self.bank, &self.speakers, feats)
    }

    pub fn identify_features(&self, feats: &[FeatureSequence]) -> Result<Identification> {
        let scores = self.score_features(feats)?;
        let speaker = fusion::identify(&self.merger, &scores)?;
        let claimed = self
            .speakers
            .iter()
            .position(|&s| s == speaker)
            .expect("mergers only return enrolled speakers");
        let confidence = likelihood_ratio(&self.merger.confidence_scores(&scores)?, claimed)?;
        Ok(Identification {
            speaker,
            decision: decide(&confidence, self.tau),
            confidence,
            scores,
        })
    }

    pub fn identify_utterance(&self, clip: &AudioClip) -> Result<Identification> {
        self.identify_features(&self.front_end().features(clip)?)
    }
}

fn score_matrix(bank: &[Vec<HmmModel>], speakers: &[u32], feats: &[FeatureSequence]) -> Result<ScoreMatrix> {
    if feats.len() != bank.len() {
        return Err(Error::Shape {
            expected: bank.len(),
            got: feats.len(),
        });
    }
    let mut m = Matrix::zeros(bank.len(), speakers.len());
    for (b, (row, seq)) in bank.iter().zip(feats).enumerate() {
        let t = seq.n_frames() as f64;
        for (s, model) in row.iter().enumerate() {
            let ll = model.log_likelihood(seq).map_err(|e| e.context(b, speakers[s]))?;
            m.set(b, s, ll / t);
        }
    }
    ScoreMatrix::new(m, (0..bank.len()).collect(), speakers.to_vec())
}

fn train_bank<E: Executor>(
    config: &RecognizerConfig,
    speakers: &[u32],
    // per speaker, per utterance, per band
    data: &[Vec<&Vec<FeatureSequence>>],
    exec: &E,
) -> Result<Vec<Vec<HmmModel>>> {
    let n_bands = config.models.len();
    let tasks: Vec<(usize, usize)> = (0..n_bands)
        .flat_map(|b| (0..speakers.len()).map(move |s| (b, s)))
        .collect();
    let models = exec.map(&tasks, |&(b, s)| {
        let seqs: Vec<&FeatureSequence> = data[s].iter().map(|u| &u[b]).collect();
        let m = config.models[b];
        hmm::fit(m.n_states, m.n_mix, &config.hmm_config(b), &seqs).map_err(|e| e.context(b, speakers[s]))
    });
    let mut bank: Vec<Vec<HmmModel>> = (0..n_bands).map(|_| Vec::with_capacity(speakers.len())).collect();
    for ((b, _), m) in tasks.iter().zip(models) {
        bank[*b].push(m?);
    }
    Ok(bank)
}

/// Features for every key, in key order.
pub fn extract_all<C, E>(front: &FrontEnd, keys: &[UtteranceKey], source: &C, noise: Option<&NoiseSpec>, exec: &E) -> Result<Vec<Vec<FeatureSequence>>>
where
    C: ClipSource + Sync,
    E: Executor,
{
    exec.map(keys, |&k| {
        let clip = source.clip(k)?;
        match noise {
            Some(n) => front.features(&n.apply(&clip, k)?),
            None => front.features(&clip),
        }
    })
    .into_iter()
    .collect()
}

/// Training utterances of each speaker split into (fit, validation) index
/// lists; the last `round(fraction * n)` utterances (at least one, at most
/// `n - 1`) validate.
fn sub_split(keys: &[UtteranceKey], speakers: &[u32], fraction: f64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    speakers
        .iter()
        .map(|&s| {
            let mut idx: Vec<usize> = (0..keys.len()).filter(|&i| keys[i].0 == s).collect();
            idx.sort_by_key(|&i| keys[i].1);
            let n = idx.len();
            if n < 2 {
                return Err(Error::Split(format!(
                    "speaker {s} needs at least 2 training utterances for validation, has {n}"
                )));
            }
            let n_val = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
            let val = idx.split_off(n - n_val);
            Ok((idx, val))
        })
        .collect()
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Everything the validation sub-split yields.
#[derive(Clone, Debug, PartialEq)]
pub struct Validation {
    pub band_rates: Vec<f64>,
    /// Score matrices of the validation utterances under the bank trained
    /// without them, with the true speaker's index.
    pub matrices: Vec<(usize, ScoreMatrix)>,
}

impl Validation {
    /// Genuine LRs (claim = merger decision) and pseudo-impostor LRs (the
    /// same utterance with its own speaker's column removed, claim = best
    /// remaining speaker).
    pub fn likelihood_ratios(&self, merger: &Merger) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut genuine = Vec::with_capacity(self.matrices.len());
        let mut impostor = Vec::with_capacity(self.matrices.len());
        for (truth, sm) in &self.matrices {
            let fused = merger.confidence_scores(sm)?;
            let decided = fusion::identify(merger, sm)?;
            let claimed = sm
                .speaker_ids()
                .iter()
                .position(|&s| s == decided)
                .expect("mergers only return enrolled speakers");
            genuine.push(likelihood_ratio(&fused, claimed)?.lr);
            let mut rest = fused.clone();
            rest.remove(*truth);
            impostor.push(likelihood_ratio(&rest, argmax(&rest))?.lr);
        }
        Ok((genuine, impostor))
    }
}

/// Vote priority: bands by validation rate, best first, lower index on ties.
pub fn vote_priority(band_rates: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..band_rates.len()).collect();
    order.sort_by(|&a, &b| band_rates[b].total_cmp(&band_rates[a]).then(a.cmp(&b)));
    order
}

/// Full training: validation sub-split -> auxiliary bank -> band rates,
/// weights and vote priority -> final bank on all training data -> merger
/// -> threshold.
pub fn train<C, E>(config: &RecognizerConfig, split: &SplitPlan, source: &C, exec: &E) -> Result<TrainedRecognizer>
where
    C: ClipSource + Sync,
    E: Executor,
{
    config.validate()?;
    let front = FrontEnd::new(config)?;
    let speakers = split.enrolled();
    if speakers.len() < 2 {
        return Err(Error::InvalidArgument("need at least two enrolled speakers".into()));
    }
    let keys = split.train.clone();
    let feats = extract_all(&front, &keys, source, None, exec)?;
    let parts = sub_split(&keys, &speakers, config.validation_fraction)?;

    let fit_data: Vec<Vec<&Vec<FeatureSequence>>> = parts.iter().map(|(fit, _)| fit.iter().map(|&i| &feats[i]).collect()).collect();
    let aux = train_bank(config, &speakers, &fit_data, exec)?;
    let val_items: Vec<(usize, usize)> = parts
        .iter()
        .enumerate()
        .flat_map(|(s, (_, val))| val.iter().map(move |&i| (s, i)))
        .collect();
    let matrices = exec
        .map(&val_items, |&(s, i)| score_matrix(&aux, &speakers, &feats[i]).map(|m| (s, m)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let n_bands = config.models.len();
    let band_rates: Vec<f64> = (0..n_bands)
        .map(|b| {
            let correct = matrices
                .iter()
                .filter(|(s, m)| argmax(m.band(b)) == *s)
                .count();
            100.0 * correct as f64 / matrices.len() as f64
        })
        .collect();
    let validation = Validation { band_rates, matrices };

    let all_data: Vec<Vec<&Vec<FeatureSequence>>> = speakers
        .iter()
        .map(|&s| (0..keys.len()).filter(|&i| keys[i].0 == s).map(|i| &feats[i]).collect())
        .collect();
    let bank = train_bank(config, &speakers, &all_data, exec)?;

    let merger = match config.merger {
        MergerKind::None => Merger::None,
        MergerKind::Vote => Merger::Vote {
            priority: vote_priority(&validation.band_rates),
        },
        MergerKind::WeightedLclr => Merger::WeightedLclr {
            weights: compute_weights(&validation.band_rates)?,
        },
        MergerKind::UnweightedLclr => Merger::UnweightedLclr,
        MergerKind::Gmm | MergerKind::Svm => {
            let rows = exec
                .map(&feats, |f| score_matrix(&bank, &speakers, f).map(|m| m.flatten().to_vec()))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let x = Matrix::from_rows(&rows)?;
            let labels: Vec<u32> = keys.iter().map(|k| k.0).collect();
            if config.merger == MergerKind::Gmm {
                let em = EmConfig::default();
                fusion::train_gmm_merger(&x, &labels, config.gmm_components, &em)?
            } else {
                fusion::train_svm_merger(&x, &labels, config.svm_c)?
            }
        }
    };

    let (tau, convergence) = match config.tau {
        Some(t) => (t, Vec::new()),
        None => {
            let (genuine, impostor) = validation.likelihood_ratios(&merger)?;
            let t = ga::tune_threshold(&genuine, &impostor, &config.ga, exec)?;
            (t.tau, t.per_generation_best)
        }
    };
    TrainedRecognizer::from_parts(
        config.clone(),
        speakers,
        bank,
        merger,
        tau,
        validation.band_rates,
        convergence,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub key: UtteranceKey,
    pub enrolled: bool,
    pub identification: Identification,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub outcomes: Vec<Outcome>,
}

impl Evaluation {
    fn enrolled(&self) -> impl Iterator<Item = &Outcome> {
        self.outcomes.iter().filter(|o| o.enrolled)
    }
}

/// Identifies every test and impostor utterance (optionally with noise)
/// and summarizes the trials.
pub fn evaluate<C, E>(rec: &TrainedRecognizer, split: &SplitPlan, source: &C, noise: Option<&NoiseSpec>, exec: &E) -> Result<Evaluation>
where
    C: ClipSource + Sync,
    E: Executor,
{
    if split.test.is_empty() || split.impostor_test.is_empty() {
        return Err(Error::Metric("evaluation needs test and impostor utterances".into()));
    }
    let front = rec.front_end();
    let trials: Vec<(UtteranceKey, bool)> = split
        .test
        .iter()
        .map(|&k| (k, true))
        .chain(split.impostor_test.iter().map(|&k| (k, false)))
        .collect();
    let outcomes = exec
        .map(&trials, |&(key, enrolled)| {
            let clip = source.clip(key)?;
            let feats = match noise {
                Some(n) => front.features(&n.apply(&clip, key)?)?,
                None => front.features(&clip)?,
            };
            Ok(Outcome {
                key,
                enrolled,
                identification: rec.identify_features(&feats)?,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut decisions = Vec::new();
    let mut truth = Vec::new();
    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    for o in &outcomes {
        if o.enrolled {
            decisions.push(o.identification.speaker);
            truth.push(o.key.0);
            genuine.push(o.identification.confidence.lr);
        } else {
            impostor.push(o.identification.confidence.lr);
        }
    }
    Ok(Evaluation {
        report: EvalReport::from_trials(&decisions, &truth, genuine, impostor, rec.tau())?,
        outcomes,
    })
}

/// Identification rate of the classical + sub-band majority vote. All
/// evaluations must cover the same trials in the same order; `ordering`
/// ranks classifier 0 (the baseline) and 1.. (`subband` in order).
pub fn combined_vote_rate(baseline: &Evaluation, subband: &[&Evaluation], ordering: &[usize]) -> Result<f64> {
    let mut decisions = Vec::new();
    let mut truth = Vec::new();
    let others: Vec<Vec<&Outcome>> = subband.iter().map(|e| e.enrolled().collect()).collect();
    for (i, o) in baseline.enrolled().enumerate() {
        let mut votes = Vec::with_capacity(subband.len());
        for list in &others {
            let other = list.get(i).filter(|x| x.key == o.key).ok_or_else(|| {
                Error::Shape {
                    expected: baseline.enrolled().count(),
                    got: list.len(),
                }
            })?;
            votes.push(other.identification.speaker);
        }
        decisions.push(fusion::combined_vote(o.identification.speaker, &votes, ordering)?);
        truth.push(o.key.0);
    }
    decision::identification_rate(&decisions, &truth)
}

/// GA threshold tuning on held-out genuine and impostor trials of an
/// existing evaluation.
pub fn tune_threshold_on<E: Executor>(eval: &Evaluation, ga: &GaConfig, exec: &E) -> Result<ga::ThresholdTuning> {
    ga::tune_threshold(&eval.report.genuine_lrs, &eval.report.impostor_lrs, ga, exec)
}

/// Per-speaker training and validation sequences of one band, as used by
/// the architecture search.
pub type BandData = (Vec<(u32, Vec<FeatureSequence>)>, Vec<(u32, FeatureSequence)>);

pub fn band_data<C, E>(config: &RecognizerConfig, split: &SplitPlan, source: &C, band: usize, exec: &E) -> Result<BandData>
where
    C: ClipSource + Sync,
    E: Executor,
{
    config.validate()?;
    if band >= config.models.len() {
        return Err(Error::Index {
            index: band,
            len: config.models.len(),
        });
    }
    let front = FrontEnd::new(config)?;
    let speakers = split.enrolled();
    let keys = split.train.clone();
    let mut feats = extract_all(&front, &keys, source, None, exec)?;
    let parts = sub_split(&keys, &speakers, config.validation_fraction)?;
    let mut take = |i: usize| core::mem::take(&mut feats[i]).swap_remove(band);
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for (&s, (fit, val)) in speakers.iter().zip(&parts) {
        train.push((s, fit.iter().map(|&i| take(i)).collect()));
        validation.extend(val.iter().map(|&i| (s, take(i))));
    }
    Ok((train, validation))
}
