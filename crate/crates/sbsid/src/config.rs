//! Run configuration (TOML). Every section is optional except the top-level
//! `seed`; unknown keys anywhere are rejected. See README for the schema.

use std::path::Path;

use sbsid_core::dsp::EndpointParams;
use sbsid_core::fusion::MergerKind;
use sbsid_core::ga::GaConfig;
use sbsid_core::gaussian::CovarianceType;
use sbsid_core::recognizer::{BandModelConfig, NoiseSpec, RecognizerConfig};
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default)]
    pub corpus: CorpusSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub recognizer: RecognizerSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub endpoint: EndpointSection,
    #[serde(default)]
    pub ga: GaSection,
    pub noise: Option<NoiseSection>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub speakers: usize,
    pub utterances: usize,
    pub duration_s: f64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            speakers: 20,
            utterances: 40,
            duration_s: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_per_speaker: usize,
    pub enrolled: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train_per_speaker: 20,
            enrolled: 10,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RecognizerSection {
    pub sample_rate: u32,
    /// Preset plan size: 1 (wide band), 2, 4 or 7.
    pub bands: usize,
    /// Explicit band edges in Hz; overrides `bands`.
    pub band_edges: Option<Vec<[f64; 2]>>,
    /// Defaults to "none" for one band and "weighted_lclr" otherwise.
    pub merger: Option<String>,
    pub states: usize,
    pub mixtures: usize,
    pub covariance: String,
    /// Per-band overrides, in band order.
    pub band: Vec<BandOverride>,
    pub pre_emphasis: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub gmm_components: usize,
    pub svm_c: f64,
    pub validation_fraction: f64,
    /// Fixed threshold; GA-tuned when absent.
    pub tau: Option<f64>,
}

impl Default for RecognizerSection {
    fn default() -> Self {
        let base = RecognizerConfig::baseline(16_000);
        let m = BandModelConfig::default();
        RecognizerSection {
            sample_rate: base.sample_rate,
            bands: 1,
            band_edges: None,
            merger: None,
            states: m.n_states,
            mixtures: m.n_mix,
            covariance: m.cov_type.as_str().to_string(),
            band: Vec::new(),
            pre_emphasis: base.pre_emphasis,
            frame_ms: base.frame_ms,
            hop_ms: base.hop_ms,
            gmm_components: base.gmm_components,
            svm_c: base.svm_c,
            validation_fraction: base.validation_fraction,
            tau: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BandOverride {
    pub states: Option<usize>,
    pub mixtures: Option<usize>,
    pub covariance: Option<String>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub max_iters: usize,
    pub ll_tol: f64,
    pub variance_floor: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = RecognizerConfig::baseline(16_000).train;
        TrainingSection {
            max_iters: t.max_iters,
            ll_tol: t.ll_tol,
            variance_floor: t.variance_floor,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSection {
    pub frame_ms: f64,
    pub floor_frames: usize,
    pub threshold_db: f64,
    pub hysteresis: usize,
    pub min_contrast_db: f64,
}

impl Default for EndpointSection {
    fn default() -> Self {
        let e = EndpointParams::default();
        EndpointSection {
            frame_ms: e.frame_ms,
            floor_frames: e.floor_frames,
            threshold_db: e.threshold_db,
            hysteresis: e.hysteresis,
            min_contrast_db: e.min_contrast_db,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism: usize,
    pub tournament: usize,
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        GaSection {
            population: g.population_size,
            generations: g.generations,
            crossover_rate: g.crossover_rate,
            mutation_rate: g.mutation_rate,
            elitism: g.elitism_count,
            tournament: g.tournament_size,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub low_hz: f64,
    pub high_hz: f64,
    pub snr_db: f64,
}

fn parse_cov(s: &str) -> Result<CovarianceType> {
    CovarianceType::parse(s).ok_or_else(|| Error::Config(format!("unknown covariance type {s:?}")))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Everything a command could trip over later is checked here.
    pub fn validate(&self) -> Result<()> {
        if self.corpus.speakers < 2 || self.corpus.utterances < 2 {
            return Err(Error::Config("corpus needs at least 2 speakers and 2 utterances".into()));
        }
        if !(self.corpus.duration_s.is_finite() && self.corpus.duration_s > 0.0) {
            return Err(Error::Config("corpus.duration_s must be positive".into()));
        }
        if self.split.enrolled < 2 || self.split.train_per_speaker < 2 {
            return Err(Error::Config("split needs at least 2 enrolled speakers and 2 training utterances each".into()));
        }
        self.recognizer_config()?;
        if let Some(n) = &self.noise {
            if !n.snr_db.is_finite() {
                return Err(Error::Config("noise.snr_db must be finite".into()));
            }
            sbsid_core::dsp::BandPlan::new(vec![(n.low_hz, n.high_hz)], self.recognizer.sample_rate)
                .map_err(|e| Error::Config(format!("noise band: {e}")))?;
        }
        Ok(())
    }

    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            population_size: self.ga.population,
            generations: self.ga.generations,
            crossover_rate: self.ga.crossover_rate,
            mutation_rate: self.ga.mutation_rate,
            elitism_count: self.ga.elitism,
            tournament_size: self.ga.tournament,
            seed: self.seed,
        }
    }

    pub fn recognizer_config(&self) -> Result<RecognizerConfig> {
        let r = &self.recognizer;
        let sr = r.sample_rate;
        let merger = match &r.merger {
            Some(name) => {
                MergerKind::parse(name).ok_or_else(|| Error::Config(format!("unknown merger {name:?}")))?
            }
            None => {
                let n = r.band_edges.as_ref().map_or(r.bands, Vec::len);
                if n == 1 {
                    MergerKind::None
                } else {
                    MergerKind::WeightedLclr
                }
            }
        };
        let mut c = match &r.band_edges {
            Some(edges) => {
                let mut c = RecognizerConfig::baseline(sr);
                c.bands = edges.iter().map(|e| (e[0], e[1])).collect();
                c
            }
            None if r.bands == 1 => RecognizerConfig::baseline(sr),
            None => RecognizerConfig::subband(r.bands, MergerKind::UnweightedLclr, sr)
                .map_err(|e| Error::Config(format!("recognizer.bands: {e}")))?,
        };
        c.merger = merger;
        let base = BandModelConfig {
            n_states: r.states,
            n_mix: r.mixtures,
            cov_type: parse_cov(&r.covariance)?,
        };
        if r.band.len() > c.bands.len() {
            return Err(Error::Config(format!(
                "{} [[recognizer.band]] overrides for {} bands",
                r.band.len(),
                c.bands.len()
            )));
        }
        c.models = vec![base; c.bands.len()];
        for (m, o) in c.models.iter_mut().zip(&r.band) {
            if let Some(s) = o.states {
                m.n_states = s;
            }
            if let Some(k) = o.mixtures {
                m.n_mix = k;
            }
            if let Some(cov) = &o.covariance {
                m.cov_type = parse_cov(cov)?;
            }
        }
        if c.models.iter().any(|m| m.n_states == 0 || m.n_mix == 0) {
            return Err(Error::Config("states and mixtures must be at least 1".into()));
        }
        c.pre_emphasis = r.pre_emphasis;
        c.frame_ms = r.frame_ms;
        c.hop_ms = r.hop_ms;
        c.gmm_components = r.gmm_components;
        c.svm_c = r.svm_c;
        c.validation_fraction = r.validation_fraction;
        c.tau = r.tau;
        c.train.max_iters = self.training.max_iters;
        c.train.ll_tol = self.training.ll_tol;
        c.train.variance_floor = self.training.variance_floor;
        c.endpoint = EndpointParams {
            frame_ms: self.endpoint.frame_ms,
            floor_frames: self.endpoint.floor_frames,
            threshold_db: self.endpoint.threshold_db,
            hysteresis: self.endpoint.hysteresis,
            min_contrast_db: self.endpoint.min_contrast_db,
            ..EndpointParams::default()
        };
        c.ga = self.ga_config();
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn noise_spec(&self) -> Option<NoiseSpec> {
        self.noise.map(|n| NoiseSpec {
            low_hz: n.low_hz,
            high_hz: n.high_hz,
            snr_db: n.snr_db,
            seed: self.seed,
        })
    }
}
