//! Plain-text model store.
//!
//! Layout:
//!
//! ```text
//! <dir>/MANIFEST              version line + "file <name> <sha256>" per file
//! <dir>/recognizer.txt        configuration, speakers, tau, provenance notes
//! <dir>/merger.txt            merger parameters
//! <dir>/models/b<band>_s<speaker>.txt   one HMM each
//! ```
//!
//! Every file is a sequence of `key value...` lines. Floats are written with
//! `{:e}`, which is the shortest representation that parses back to the same
//! bits, so a reloaded recognizer scores bit-identically. A checksum mismatch
//! or an unknown version refuses the load.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sbsid_core::dsp::EndpointParams;
use sbsid_core::fusion::{BandWeights, Merger, MergerKind};
use sbsid_core::ga::GaConfig;
use sbsid_core::gaussian::{Covariance, CovarianceType, Gaussian};
use sbsid_core::gmm::GmmModel;
use sbsid_core::hmm::HmmModel;
use sbsid_core::recognizer::{BandModelConfig, RecognizerConfig, TrainSettings, TrainedRecognizer};
use sbsid_core::svm::{OvrClassifier, SvmModel};
use sbsid_core::Matrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const STORE_VERSION: u32 = 1;
const MANIFEST: &str = "MANIFEST";
const MAGIC: &str = "sbsid-store";

/// A trained recognizer plus what is needed to re-run its protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredModel {
    pub recognizer: TrainedRecognizer,
    pub seed: u64,
    pub train_per_speaker: usize,
    pub enrolled: usize,
    /// Free-text provenance, one entry per line.
    pub notes: Vec<String>,
}

// ---- writing -------------------------------------------------------------

#[derive(Default)]
struct Text(String);

impl Text {
    fn line(&mut self, key: &str, values: impl IntoIterator<Item = String>) {
        self.0.push_str(key);
        for v in values {
            self.0.push(' ');
            self.0.push_str(&v);
        }
        self.0.push('\n');
    }

    fn floats(&mut self, key: &str, values: &[f64]) {
        self.line(key, values.iter().map(|v| format!("{v:e}")));
    }

    fn ints<T: std::fmt::Display>(&mut self, key: &str, values: &[T]) {
        self.line(key, values.iter().map(|v| v.to_string()));
    }
}

fn f(v: f64) -> String {
    format!("{v:e}")
}

fn write_gaussian(t: &mut Text, g: &Gaussian) {
    t.floats("mean", g.mean());
    match g.covariance() {
        Covariance::Spherical(v) => t.floats("var", &[*v]),
        Covariance::Diagonal(v) => t.floats("var", v),
        Covariance::Full(m) => {
            for r in m.iter_rows() {
                t.floats("cov", r);
            }
        }
    }
}

fn write_gmm(t: &mut Text, g: &GmmModel) {
    t.line(
        "gmm",
        [
            g.n_components().to_string(),
            g.dim().to_string(),
            g.cov_type().as_str().to_string(),
        ],
    );
    t.floats("weights", g.weights());
    for c in g.components() {
        write_gaussian(t, c);
    }
}

fn hmm_text(m: &HmmModel) -> String {
    let mut t = Text::default();
    t.ints("hmm", &[m.n_states(), m.dim()]);
    t.floats("initial", m.initial());
    for r in m.transitions().iter_rows() {
        t.floats("transition", r);
    }
    for e in m.emissions() {
        write_gmm(&mut t, e);
    }
    t.0
}

fn merger_text(m: &Merger) -> String {
    let mut t = Text::default();
    t.line("merger", [m.kind().as_str().to_string()]);
    match m {
        Merger::None | Merger::UnweightedLclr => {}
        Merger::Vote { priority } => t.ints("priority", priority),
        Merger::WeightedLclr { weights } => t.floats("weights", weights.as_slice()),
        Merger::Gmm { speakers, models } => {
            t.ints("speakers", speakers);
            for g in models {
                write_gmm(&mut t, g);
            }
        }
        Merger::Svm { classifier } => {
            t.ints("classes", classifier.classes());
            t.floats("mean", classifier.mean());
            t.floats("scale", classifier.scale());
            for s in classifier.models() {
                t.floats("w", s.w());
                t.floats("b", &[s.b()]);
                t.floats("c", &[s.c()]);
                t.floats("alpha", s.alpha());
            }
        }
    }
    t.0
}

fn recognizer_text(s: &StoredModel) -> String {
    let rec = &s.recognizer;
    let c = rec.config();
    let mut t = Text::default();
    t.ints("seed", &[s.seed]);
    t.ints("split", &[s.train_per_speaker, s.enrolled]);
    t.ints("sample_rate", &[c.sample_rate]);
    for (b, ((lo, hi), m)) in c.bands.iter().zip(&c.models).enumerate() {
        t.line(
            "band",
            [
                b.to_string(),
                f(*lo),
                f(*hi),
                m.n_states.to_string(),
                m.n_mix.to_string(),
                m.cov_type.as_str().to_string(),
            ],
        );
    }
    t.line("merger", [c.merger.as_str().to_string()]);
    t.line(
        "train",
        [c.train.max_iters.to_string(), f(c.train.ll_tol), f(c.train.variance_floor)],
    );
    t.floats("pre_emphasis", &[c.pre_emphasis]);
    let e = &c.endpoint;
    t.line(
        "endpoint",
        [
            f(e.frame_ms),
            e.floor_frames.to_string(),
            f(e.threshold_db),
            e.hysteresis.to_string(),
            f(e.min_energy),
            f(e.min_contrast_db),
        ],
    );
    t.floats("framing", &[c.frame_ms, c.hop_ms]);
    t.line(
        "merger_params",
        [c.gmm_components.to_string(), f(c.svm_c), f(c.validation_fraction)],
    );
    let g = &c.ga;
    t.line(
        "ga",
        [
            g.population_size.to_string(),
            g.generations.to_string(),
            f(g.crossover_rate),
            f(g.mutation_rate),
            g.elitism_count.to_string(),
            g.tournament_size.to_string(),
            g.seed.to_string(),
        ],
    );
    match c.tau {
        Some(v) => t.floats("fixed_tau", &[v]),
        None => t.line("fixed_tau", ["none".to_string()]),
    }
    t.ints("speakers", rec.speakers());
    t.floats("tau", &[rec.tau()]);
    t.floats("validation_rates", rec.validation_rates());
    t.floats("ga_convergence", rec.ga_convergence());
    for n in &s.notes {
        t.line("note", [n.replace('\n', " ")]);
    }
    t.0
}

fn model_file(band: usize, speaker: u32) -> String {
    format!("models/b{band}_s{speaker}.txt")
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes the store, replacing any previous one in `dir`.
pub fn save(dir: &Path, stored: &StoredModel) -> Result<()> {
    let rec = &stored.recognizer;
    let mut files: Vec<(String, String)> = vec![
        ("recognizer.txt".into(), recognizer_text(stored)),
        ("merger.txt".into(), merger_text(rec.merger())),
    ];
    for (b, row) in rec.bank().iter().enumerate() {
        for (m, &s) in row.iter().zip(rec.speakers()) {
            files.push((model_file(b, s), hmm_text(m)));
        }
    }
    let models = dir.join("models");
    if models.exists() {
        std::fs::remove_dir_all(&models).map_err(Error::io(&models))?;
    }
    std::fs::create_dir_all(&models).map_err(Error::io(&models))?;
    let mut manifest = format!("{MAGIC} version {STORE_VERSION}\n");
    for (name, body) in &files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(Error::io(&path))?;
        let _ = writeln!(manifest, "file {name} {}", sha256_hex(body.as_bytes()));
    }
    let path = dir.join(MANIFEST);
    std::fs::write(&path, manifest).map_err(Error::io(&path))
}

// ---- reading -------------------------------------------------------------

struct Lines<'a> {
    file: PathBuf,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(file: PathBuf, text: &'a str) -> Self {
        Lines {
            file,
            lines: text.lines().enumerate().peekable(),
        }
    }

    fn err(&self, detail: impl Into<String>) -> Error {
        Error::store(&self.file, detail)
    }

    fn peek_key(&mut self) -> Option<&'a str> {
        self.lines.peek().and_then(|(_, l)| l.split_whitespace().next())
    }

    /// The values of the next line, which must start with `key`.
    fn take(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (n, line) = self
            .lines
            .next()
            .ok_or_else(|| self.err(format!("expected {key:?}, found end of file")))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some(k) if k == key => Ok(it.collect()),
            other => Err(self.err(format!("line {}: expected {key:?}, found {other:?}", n + 1))),
        }
    }

    /// The rest of the next `key` line as raw text.
    fn take_text(&mut self, key: &str) -> Result<String> {
        let (n, line) = self
            .lines
            .next()
            .ok_or_else(|| self.err(format!("expected {key:?}, found end of file")))?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.to_string()),
            _ if line == key => Ok(String::new()),
            _ => Err(self.err(format!("line {}: expected {key:?}", n + 1))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let vals = self.take(key)?;
        vals.iter().map(|v| parse::<f64>(self, v)).collect()
    }

    fn float(&mut self, key: &str) -> Result<f64> {
        let v = self.floats(key)?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(self.err(format!("{key}: expected one value, found {}", v.len()))),
        }
    }

    fn ints<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let vals = self.take(key)?;
        vals.iter().map(|v| parse::<T>(self, v)).collect()
    }

    fn finish(&mut self) -> Result<()> {
        match self.lines.next() {
            None => Ok(()),
            Some((n, _)) => Err(self.err(format!("line {}: unexpected trailing content", n + 1))),
        }
    }
}

fn parse<T: std::str::FromStr>(l: &Lines<'_>, s: &str) -> Result<T> {
    s.parse::<T>().map_err(|_| l.err(format!("cannot parse {s:?}")))
}

fn fields<const N: usize>(l: &mut Lines<'_>, key: &str) -> Result<[String; N]> {
    let v = l.take(key)?;
    let n = v.len();
    let owned: Vec<String> = v.into_iter().map(str::to_string).collect();
    owned
        .try_into()
        .map_err(|_| l.err(format!("{key}: expected {N} values, found {n}")))
}

fn cov_type(l: &Lines<'_>, s: &str) -> Result<CovarianceType> {
    CovarianceType::parse(s).ok_or_else(|| l.err(format!("unknown covariance type {s:?}")))
}

fn read_gmm(l: &mut Lines<'_>) -> Result<GmmModel> {
    let [k, dim, cov] = fields::<3>(l, "gmm")?;
    let (k, dim): (usize, usize) = (parse(l, &k)?, parse(l, &dim)?);
    let cov = cov_type(l, &cov)?;
    let weights = l.floats("weights")?;
    let mut comps = Vec::with_capacity(k);
    for _ in 0..k {
        let mean = l.floats("mean")?;
        let c = match cov {
            CovarianceType::Spherical => Covariance::Spherical(l.float("var")?),
            CovarianceType::Diagonal => Covariance::Diagonal(l.floats("var")?),
            CovarianceType::Full => {
                let rows = (0..dim).map(|_| l.floats("cov")).collect::<Result<Vec<_>>>()?;
                Covariance::Full(Matrix::from_rows(&rows)?)
            }
        };
        comps.push(Gaussian::new(mean, c)?);
    }
    Ok(GmmModel::new(weights, comps)?)
}

fn read_hmm(file: PathBuf, text: &str) -> Result<HmmModel> {
    let mut l = Lines::new(file, text);
    let head: Vec<usize> = l.ints("hmm")?;
    let [n, _dim] = head[..] else {
        return Err(l.err("hmm: expected state count and dimension"));
    };
    let initial = l.floats("initial")?;
    let rows = (0..n).map(|_| l.floats("transition")).collect::<Result<Vec<_>>>()?;
    let emissions = (0..n).map(|_| read_gmm(&mut l)).collect::<Result<Vec<_>>>()?;
    l.finish()?;
    Ok(HmmModel::new(initial, Matrix::from_rows(&rows)?, emissions)?)
}

fn read_merger(file: PathBuf, text: &str, kind: MergerKind) -> Result<Merger> {
    let mut l = Lines::new(file, text);
    let [name] = fields::<1>(&mut l, "merger")?;
    if MergerKind::parse(&name) != Some(kind) {
        return Err(l.err(format!("merger file holds {name:?}, recognizer expects {}", kind.as_str())));
    }
    let m = match kind {
        MergerKind::None => Merger::None,
        MergerKind::UnweightedLclr => Merger::UnweightedLclr,
        MergerKind::Vote => Merger::Vote {
            priority: l.ints("priority")?,
        },
        MergerKind::WeightedLclr => Merger::WeightedLclr {
            weights: BandWeights::new(l.floats("weights")?)?,
        },
        MergerKind::Gmm => {
            let speakers: Vec<u32> = l.ints("speakers")?;
            let models = speakers.iter().map(|_| read_gmm(&mut l)).collect::<Result<Vec<_>>>()?;
            Merger::Gmm { speakers, models }
        }
        MergerKind::Svm => {
            let classes: Vec<u32> = l.ints("classes")?;
            let mean = l.floats("mean")?;
            let scale = l.floats("scale")?;
            let mut models = Vec::with_capacity(classes.len());
            for _ in &classes {
                let w = l.floats("w")?;
                let b = l.float("b")?;
                let c = l.float("c")?;
                let alpha = l.floats("alpha")?;
                models.push(SvmModel::from_primal(w, b, c)?.with_alpha(alpha)?);
            }
            Merger::Svm {
                classifier: OvrClassifier::from_parts(classes, models, mean, scale)?,
            }
        }
    };
    l.finish()?;
    Ok(m)
}

struct Header {
    seed: u64,
    train_per_speaker: usize,
    enrolled: usize,
    config: RecognizerConfig,
    speakers: Vec<u32>,
    tau: f64,
    validation_rates: Vec<f64>,
    ga_convergence: Vec<f64>,
    notes: Vec<String>,
}

fn read_header(file: PathBuf, text: &str) -> Result<Header> {
    let mut l = Lines::new(file, text);
    let [seed] = fields::<1>(&mut l, "seed")?;
    let seed = parse(&l, &seed)?;
    let [tps, enrolled] = fields::<2>(&mut l, "split")?;
    let (train_per_speaker, enrolled) = (parse(&l, &tps)?, parse(&l, &enrolled)?);
    let [sr] = fields::<1>(&mut l, "sample_rate")?;
    let sample_rate: u32 = parse(&l, &sr)?;
    let mut bands = Vec::new();
    let mut models = Vec::new();
    while l.peek_key() == Some("band") {
        let [idx, lo, hi, states, mix, cov] = fields::<6>(&mut l, "band")?;
        if parse::<usize>(&l, &idx)? != bands.len() {
            return Err(l.err("bands out of order"));
        }
        bands.push((parse(&l, &lo)?, parse(&l, &hi)?));
        models.push(BandModelConfig {
            n_states: parse(&l, &states)?,
            n_mix: parse(&l, &mix)?,
            cov_type: cov_type(&l, &cov)?,
        });
    }
    let [merger] = fields::<1>(&mut l, "merger")?;
    let merger = MergerKind::parse(&merger).ok_or_else(|| l.err(format!("unknown merger {merger:?}")))?;
    let [iters, tol, floor] = fields::<3>(&mut l, "train")?;
    let train = TrainSettings {
        max_iters: parse(&l, &iters)?,
        ll_tol: parse(&l, &tol)?,
        variance_floor: parse(&l, &floor)?,
    };
    let pre_emphasis = l.float("pre_emphasis")?;
    let [fm, ff, td, hy, me, mc] = fields::<6>(&mut l, "endpoint")?;
    let endpoint = EndpointParams {
        frame_ms: parse(&l, &fm)?,
        floor_frames: parse(&l, &ff)?,
        threshold_db: parse(&l, &td)?,
        hysteresis: parse(&l, &hy)?,
        min_energy: parse(&l, &me)?,
        min_contrast_db: parse(&l, &mc)?,
    };
    let framing = l.floats("framing")?;
    let [frame_ms, hop_ms] = framing[..] else {
        return Err(l.err("framing: expected frame and hop"));
    };
    let [gc, sc, vf] = fields::<3>(&mut l, "merger_params")?;
    let [pop, gens, cx, mr, el, tour, gseed] = fields::<7>(&mut l, "ga")?;
    let ga = GaConfig {
        population_size: parse(&l, &pop)?,
        generations: parse(&l, &gens)?,
        crossover_rate: parse(&l, &cx)?,
        mutation_rate: parse(&l, &mr)?,
        elitism_count: parse(&l, &el)?,
        tournament_size: parse(&l, &tour)?,
        seed: parse(&l, &gseed)?,
    };
    let [fixed] = fields::<1>(&mut l, "fixed_tau")?;
    let tau_cfg = if fixed == "none" { None } else { Some(parse(&l, &fixed)?) };
    let mut config = RecognizerConfig::baseline(sample_rate);
    config.bands = bands;
    config.models = models;
    config.merger = merger;
    config.train = train;
    config.pre_emphasis = pre_emphasis;
    config.endpoint = endpoint;
    config.frame_ms = frame_ms;
    config.hop_ms = hop_ms;
    config.gmm_components = parse(&l, &gc)?;
    config.svm_c = parse(&l, &sc)?;
    config.validation_fraction = parse(&l, &vf)?;
    config.ga = ga;
    config.tau = tau_cfg;
    let speakers = l.ints("speakers")?;
    let tau = l.float("tau")?;
    let validation_rates = l.floats("validation_rates")?;
    let ga_convergence = l.floats("ga_convergence")?;
    let mut notes = Vec::new();
    while l.peek_key() == Some("note") {
        notes.push(l.take_text("note")?);
    }
    l.finish()?;
    Ok(Header {
        seed,
        train_per_speaker,
        enrolled,
        config,
        speakers,
        tau,
        validation_rates,
        ga_convergence,
        notes,
    })
}

/// Reads and verifies a store. Files are checked against the manifest
/// checksums before anything is parsed.
pub fn load(dir: &Path) -> Result<StoredModel> {
    let manifest_path = dir.join(MANIFEST);
    let manifest = std::fs::read_to_string(&manifest_path).map_err(Error::io(&manifest_path))?;
    let mut lines = manifest.lines();
    let version_line = lines.next().unwrap_or_default();
    let expected = format!("{MAGIC} version {STORE_VERSION}");
    if version_line != expected {
        return Err(Error::store(
            &manifest_path,
            format!("unsupported header {version_line:?}, expected {expected:?}"),
        ));
    }
    let mut files = std::collections::BTreeMap::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let ["file", name, sum] = parts[..] else {
            return Err(Error::store(&manifest_path, format!("malformed line {line:?}")));
        };
        if name.contains("..") || Path::new(name).is_absolute() {
            return Err(Error::store(&manifest_path, format!("illegal file name {name:?}")));
        }
        let path = dir.join(name);
        let body = std::fs::read(&path).map_err(Error::io(&path))?;
        if sha256_hex(&body) != sum {
            return Err(Error::store(&path, "checksum mismatch, refusing to load"));
        }
        let text = String::from_utf8(body).map_err(|_| Error::store(&path, "not UTF-8"))?;
        files.insert(name.to_string(), text);
    }
    let mut get = |name: &str| {
        files
            .remove(name)
            .ok_or_else(|| Error::store(&manifest_path, format!("{name} is not listed")))
    };
    let header = read_header(dir.join("recognizer.txt"), &get("recognizer.txt")?)?;
    let merger = read_merger(dir.join("merger.txt"), &get("merger.txt")?, header.config.merger)?;
    let mut bank = Vec::with_capacity(header.config.bands.len());
    for b in 0..header.config.bands.len() {
        let mut row = Vec::with_capacity(header.speakers.len());
        for &s in &header.speakers {
            let name = model_file(b, s);
            row.push(read_hmm(dir.join(&name), &get(&name)?)?);
        }
        bank.push(row);
    }
    if let Some(extra) = files.keys().next() {
        return Err(Error::store(&manifest_path, format!("unexpected file {extra}")));
    }
    let recognizer = TrainedRecognizer::from_parts(
        header.config,
        header.speakers,
        bank,
        merger,
        header.tau,
        header.validation_rates,
        header.ga_convergence,
    )?;
    Ok(StoredModel {
        recognizer,
        seed: header.seed,
        train_per_speaker: header.train_per_speaker,
        enrolled: header.enrolled,
        notes: header.notes,
    })
}
