//! The `sbsid` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sbsid_core::corpus::{generate_synthetic_corpus, split_manifest, Manifest, Role, SplitPlan};
use sbsid_core::fusion::MergerKind;
use sbsid_core::ga;
use sbsid_core::recognizer::{self, band_data, combined_vote_rate, evaluate, train, Evaluation, NoiseSpec};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::Rayon;
use crate::export;
use crate::manifest::{write_manifest, DiskCorpus};
use crate::store::{self, StoredModel};
use crate::wav::{load_wav, write_wav};

#[derive(Debug, Parser)]
#[command(name = "sbsid", version, about = "Sub-band HMM speaker identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus: WAV files plus manifest.csv.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a recognizer and write a model store.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Identify the speaker of one WAV file. Exit 0 on accept, 1 on reject.
    Identify {
        #[arg(long)]
        store: PathBuf,
        wav: PathBuf,
        /// Also write scores, features and filter coefficients here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one or more stores on the held-out part of a manifest.
    Evaluate {
        /// Repeat for a merger comparison table.
        #[arg(long, required = true)]
        store: Vec<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Run config whose [noise] section (and seed) apply when no noise
        /// flags are given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// GA tuning of the threshold or the per-band HMM architecture.
    Tune {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write ga_convergence.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Band of injected white noise, as LOW-HIGH in Hz.
    #[arg(long, value_parser = parse_band, requires = "noise_snr_db")]
    pub noise_band: Option<(f64, f64)>,
    /// SNR of the injected noise relative to the signal in the same band.
    #[arg(long, allow_hyphen_values = true, requires = "noise_band")]
    pub noise_snr_db: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Threshold,
    Architecture,
}

fn parse_band(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once('-')
        .ok_or_else(|| format!("expected LOW-HIGH, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad low edge {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad high edge {hi:?}"))?;
    Ok((lo, hi))
}

/// What the process exit code should report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    Rejected,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Rejected => 1,
        }
    }
}

pub const ERROR_CODE: u8 = 2;

pub fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Synth { config, out, seed } => synth(&config, &out, seed),
        Command::Train {
            config,
            manifest,
            store,
            seed,
        } => cmd_train(&config, &manifest, &store, seed),
        Command::Identify { store, wav, out } => identify(&store, &wav, out.as_deref()),
        Command::Evaluate {
            store,
            manifest,
            out,
            noise,
            config,
            seed,
        } => {
            let fallback = match config {
                Some(path) => load_config(&path, seed)?.noise_spec(),
                None => None,
            };
            cmd_evaluate(&store, &manifest, &out, &noise, fallback, seed)
        }
        Command::Tune {
            store,
            manifest,
            target,
            seed,
            out,
        } => tune(&store, &manifest, target, seed, out.as_deref()),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::io(dir))
}

fn synth(config: &Path, out: &Path, seed: Option<u64>) -> Result<Status> {
    let cfg = load_config(config, seed)?;
    let c = &cfg.corpus;
    let corpus = generate_synthetic_corpus(c.speakers, c.utterances, c.duration_s, cfg.seed)?;
    // Roles follow the split protocol of this config: the first `enrolled`
    // speakers by id are enrolled.
    let roles = corpus
        .manifest
        .speakers()
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s, if i < cfg.split.enrolled { Role::Enrolled } else { Role::Impostor }))
        .collect();
    let manifest = Manifest::new(corpus.manifest.entries().to_vec(), roles)?;
    create_dir(out)?;
    for e in manifest.entries() {
        let path = out.join(&e.path);
        if let Some(parent) = path.parent() {
            create_dir(parent)?;
        }
        write_wav(&path, &corpus.clips[&(e.speaker_id, e.utterance_id)])?;
    }
    let path = out.join("manifest.csv");
    write_manifest(&path, &manifest)?;
    println!("{}", path.display());
    Ok(Status::Success)
}

fn plan_for(corpus: &DiskCorpus, train_per_speaker: usize, enrolled: usize) -> Result<SplitPlan> {
    Ok(split_manifest(&corpus.manifest, train_per_speaker, enrolled)?)
}

fn cmd_train(config: &Path, manifest: &Path, store_dir: &Path, seed: Option<u64>) -> Result<Status> {
    let cfg = load_config(config, seed)?;
    let rc = cfg.recognizer_config()?;
    let corpus = DiskCorpus::open(manifest)?;
    let split = plan_for(&corpus, cfg.split.train_per_speaker, cfg.split.enrolled)?;
    let rec = train(&rc, &split, &corpus, &Rayon)?;
    for (b, (rate, (lo, hi))) in rec.validation_rates().iter().zip(&rc.bands).enumerate() {
        println!("band {b} ({lo}-{hi} Hz) validation_ir {rate}");
    }
    println!("tau {}", rec.tau());
    let note = match rc.tau {
        Some(_) => "tau fixed by configuration".to_string(),
        None => format!("tau tuned by GA on the validation sub-split (seed {})", cfg.seed),
    };
    let stored = StoredModel {
        recognizer: rec,
        seed: cfg.seed,
        train_per_speaker: cfg.split.train_per_speaker,
        enrolled: cfg.split.enrolled,
        notes: vec![note],
    };
    create_dir(store_dir)?;
    store::save(store_dir, &stored)?;
    Ok(Status::Success)
}

fn identify(store_dir: &Path, wav: &Path, out: Option<&Path>) -> Result<Status> {
    let clip = load_wav(wav)?;
    let stored = store::load(store_dir)?;
    let rec = &stored.recognizer;
    let front = rec.front_end();
    let feats = front.features(&clip)?;
    let id = rec.identify_features(&feats)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        export::write_scores(&dir.join("scores.csv"), &id.scores)?;
        for (b, f) in feats.iter().enumerate() {
            export::write_features(&dir.join(format!("features_band{b}.csv")), f)?;
        }
        export::write_filter_sos(&dir.join("filter_sos.csv"), front.plan())?;
    }
    println!("speaker_id {}", id.speaker);
    println!("lr {}", id.confidence.lr);
    println!("decision {}", id.decision.as_str());
    Ok(if id.decision.is_accepted() {
        Status::Success
    } else {
        Status::Rejected
    })
}

fn noise_spec(args: &NoiseArgs, seed: u64) -> Option<NoiseSpec> {
    match (args.noise_band, args.noise_snr_db) {
        (Some((low_hz, high_hz)), Some(snr_db)) => Some(NoiseSpec {
            low_hz,
            high_hz,
            snr_db,
            seed,
        }),
        _ => None,
    }
}

fn write_report(dir: &Path, eval: &Evaluation, convergence: &[f64]) -> Result<()> {
    create_dir(dir)?;
    let r = &eval.report;
    export::write_metrics(&dir.join("metrics.csv"), r)?;
    export::write_far_frr(&dir.join("far_frr.csv"), &r.far_frr_curve)?;
    export::write_histograms(&dir.join("histograms.csv"), &r.histograms)?;
    export::write_ga_convergence(&dir.join("ga_convergence.csv"), convergence)?;
    export::write_outcomes(&dir.join("outcomes.csv"), &eval.outcomes)
}

fn store_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_evaluate(
    stores: &[PathBuf],
    manifest: &Path,
    out: &Path,
    noise: &NoiseArgs,
    fallback: Option<NoiseSpec>,
    seed: Option<u64>,
) -> Result<Status> {
    let corpus = DiskCorpus::open(manifest)?;
    let loaded = stores
        .iter()
        .map(|s| store::load(s))
        .collect::<Result<Vec<_>>>()?;
    let mut evals = Vec::with_capacity(loaded.len());
    for (path, stored) in stores.iter().zip(&loaded) {
        let split = plan_for(&corpus, stored.train_per_speaker, stored.enrolled)?;
        let spec = noise_spec(noise, seed.unwrap_or(stored.seed)).or(fallback);
        let eval = evaluate(&stored.recognizer, &split, &corpus, spec.as_ref(), &Rayon)?;
        let r = &eval.report;
        println!(
            "{} identification_rate {} reliability {} decision_gap {}",
            store_name(path),
            r.identification_rate,
            r.reliability,
            r.decision_gap
        );
        evals.push(eval);
    }
    if loaded.len() == 1 {
        write_report(out, &evals[0], loaded[0].recognizer.ga_convergence())?;
        return Ok(Status::Success);
    }
    create_dir(out)?;
    let mut rows = Vec::new();
    for (i, ((path, stored), eval)) in stores.iter().zip(&loaded).zip(&evals).enumerate() {
        let name = store_name(path);
        write_report(&out.join(format!("{i}_{name}")), eval, stored.recognizer.ga_convergence())?;
        let rec = &stored.recognizer;
        rows.push(export::ComparisonRow {
            store: name,
            merger: rec.config().merger.as_str().to_string(),
            bands: rec.config().bands.len(),
            identification_rate: eval.report.identification_rate,
            reliability: eval.report.reliability,
            decision_gap: eval.report.decision_gap,
            tau: rec.tau(),
        });
    }
    export::write_comparison(&out.join("merger_comparison.csv"), &rows)?;
    // Classical + sub-band vote: the first wide-band store is the baseline and
    // leads the tie ordering; every linear sub-band store follows in order.
    let is_linear = |k: MergerKind| {
        matches!(k, MergerKind::Vote | MergerKind::WeightedLclr | MergerKind::UnweightedLclr)
    };
    let base = loaded
        .iter()
        .position(|s| s.recognizer.config().merger == MergerKind::None);
    if let Some(b) = base {
        let members: Vec<usize> = (0..loaded.len())
            .filter(|&i| i != b && is_linear(loaded[i].recognizer.config().merger))
            .collect();
        if !members.is_empty() {
            let others: Vec<&Evaluation> = members.iter().map(|&i| &evals[i]).collect();
            let ordering: Vec<usize> = (0..=members.len()).collect();
            let rate = combined_vote_rate(&evals[b], &others, &ordering)?;
            let names: Vec<String> = std::iter::once(b)
                .chain(members)
                .map(|i| store_name(&stores[i]))
                .collect();
            println!("combined_vote identification_rate {rate}");
            export::write_combined_vote(&out.join("combined_vote.csv"), &names, rate)?;
        }
    }
    Ok(Status::Success)
}

fn tune(store_dir: &Path, manifest: &Path, target: Target, seed: Option<u64>, out: Option<&Path>) -> Result<Status> {
    let mut stored = store::load(store_dir)?;
    let corpus = DiskCorpus::open(manifest)?;
    let split = plan_for(&corpus, stored.train_per_speaker, stored.enrolled)?;
    let mut config = stored.recognizer.config().clone();
    if let Some(s) = seed {
        config.ga.seed = s;
    }
    let convergence = match target {
        Target::Threshold => {
            let eval = evaluate(&stored.recognizer, &split, &corpus, None, &Rayon)?;
            let t = recognizer::tune_threshold_on(&eval, &config.ga, &Rayon)?;
            stored.recognizer.set_tau(t.tau)?;
            stored.recognizer.set_ga_convergence(t.per_generation_best.clone());
            stored.notes.push(format!(
                "tau {} tuned by GA on held-out trials of {} (seed {}, fitness {})",
                t.tau,
                manifest.display(),
                config.ga.seed,
                t.fitness
            ));
            println!("tau {} fitness {}", t.tau, t.fitness);
            t.per_generation_best
        }
        Target::Architecture => {
            let mut curve = Vec::new();
            for b in 0..config.bands.len() {
                let (fit, val) = band_data(&config, &split, &corpus, b, &Rayon)?;
                let a = ga::tune_architecture(&fit, &val, &config.hmm_config(b), &config.ga, &Rayon)?;
                println!("band {b} states {} mixtures {} validation_ir {}", a.n_states, a.n_mix, a.fitness);
                config.models[b].n_states = a.n_states;
                config.models[b].n_mix = a.n_mix;
                curve = a.per_generation_best;
            }
            let rec = train(&config, &split, &corpus, &Rayon)?;
            stored.notes.push(format!(
                "architecture tuned by GA on {} (seed {}): {}",
                manifest.display(),
                config.ga.seed,
                config
                    .models
                    .iter()
                    .map(|m| format!("{}x{}", m.n_states, m.n_mix))
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
            stored.recognizer = rec;
            curve
        }
    };
    if let Some(dir) = out {
        create_dir(dir)?;
        export::write_ga_convergence(&dir.join("ga_convergence.csv"), &convergence)?;
    }
    store::save(store_dir, &stored)?;
    Ok(Status::Success)
}
