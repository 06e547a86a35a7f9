use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sbsid::store;

const CONFIG: &str = r#"
seed = 9
[corpus]
speakers = 5
utterances = 8
duration_s = 0.7
[split]
train_per_speaker = 5
enrolled = 3
[recognizer]
bands = 2
merger = "vote"
mixtures = 2
states = 3
[training]
max_iters = 6
[ga]
population = 8
generations = 3
"#;

fn sbsid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbsid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Setup {
    _dir: tempfile::TempDir,
    root: PathBuf,
    manifest: PathBuf,
    store: PathBuf,
}

fn setup() -> Setup {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let config = root.join("run.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let corpus = root.join("corpus");
    let out = sbsid(&["synth", "--config", s(&config), "--out", s(&corpus)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = corpus.join("manifest.csv");
    let store = root.join("store");
    let out = sbsid(&["train", "--config", s(&config), "--manifest", s(&manifest), "--store", s(&store)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains("validation_ir")).count(), 2);
    Setup {
        _dir: dir,
        root,
        manifest,
        store,
    }
}

#[test]
fn train_identify_evaluate_tune() {
    let t = setup();
    let wav = t.manifest.parent().unwrap().join("spk001/utt008.wav");
    let out = sbsid(&["identify", "--store", s(&t.store), s(&wav)]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let keys: Vec<&str> = stdout.lines().map(|l| l.split(' ').next().unwrap()).collect();
    assert_eq!(keys, ["speaker_id", "lr", "decision"]);
    let expected = if code == 0 { "decision accepted" } else { "decision rejected" };
    assert!(stdout.contains(expected));

    let eval = t.root.join("eval");
    let out = sbsid(&["evaluate", "--store", s(&t.store), "--manifest", s(&t.manifest), "--out", s(&eval)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["metrics.csv", "far_frr.csv", "histograms.csv", "ga_convergence.csv", "outcomes.csv"] {
        assert!(eval.join(f).is_file(), "{f}");
    }
    let far = std::fs::read_to_string(eval.join("far_frr.csv")).unwrap();
    assert!(far.starts_with("tau,far,frr\n"));

    let out = sbsid(&["tune", "--store", s(&t.store), "--manifest", s(&t.manifest), "--target", "threshold"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let header = std::fs::read_to_string(t.store.join("recognizer.txt")).unwrap();
    assert!(header.lines().any(|l| l.starts_with("note tau") && l.contains("held-out")));
}

#[test]
fn reloaded_store_scores_bit_identically() {
    let t = setup();
    let wav = t.manifest.parent().unwrap().join("spk002/utt007.wav");
    let a = t.root.join("a");
    let b = t.root.join("b");
    assert!(sbsid(&["identify", "--store", s(&t.store), s(&wav), "--out", s(&a)]).status.code().unwrap() < 2);
    // Saving a loaded store must reproduce every byte.
    let copy = t.root.join("copy");
    store::save(&copy, &store::load(&t.store).unwrap()).unwrap();
    for f in std::fs::read_dir(&t.store).unwrap() {
        let name = f.unwrap().file_name();
        if name != "models" {
            assert_eq!(
                std::fs::read(t.store.join(&name)).unwrap(),
                std::fs::read(copy.join(&name)).unwrap()
            );
        }
    }
    assert!(sbsid(&["identify", "--store", s(&copy), s(&wav), "--out", s(&b)]).status.code().unwrap() < 2);
    for f in ["scores.csv", "features_band0.csv", "features_band1.csv", "filter_sos.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn corrupt_store_and_bad_input_exit_with_two() {
    let t = setup();
    let wav = t.manifest.parent().unwrap().join("spk001/utt008.wav");
    let model = t.store.join("models/b0_s1.txt");
    let mut text = std::fs::read_to_string(&model).unwrap();
    text = text.replacen('1', "2", 1);
    std::fs::write(&model, text).unwrap();
    let out = sbsid(&["identify", "--store", s(&t.store), s(&wav)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum mismatch"));

    let missing = t.root.join("missing.wav");
    assert_eq!(sbsid(&["identify", "--store", s(&t.store), s(&missing)]).status.code(), Some(2));

    let bad = t.root.join("bad.toml");
    std::fs::write(&bad, "seed = 1\n[recognizer]\nmerger = \"vote\"\n").unwrap();
    let out = sbsid(&["train", "--config", s(&bad), "--manifest", s(&t.manifest), "--store", s(&t.root.join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));

    let no_seed = t.root.join("no_seed.toml");
    std::fs::write(&no_seed, "[corpus]\nspeakers = 4\n").unwrap();
    let out = sbsid(&["synth", "--config", s(&no_seed), "--out", s(&t.root.join("y"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tune_refuses_an_empty_impostor_set() {
    let t = setup();
    let text = std::fs::read_to_string(&t.manifest).unwrap();
    let enrolled: String = text.lines().filter(|l| !l.contains(",impostor,")).map(|l| format!("{l}\n")).collect();
    let only = t.manifest.with_file_name("enrolled_only.csv");
    std::fs::write(&only, enrolled).unwrap();
    let out = sbsid(&["tune", "--store", s(&t.store), "--manifest", s(&only), "--target", "threshold"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("impostor"));
}

#[test]
fn comparison_and_combined_vote() {
    let t = setup();
    let base_cfg = t.root.join("base.toml");
    std::fs::write(&base_cfg, CONFIG.replace("bands = 2\nmerger = \"vote\"\n", "")).unwrap();
    let base = t.root.join("base");
    let out = sbsid(&["train", "--config", s(&base_cfg), "--manifest", s(&t.manifest), "--store", s(&base)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval = t.root.join("cmp");
    let out = sbsid(&[
        "evaluate", "--store", s(&base), "--store", s(&t.store), "--manifest", s(&t.manifest), "--out", s(&eval),
        "--noise-band", "1046-4000", "--noise-snr-db", "-5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(eval.join("merger_comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains(",none,1,") && table.contains(",vote,2,"));
    let combined = std::fs::read_to_string(eval.join("combined_vote.csv")).unwrap();
    assert!(combined.contains("base+store"));
}
