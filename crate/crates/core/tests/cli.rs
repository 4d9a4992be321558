use std::path::{Path, PathBuf};
use std::process::Command;

use djmeter::audio_io::{AudioClip, PreprocessConfig};
use djmeter::cli::{self, PredictInput};
use djmeter::evaluation::{Averaging, EvalConfig, Protocol};
use djmeter::features::{self, Aggregation, Dataset, DatasetManifest, ExtractConfig, ManifestEntry};
use djmeter::forest::{ForestConfig, MaxFeatures};
use djmeter::synth::SynthSpec;
use djmeter::Error;

fn corpus(dir: &Path, count: usize, duration_s: f64) -> PathBuf {
    let spec = SynthSpec::three_archetypes(count, duration_s, 11);
    cli::cmd_synth(&spec, &dir.join("corpus")).unwrap()
}

fn extract(manifest: &Path, out: &Path, aggregation: Aggregation) -> Dataset {
    let cfg = ExtractConfig {
        aggregation,
        ..ExtractConfig::default()
    };
    let s = cli::cmd_extract(manifest, out, &cfg).unwrap();
    assert!(s.failures.is_empty(), "{:?}", s.failures);
    Dataset::read(out).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_djmeter"))
}

#[test]
fn extract_writes_one_row_per_song() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 1, 3.0);
    let out = dir.path().join("ds.csv");
    let ds = extract(&manifest, &out, Aggregation::MeanStd);
    assert_eq!(ds.records.len(), 3);
    let header = std::fs::read_to_string(&out).unwrap();
    let header = header.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header.split(',').count(), 292 + 3);
    assert!(header.contains(",vu_L_mean,") && header.ends_with("b16k_corr_std"), "{header}");
}

#[test]
fn extract_tolerates_bad_entries() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 1, 3.0);
    let mut m = DatasetManifest::read(&manifest).unwrap();
    m.entries[1].path = dir.path().join("missing.wav");
    let bad_id = m.entries[1].song_id.clone();
    let edited = dir.path().join("edited.csv");
    m.write(&edited).unwrap();

    let out = dir.path().join("ds.csv");
    let s = cli::cmd_extract(&edited, &out, &ExtractConfig::default()).unwrap();
    assert_eq!(s.written, 2);
    assert_eq!(s.failures.len(), 1);
    assert_eq!(s.failures[0].0, bad_id);
    assert_eq!(Dataset::read(&out).unwrap().records.len(), 2);

    let o = bin()
        .args(["extract", "--manifest"])
        .arg(&edited)
        .arg("--out")
        .arg(dir.path().join("ds2.csv"))
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains(&bad_id));
}

#[test]
fn extract_rejects_empty_and_all_failed_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    DatasetManifest::default().write(&empty).unwrap();
    let out = dir.path().join("ds.csv");
    assert!(cli::cmd_extract(&empty, &out, &ExtractConfig::default()).is_err());

    let all_bad = dir.path().join("bad.csv");
    DatasetManifest {
        entries: vec![ManifestEntry {
            song_id: "x".into(),
            path: dir.path().join("nope.wav"),
            label: "a".into(),
        }],
    }
    .write(&all_bad)
    .unwrap();
    let o = bin()
        .args(["extract", "--manifest"])
        .arg(&all_bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!o.status.success());
}

#[test]
fn unknown_flags_are_rejected() {
    let o = bin().args(["train", "--trees", "3"]).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn train_echoes_config_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 2, 3.0);
    let ds = dir.path().join("ds.csv");
    extract(&manifest, &ds, Aggregation::MeanStd);

    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let s = cli::cmd_train(&ds, &a, &ForestConfig::default(), None).unwrap();
    cli::cmd_train(&ds, &b, &ForestConfig::default(), None).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(s.resolved_max_features, 17);
    let echo = s.render();
    for line in ["n_estimators: 25", "max_depth: 15", "random_state: 49", "-> 17"] {
        assert!(echo.contains(line), "{echo}");
    }

    let o = bin()
        .args(["--jobs", "1", "train", "--dataset"])
        .arg(&ds)
        .arg("--model")
        .arg(dir.path().join("c.json"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(dir.path().join("c.json")).unwrap());
}

#[test]
fn single_class_dataset_cannot_be_trained() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 2, 3.0);
    let mut m = DatasetManifest::read(&manifest).unwrap();
    m.entries.iter_mut().for_each(|e| e.label = "same".into());
    let one = dir.path().join("one.csv");
    m.write(&one).unwrap();
    let ds = dir.path().join("ds.csv");
    extract(&one, &ds, Aggregation::MeanStd);
    let err = cli::cmd_train(&ds, &dir.path().join("m.json"), &ForestConfig::default(), None);
    assert!(err.is_err());
}

#[test]
fn predict_recovers_training_labels() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 2, 3.0);
    let ds_path = dir.path().join("ds.csv");
    let ds = extract(&manifest, &ds_path, Aggregation::MeanStd);
    let model = dir.path().join("m.json");
    let pure = ForestConfig {
        bootstrap: false,
        max_features: MaxFeatures::All,
        n_estimators: 3,
        ..ForestConfig::default()
    };
    cli::cmd_train(&ds_path, &model, &pure, None).unwrap();

    let preds = cli::cmd_predict(&model, PredictInput::Dataset(&ds_path), &PreprocessConfig::default()).unwrap();
    assert_eq!(preds.len(), ds.records.len());
    for (p, r) in preds.iter().zip(&ds.records) {
        assert_eq!(p.song_id, r.song_id);
        assert_eq!(p.label, r.label);
        let sum: f64 = p.probabilities.iter().map(|(_, v)| v).sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }

    let m = DatasetManifest::read(&manifest).unwrap();
    let paths: Vec<PathBuf> = m.entries.iter().map(|e| e.path.clone()).collect();
    let from_audio = cli::cmd_predict(&model, PredictInput::Audio(&paths), &PreprocessConfig::default()).unwrap();
    for (p, e) in from_audio.iter().zip(&m.entries) {
        assert_eq!(p.label, e.label);
    }

    let o = bin()
        .args(["predict", "--format", "json", "--model"])
        .arg(&model)
        .arg("--dataset")
        .arg(&ds_path)
        .output()
        .unwrap();
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json.as_array().unwrap().len(), ds.records.len());
}

#[test]
fn predict_rejects_other_schema() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 2, 3.0);
    let mean_std = dir.path().join("ms.csv");
    let per_window = dir.path().join("pw.csv");
    extract(&manifest, &mean_std, Aggregation::MeanStd);
    extract(&manifest, &per_window, Aggregation::PerWindow);
    let model = dir.path().join("m.json");
    cli::cmd_train(&mean_std, &model, &ForestConfig::default(), None).unwrap();

    let err = cli::cmd_predict(&model, PredictInput::Dataset(&per_window), &PreprocessConfig::default()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::SchemaMismatch { .. }));
    assert!(msg.contains(&Aggregation::MeanStd.schema_hash()), "{msg}");
    assert!(msg.contains(&Aggregation::PerWindow.schema_hash()), "{msg}");
}

#[test]
fn evaluate_needs_enough_songs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 2, 3.0);
    let mut m = DatasetManifest::read(&manifest).unwrap();
    m.entries.truncate(4);
    let four = dir.path().join("four.csv");
    m.write(&four).unwrap();
    let ds = dir.path().join("ds.csv");
    extract(&four, &ds, Aggregation::MeanStd);
    let err = cli::cmd_evaluate(&ds, Protocol::Cv5, &EvalConfig::default(), Averaging::Macro, None, false)
        .unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)), "{err}");
}

#[test]
fn synth_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec::three_archetypes(10, 30.0, 3);
    let manifest = cli::cmd_synth(&spec, &dir.path().join("a")).unwrap();
    let m = DatasetManifest::read(&manifest).unwrap();
    assert_eq!(m.entries.len(), 30);
    let wavs = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav"))
        .count();
    assert_eq!(wavs, 30);

    let small = SynthSpec::three_archetypes(2, 2.0, 3);
    cli::cmd_synth(&small, &dir.path().join("b")).unwrap();
    cli::cmd_synth(&small, &dir.path().join("c")).unwrap();
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("b"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for n in names {
        let x = std::fs::read(dir.path().join("b").join(&n)).unwrap();
        let y = std::fs::read(dir.path().join("c").join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn mono_archetype_is_fully_correlated() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = corpus(dir.path(), 1, 3.0);
    let ds = extract(&manifest, &dir.path().join("ds.csv"), Aggregation::MeanStd);
    let corr = features::slot_names().iter().position(|s| s == "corr").unwrap();
    for r in &ds.records {
        let c = r.features[corr];
        if r.label == "mono" {
            assert!(c > 0.999, "{}: {c}", r.song_id);
        } else {
            assert!(c < 0.99, "{}: {c}", r.song_id);
        }
    }
}

#[test]
fn long_clip_uses_central_180_seconds() {
    let fs = 44_100u32;
    let n = 200 * fs as usize;
    let left: Vec<f64> = (0..n).map(|i| 0.5 * (i as f64 * 0.0713).sin()).collect();
    let right: Vec<f64> = (0..n).map(|i| 0.4 * (i as f64 * 0.1931).sin()).collect();
    let clip = AudioClip::new(left, right, fs).unwrap();
    let rows = features::extract_clip(&clip, &PreprocessConfig::default()).unwrap();
    assert_eq!(rows.len(), 1937);
}
