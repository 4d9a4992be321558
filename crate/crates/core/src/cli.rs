//! Batch front end: extract, train, evaluate, predict and synth.
//!
//! Results go to files or stdout; diagnostics go to stderr through `log`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::audio_io::PreprocessConfig;
use crate::error::{Error, Result};
use crate::evaluation::{self, Averaging, EvalConfig, Evaluation, Protocol};
use crate::features::{self, Aggregation, Dataset, DatasetManifest, ExtractConfig, SongRecord};
use crate::forest::{argmax, ForestConfig, ForestModel, MaxFeatures};
use crate::synth::SynthSpec;

#[derive(Debug, Parser)]
#[command(name = "djmeter", version, about = "Audio-meter features and random-forest DJ classification")]
pub struct Cli {
    /// Worker threads for extraction and training (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a feature dataset from a song manifest.
    Extract(ExtractArgs),
    /// Train a forest on a dataset and write the model file.
    Train(TrainArgs),
    /// Cross-validate or hold out and report metrics.
    Evaluate(EvaluateArgs),
    /// Predict songs from audio files or a dataset.
    Predict(PredictArgs),
    /// Generate a synthetic WAV corpus and manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    MeanStd,
    PerWindow,
    PerWindowVote,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::MeanStd => Aggregation::MeanStd,
            AggregationArg::PerWindow | AggregationArg::PerWindowVote => Aggregation::PerWindow,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// CSV with columns song_id,path,label.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output dataset file.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "mean-std")]
    pub aggregation: AggregationArg,
    /// Accept mono files by duplicating the channel.
    #[arg(long)]
    pub allow_mono: bool,
    #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
    pub silence_db: f64,
    /// Length of the analysed central section in seconds.
    #[arg(long, default_value_t = 180.0)]
    pub center_s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 25)]
    pub n_estimators: usize,
    #[arg(long, default_value_t = 15)]
    pub max_depth: usize,
    /// sqrt, all, or a count.
    #[arg(long, default_value = "sqrt", value_parser = parse_max_features)]
    pub max_features: MaxFeatures,
    #[arg(long, default_value_t = 49)]
    pub random_state: u64,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Project onto this many principal components before the forest
    /// (`--pca` alone keeps one).
    #[arg(long, num_args = 0..=1, default_missing_value = "1", value_name = "K")]
    pub pca: Option<usize>,
}

fn parse_max_features(s: &str) -> std::result::Result<MaxFeatures, String> {
    match s {
        "sqrt" | "auto" => Ok(MaxFeatures::Sqrt),
        "all" => Ok(MaxFeatures::All),
        n => n
            .parse::<usize>()
            .ok()
            .filter(|&k| k > 0)
            .map(MaxFeatures::Count)
            .ok_or_else(|| format!("expected sqrt, all or a positive count, got {n:?}")),
    }
}

impl ForestArgs {
    pub fn forest_config(&self) -> ForestConfig {
        ForestConfig {
            n_estimators: self.n_estimators,
            max_depth: self.max_depth,
            max_features: self.max_features,
            random_state: self.random_state,
            min_samples_split: self.min_samples_split,
            bootstrap: !self.no_bootstrap,
            ..ForestConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Cv5,
    Split90,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AverageArg {
    Macro,
    Micro,
    Weighted,
}

impl From<AverageArg> for Averaging {
    fn from(a: AverageArg) -> Self {
        match a {
            AverageArg::Macro => Averaging::Macro,
            AverageArg::Micro => Averaging::Micro,
            AverageArg::Weighted => Averaging::Weighted,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "cv5")]
    pub protocol: ProtocolArg,
    /// Seed for fold assignment and the train/test split.
    #[arg(long, default_value_t = 49)]
    pub seed: u64,
    #[arg(long)]
    pub no_stratify: bool,
    #[arg(long, value_enum, default_value = "macro")]
    pub average: AverageArg,
    /// Directory for report.txt, report.kv and confusion.txt.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Permute labels across songs first (chance-level control).
    #[arg(long)]
    pub shuffle_labels: bool,
    #[command(flatten)]
    pub forest: ForestArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Audio files to classify.
    #[arg(long, num_args = 1.., conflicts_with = "dataset", required_unless_present = "dataset")]
    pub audio: Vec<PathBuf>,
    /// Previously extracted dataset to classify.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    #[arg(long)]
    pub allow_mono: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// TOML corpus spec; without it the built-in three-archetype preset is used.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, short)]
    pub out_dir: PathBuf,
    /// Songs per class for the preset.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Song length in seconds for the preset.
    #[arg(long, default_value_t = 60.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Write the preset spec to this file instead of generating audio.
    #[arg(long)]
    pub dump_spec: Option<PathBuf>,
}

/// Settings shared by the subcommands after flag parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub forest: ForestConfig,
    pub pca_components: Option<usize>,
    pub protocol: Protocol,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub aggregation: Aggregation,
    pub stratify: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            dataset: None,
            model: None,
            forest: ForestConfig::default(),
            pca_components: None,
            protocol: Protocol::Cv5,
            seed: 49,
            jobs: None,
            aggregation: Aggregation::MeanStd,
            stratify: true,
        }
    }
}

impl RunConfig {
    /// Checks that every input path exists and the numeric settings are sane.
    pub fn validate(&self) -> Result<()> {
        for p in [&self.manifest, &self.dataset, &self.model].into_iter().flatten() {
            if !p.is_file() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
                ));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("--jobs must be >= 1".into()));
        }
        self.forest.validate()
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            forest: self.forest.clone(),
            pca_components: self.pca_components,
            seed: self.seed,
            stratify: self.stratify,
            ..EvalConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractSummary {
    pub written: usize,
    pub failures: Vec<(String, String)>,
}

/// Extracts every manifest entry. Songs that fail are reported and skipped;
/// the call fails only when nothing could be extracted.
pub fn cmd_extract(manifest: &Path, out: &Path, cfg: &ExtractConfig) -> Result<ExtractSummary> {
    cfg.preprocess.validate()?;
    let m = DatasetManifest::read(manifest)?;
    if m.entries.is_empty() {
        return Err(Error::Config(format!("manifest {} has no entries", manifest.display())));
    }
    let results: Vec<Result<SongRecord>> = m
        .entries
        .par_iter()
        .map(|e| {
            log::info!("extracting {}", e.song_id);
            features::extract_song(&e.path, &e.song_id, &e.label, cfg)
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (e, r) in m.entries.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(err) => {
                log::error!("{err}");
                failures.push((e.song_id.clone(), err.to_string()));
            }
        }
    }
    if records.is_empty() {
        return Err(Error::Config(format!(
            "all {} songs failed to extract",
            failures.len()
        )));
    }
    let written = records.len();
    Dataset::new(cfg.aggregation, records).write(out)?;
    Ok(ExtractSummary { written, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub songs: usize,
    pub rows: usize,
    pub classes: Vec<String>,
    pub n_features: usize,
    pub resolved_max_features: usize,
    pub config: ForestConfig,
    pub pca_components: Option<usize>,
}

impl TrainSummary {
    pub fn render(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "songs: {}", self.songs);
        let _ = writeln!(s, "rows: {}", self.rows);
        let _ = writeln!(s, "classes: {}", self.classes.join(", "));
        let _ = writeln!(s, "n_features: {}", self.n_features);
        let _ = writeln!(s, "n_estimators: {}", c.n_estimators);
        let _ = writeln!(s, "max_depth: {}", c.max_depth);
        let _ = writeln!(s, "criterion: entropy");
        let _ = writeln!(s, "bootstrap: {}", c.bootstrap);
        let _ = writeln!(s, "max_features: {:?} -> {}", c.max_features, self.resolved_max_features);
        let _ = writeln!(s, "min_samples_split: {}", c.min_samples_split);
        let _ = writeln!(s, "random_state: {}", c.random_state);
        match self.pca_components {
            Some(k) => {
                let _ = writeln!(s, "pca: {k} components");
            }
            None => s.push_str("pca: off\n"),
        }
        s
    }
}

/// Trains on every row of a dataset and writes the model file.
pub fn cmd_train(
    dataset: &Path,
    model_out: &Path,
    forest: &ForestConfig,
    pca_components: Option<usize>,
) -> Result<TrainSummary> {
    let ds = Dataset::read(dataset)?;
    let classes = ds.classes();
    if classes.len() < 2 {
        return Err(Error::Training(format!(
            "dataset has {} class(es); need at least 2",
            classes.len()
        )));
    }
    let all: Vec<usize> = (0..ds.records.len()).collect();
    let (x, y) = evaluation::training_rows(&ds, &all);
    let model = ForestModel::fit_with_classes(&x, &y, &classes, forest, pca_components)?
        .with_schema(ds.aggregation);
    model.save(model_out)?;
    Ok(TrainSummary {
        songs: ds.records.len(),
        rows: x.len(),
        classes,
        n_features: model.n_tree_features(),
        resolved_max_features: model.resolved_max_features(),
        config: forest.clone(),
        pca_components,
    })
}

/// Runs the chosen protocol; with `out_dir`, writes report.txt, report.kv and
/// confusion.txt there.
pub fn cmd_evaluate(
    dataset: &Path,
    protocol: Protocol,
    cfg: &EvalConfig,
    average: Averaging,
    out_dir: Option<&Path>,
    shuffle_labels: bool,
) -> Result<Evaluation> {
    let mut ds = Dataset::read(dataset)?;
    if shuffle_labels {
        ds = evaluation::shuffle_labels(&ds, cfg.seed.wrapping_add(0x5eed));
    }
    let ev = match protocol {
        Protocol::Cv5 => evaluation::cross_validate(&ds, cfg.folds, cfg)?,
        Protocol::Split90 => evaluation::holdout(&ds, cfg)?,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))
        };
        write("report.txt", render_evaluation(&ev, average))?;
        let mut kv = format!("protocol={}\n", protocol.as_str());
        let _ = writeln!(kv, "mean_accuracy={:.6}", ev.mean_accuracy);
        for (i, f) in ev.folds.iter().enumerate() {
            let _ = writeln!(kv, "fold.{}.accuracy={:.6}", i + 1, f.accuracy);
        }
        kv.push_str(&ev.report.to_key_values());
        write("report.kv", kv)?;
        write("confusion.txt", ev.confusion.render_grid())?;
    }
    Ok(ev)
}

pub fn render_evaluation(ev: &Evaluation, average: Averaging) -> String {
    let mut s = format!("protocol: {}\n", ev.protocol.as_str());
    for (i, f) in ev.folds.iter().enumerate() {
        let _ = writeln!(s, "fold {}: accuracy {:.4}", i + 1, f.accuracy);
    }
    let _ = writeln!(s, "mean accuracy: {:.4}\n", ev.mean_accuracy);
    s.push_str(&ev.report.render_text(average));
    s.push('\n');
    s.push_str(&ev.confusion.render_grid());
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub song_id: String,
    pub label: String,
    pub probabilities: Vec<(String, f64)>,
}

pub enum PredictInput<'a> {
    Audio(&'a [PathBuf]),
    Dataset(&'a Path),
}

/// Predicts every song of the input. The model's schema hash must match the
/// layout the input was (or will be) extracted with.
pub fn cmd_predict(
    model_path: &Path,
    input: PredictInput<'_>,
    preprocess: &PreprocessConfig,
) -> Result<Vec<Prediction>> {
    let model = ForestModel::load(model_path)?;
    let aggregation = model.aggregation.ok_or_else(|| {
        Error::Format(format!("model {} carries no feature schema", model_path.display()))
    })?;
    let check = |features: String| {
        if features == model.schema_hash {
            Ok(())
        } else {
            Err(Error::SchemaMismatch {
                model: model.schema_hash.clone(),
                features,
            })
        }
    };
    let records: Vec<SongRecord> = match input {
        PredictInput::Dataset(p) => {
            let ds = Dataset::read(p)?;
            check(ds.schema_hash())?;
            if ds.aggregation != aggregation {
                return Err(Error::SchemaMismatch {
                    model: model.schema_hash.clone(),
                    features: ds.schema_hash(),
                });
            }
            ds.records
        }
        PredictInput::Audio(paths) => {
            check(aggregation.schema_hash())?;
            let cfg = ExtractConfig {
                preprocess: preprocess.clone(),
                aggregation,
            };
            paths
                .par_iter()
                .map(|p| {
                    let id = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string());
                    features::extract_song(p, &id, "", &cfg)
                })
                .collect::<Result<_>>()?
        }
    };
    records
        .iter()
        .map(|rec| {
            let p = evaluation::predict_record(&model, rec, aggregation)?;
            Ok(Prediction {
                song_id: rec.song_id.clone(),
                label: model.classes[argmax(&p)].clone(),
                probabilities: model.classes.iter().cloned().zip(p).collect(),
            })
        })
        .collect()
}

pub fn render_predictions(preds: &[Prediction], format: OutputFormat) -> String {
    match format {
        OutputFormat::Text => preds
            .iter()
            .map(|p| {
                let probs: Vec<String> = p
                    .probabilities
                    .iter()
                    .map(|(c, v)| format!("{c}={v:.4}"))
                    .collect();
                format!("{}\t{}\t{}\n", p.song_id, p.label, probs.join(" "))
            })
            .collect(),
        OutputFormat::Json => {
            serde_json::to_string_pretty(preds).expect("predictions serialize") + "\n"
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if let Some(first) = preds.first() {
                let mut header = vec!["song_id".to_string(), "predicted".to_string()];
                header.extend(first.probabilities.iter().map(|(c, _)| c.clone()));
                w.write_record(&header).expect("in-memory write");
            }
            for p in preds {
                let mut row = vec![p.song_id.clone(), p.label.clone()];
                row.extend(p.probabilities.iter().map(|(_, v)| format!("{v}")));
                w.write_record(&row).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
    }
}

/// Generates a corpus from a spec file, or from the built-in preset.
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    crate::synth::generate(spec, out_dir)
}

fn preprocess_from(allow_mono: bool) -> PreprocessConfig {
    PreprocessConfig {
        allow_mono_upmix: allow_mono,
        ..PreprocessConfig::default()
    }
}

fn run_config(cli: &Cli) -> RunConfig {
    let base = RunConfig {
        jobs: cli.jobs,
        ..RunConfig::default()
    };
    match &cli.command {
        Command::Extract(a) => RunConfig {
            manifest: Some(a.manifest.clone()),
            aggregation: a.aggregation.into(),
            ..base
        },
        Command::Train(a) => RunConfig {
            dataset: Some(a.dataset.clone()),
            forest: a.forest.forest_config(),
            pca_components: a.forest.pca,
            ..base
        },
        Command::Evaluate(a) => RunConfig {
            dataset: Some(a.dataset.clone()),
            forest: a.forest.forest_config(),
            pca_components: a.forest.pca,
            protocol: match a.protocol {
                ProtocolArg::Cv5 => Protocol::Cv5,
                ProtocolArg::Split90 => Protocol::Split90,
            },
            seed: a.seed,
            stratify: !a.no_stratify,
            ..base
        },
        Command::Predict(a) => RunConfig {
            model: Some(a.model.clone()),
            dataset: a.dataset.clone(),
            ..base
        },
        Command::Synth(_) => base,
    }
}

fn dispatch(cli: &Cli, rc: &RunConfig, out: &mut Vec<u8>) -> Result<()> {
    use std::io::Write;
    let io = |e: std::io::Error| Error::io("<stdout>", e);
    match &cli.command {
        Command::Extract(a) => {
            let cfg = ExtractConfig {
                preprocess: PreprocessConfig {
                    silence_threshold_db: a.silence_db,
                    center_duration_s: a.center_s,
                    ..preprocess_from(a.allow_mono)
                },
                aggregation: rc.aggregation,
            };
            let s = cmd_extract(&a.manifest, &a.out, &cfg)?;
            writeln!(
                out,
                "extracted {} songs ({} failed) -> {}",
                s.written,
                s.failures.len(),
                a.out.display()
            )
            .map_err(io)
        }
        Command::Train(a) => {
            let s = cmd_train(&a.dataset, &a.model, &rc.forest, rc.pca_components)?;
            writeln!(out, "{}model: {}", s.render(), a.model.display()).map_err(io)
        }
        Command::Evaluate(a) => {
            let ev = cmd_evaluate(
                &a.dataset,
                rc.protocol,
                &rc.eval_config(),
                a.average.into(),
                a.out_dir.as_deref(),
                a.shuffle_labels,
            )?;
            out.write_all(render_evaluation(&ev, a.average.into()).as_bytes())
                .map_err(io)
        }
        Command::Predict(a) => {
            let input = match &a.dataset {
                Some(d) => PredictInput::Dataset(d),
                None => PredictInput::Audio(&a.audio),
            };
            let preds = cmd_predict(&a.model, input, &preprocess_from(a.allow_mono))?;
            out.write_all(render_predictions(&preds, a.format).as_bytes())
                .map_err(io)
        }
        Command::Synth(a) => {
            let spec = match &a.spec {
                Some(p) => SynthSpec::read(p)?,
                None => SynthSpec::three_archetypes(a.count, a.duration_s, a.seed),
            };
            if let Some(p) = &a.dump_spec {
                return std::fs::write(p, spec.to_toml()).map_err(|e| Error::io(p, e));
            }
            let manifest = cmd_synth(&spec, &a.out_dir)?;
            writeln!(
                out,
                "wrote {} songs, manifest {}",
                spec.total_songs(),
                manifest.display()
            )
            .map_err(io)
        }
    }
}

/// Validates the parsed flags and runs the subcommand inside a thread pool
/// sized by `--jobs`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> Result<()> {
    let rc = run_config(cli);
    rc.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = rc.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    pool.install(|| dispatch(cli, &rc, &mut buf))?;
    out.write_all(&buf).map_err(|e| Error::io("<stdout>", e))
}
