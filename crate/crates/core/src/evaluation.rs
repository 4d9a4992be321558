//! Train/test splitting, k-fold cross-validation, confusion matrices and
//! per-class precision / recall / F1 reports.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Aggregation, Dataset, SongRecord};
use crate::forest::{argmax, ForestConfig, ForestModel};

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: &[String]) -> Self {
        let k = classes.len();
        Self {
            classes: classes.to_vec(),
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(classes: &[String], counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = classes.len();
        if counts.len() != k || counts.iter().any(|r| r.len() != k) {
            return Err(Error::LengthMismatch {
                expected: k,
                actual: counts.len(),
            });
        }
        Ok(Self {
            classes: classes.to_vec(),
            counts,
        })
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    /// Row sum: number of true instances of class `i`.
    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    /// Column sum: number of predictions of class `i`.
    pub fn predicted(&self, i: usize) -> u64 {
        self.counts.iter().map(|r| r[i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Config("confusion matrices use different classes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Reorders classes; `order[i]` is the old index placed at position `i`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            classes: order.iter().map(|&i| self.classes[i].clone()).collect(),
            counts: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        }
    }

    /// Labeled grid, actual classes down the side.
    pub fn render_grid(&self) -> String {
        let w = self
            .classes
            .iter()
            .map(|c| c.chars().count())
            .chain([13])
            .max()
            .unwrap_or(13);
        let cw = self.classes.iter().map(|c| c.chars().count()).max().unwrap_or(1).max(5);
        let mut s = format!("{:<w$}", "actual\\pred");
        for c in &self.classes {
            let _ = write!(s, " {c:>cw$}");
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            let _ = write!(s, "{c:<w$}");
            for v in row {
                let _ = write!(s, " {v:>cw$}");
            }
            s.push('\n');
        }
        s
    }
}

/// Counts `(actual, predicted)` pairs over `classes`.
pub fn confusion<A: AsRef<str>, P: AsRef<str>>(
    actual: &[A],
    predicted: &[P],
    classes: &[String],
) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let index = |l: &str| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::UnknownLabel(l.to_string()))
    };
    let mut cm = ConfusionMatrix::zeros(classes);
    for (a, p) in actual.iter().zip(predicted) {
        let (i, j) = (index(a.as_ref())?, index(p.as_ref())?);
        cm.counts[i][j] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Unweighted mean over classes.
    #[default]
    Macro,
    /// Pooled counts; equals accuracy for single-label data.
    Micro,
    /// Mean over classes weighted by support.
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub total: u64,
    pub macro_avg: Averages,
    pub micro_avg: Averages,
    pub weighted_avg: Averages,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class and averaged metrics. Empty columns give precision 0 and
/// empty rows give recall 0.
pub fn report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Config("confusion matrix is empty".into()));
    }
    let per_class: Vec<ClassMetrics> = (0..cm.k())
        .map(|i| {
            let tp = cm.counts[i][i] as f64;
            let col = cm.predicted(i);
            let row = cm.support(i);
            let precision = if col == 0 { 0.0 } else { tp / col as f64 };
            let recall = if row == 0 { 0.0 } else { tp / row as f64 };
            ClassMetrics {
                label: cm.classes[i].clone(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: row,
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let tf = total as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / tf
    };
    let accuracy = cm.trace() as f64 / tf;
    Ok(ClassReport {
        macro_avg: Averages {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        },
        micro_avg: Averages {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
        },
        weighted_avg: Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
        },
        per_class,
        accuracy,
        total,
    })
}

impl ClassReport {
    pub fn average(&self, avg: Averaging) -> Averages {
        match avg {
            Averaging::Macro => self.macro_avg,
            Averaging::Micro => self.micro_avg,
            Averaging::Weighted => self.weighted_avg,
        }
    }

    pub fn render_text(&self, avg: Averaging) -> String {
        let w = self
            .per_class
            .iter()
            .map(|m| m.label.chars().count())
            .max()
            .unwrap_or(0)
            .max(12);
        let mut s = format!(
            "{:<w$} {:>9} {:>9} {:>9} {:>9}\n",
            "", "precision", "recall", "f1-score", "support"
        );
        for m in &self.per_class {
            let _ = writeln!(
                s,
                "{:<w$} {:>9.3} {:>9.3} {:>9.3} {:>9}",
                m.label, m.precision, m.recall, m.f1, m.support
            );
        }
        let a = self.average(avg);
        let name = match avg {
            Averaging::Macro => "macro avg",
            Averaging::Micro => "micro avg",
            Averaging::Weighted => "weighted avg",
        };
        let _ = writeln!(s, "\n{:<w$} {:>9} {:>9} {:>9.3} {:>9}", "accuracy", "", "", self.accuracy, self.total);
        let _ = writeln!(
            s,
            "{:<w$} {:>9.3} {:>9.3} {:>9.3} {:>9}",
            name, a.precision, a.recall, a.f1, self.total
        );
        s
    }

    /// `key=value` lines for machine consumption.
    pub fn to_key_values(&self) -> String {
        let mut s = format!("accuracy={:.6}\ntotal={}\n", self.accuracy, self.total);
        for (name, a) in [
            ("macro", self.macro_avg),
            ("micro", self.micro_avg),
            ("weighted", self.weighted_avg),
        ] {
            let _ = writeln!(s, "{name}.precision={:.6}", a.precision);
            let _ = writeln!(s, "{name}.recall={:.6}", a.recall);
            let _ = writeln!(s, "{name}.f1={:.6}", a.f1);
        }
        for m in &self.per_class {
            let _ = writeln!(s, "class.{}.precision={:.6}", m.label, m.precision);
            let _ = writeln!(s, "class.{}.recall={:.6}", m.label, m.recall);
            let _ = writeln!(s, "class.{}.f1={:.6}", m.label, m.f1);
            let _ = writeln!(s, "class.{}.support={}", m.label, m.support);
        }
        s
    }
}

/// Size of the test partition: ceil(n · (1 − train_fraction)).
pub fn test_size(n: usize, train_fraction: f64) -> usize {
    ((n as f64) * (1.0 - train_fraction) - 1e-9).ceil().max(0.0) as usize
}

/// Seeded train/test split of `labels.len()` items, returned as sorted index
/// lists. With `stratify`, each class contributes to the test set in
/// proportion to its size (largest-remainder rounding).
pub fn split<L: AsRef<str>>(
    labels: &[L],
    train_fraction: f64,
    seed: u64,
    stratify: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::Infeasible(format!("cannot split {n} records")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} not in (0, 1)"
        )));
    }
    let n_test = test_size(n, train_fraction);
    if n_test == 0 || n_test >= n {
        return Err(Error::Infeasible(format!(
            "fraction {train_fraction} of {n} records leaves an empty partition"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test = Vec::with_capacity(n_test);
    if stratify {
        let mut classes: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        classes.sort_unstable();
        classes.dedup();
        let groups: Vec<Vec<usize>> = classes
            .iter()
            .map(|c| (0..n).filter(|&i| labels[i].as_ref() == *c).collect())
            .collect();
        let exact: Vec<f64> = groups
            .iter()
            .map(|g| g.len() as f64 * n_test as f64 / n as f64)
            .collect();
        let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
        let mut by_remainder: Vec<usize> = (0..groups.len()).collect();
        by_remainder.sort_by(|&a, &b| {
            (exact[b] - exact[b].floor())
                .total_cmp(&(exact[a] - exact[a].floor()))
                .then(a.cmp(&b))
        });
        let mut missing = n_test - quota.iter().sum::<usize>();
        for &g in by_remainder.iter().cycle().take(groups.len() * 2) {
            if missing == 0 {
                break;
            }
            if quota[g] < groups[g].len() {
                quota[g] += 1;
                missing -= 1;
            }
        }
        for (mut g, q) in groups.into_iter().zip(quota) {
            g.shuffle(&mut rng);
            test.extend_from_slice(&g[..q]);
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        test.extend_from_slice(&order[..n_test]);
    }
    test.sort_unstable();
    let train = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
    Ok((train, test))
}

/// Seeded partition of `n` items into `k` folds whose sizes differ by at most one.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k = {k}; need at least 2 folds")));
    }
    if k > n {
        return Err(Error::Infeasible(format!("{k} folds for {n} records")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Like [`kfold`], but each class is shuffled separately and dealt
/// round-robin so every fold holds each class within one song of its share.
pub fn stratified_kfold<L: AsRef<str>>(labels: &[L], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = labels.len();
    if k < 2 {
        return Err(Error::Config(format!("k = {k}; need at least 2 folds")));
    }
    if k > n {
        return Err(Error::Infeasible(format!("{k} folds for {n} records")));
    }
    let mut classes: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0;
    for c in classes {
        let mut g: Vec<usize> = (0..n).filter(|&i| labels[i].as_ref() == c).collect();
        g.shuffle(&mut rng);
        for i in g {
            folds[pos % k].push(i);
            pos += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub forest: ForestConfig,
    pub pca_components: Option<usize>,
    pub seed: u64,
    pub stratify: bool,
    pub train_fraction: f64,
    pub folds: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            forest: ForestConfig::default(),
            pca_components: None,
            seed: 49,
            stratify: true,
            train_fraction: 0.9,
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Cv5,
    Split90,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Cv5 => "cv5",
            Protocol::Split90 => "split90",
        }
    }
}

/// Training rows and labels for the given songs.
pub fn training_rows(ds: &Dataset, songs: &[usize]) -> (Vec<Vec<f64>>, Vec<String>) {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &i in songs {
        let rec = &ds.records[i];
        for row in rec.rows(ds.aggregation) {
            x.push(row.to_vec());
            y.push(rec.label.clone());
        }
    }
    (x, y)
}

/// Class distribution for one song. Per-window records report the fraction
/// of windows voting for each class.
pub fn predict_record(
    model: &ForestModel,
    rec: &SongRecord,
    aggregation: Aggregation,
) -> Result<Vec<f64>> {
    match aggregation {
        Aggregation::MeanStd => model.predict_proba(&rec.features),
        Aggregation::PerWindow => {
            let mut votes = vec![0.0; model.classes.len()];
            let mut n = 0usize;
            for row in rec.rows(aggregation) {
                votes[model.predict_index(row)?] += 1.0;
                n += 1;
            }
            if n == 0 {
                return Err(Error::Format(format!("song {} has no windows", rec.song_id)));
            }
            votes.iter_mut().for_each(|v| *v /= n as f64);
            Ok(votes)
        }
    }
}

pub fn song_proba(model: &ForestModel, ds: &Dataset, song: usize) -> Result<Vec<f64>> {
    predict_record(model, &ds.records[song], ds.aggregation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub protocol: Protocol,
    pub confusion: ConfusionMatrix,
    pub report: ClassReport,
    /// One report per fold for cross-validation.
    pub folds: Vec<ClassReport>,
    pub mean_accuracy: f64,
}

fn train_and_score(
    ds: &Dataset,
    classes: &[String],
    train: &[usize],
    test: &[usize],
    cfg: &EvalConfig,
) -> Result<ConfusionMatrix> {
    let (x, y) = training_rows(ds, train);
    let model = ForestModel::fit_with_classes(&x, &y, classes, &cfg.forest, cfg.pca_components)?;
    let mut actual = Vec::with_capacity(test.len());
    let mut predicted = Vec::with_capacity(test.len());
    for &i in test {
        let p = song_proba(&model, ds, i)?;
        actual.push(ds.records[i].label.as_str());
        predicted.push(classes[argmax(&p)].as_str());
    }
    confusion(&actual, &predicted, classes)
}

/// Trains on `k − 1` folds and scores the held-out fold, for every fold.
pub fn cross_validate(ds: &Dataset, k: usize, cfg: &EvalConfig) -> Result<Evaluation> {
    let classes = ds.classes();
    let folds = if cfg.stratify {
        let labels: Vec<&str> = ds.records.iter().map(|r| r.label.as_str()).collect();
        stratified_kfold(&labels, k, cfg.seed)?
    } else {
        kfold(ds.records.len(), k, cfg.seed)?
    };
    let per_fold = folds
        .iter()
        .map(|test| {
            let train: Vec<usize> = (0..ds.records.len())
                .filter(|i| test.binary_search(i).is_err())
                .collect();
            train_and_score(ds, &classes, &train, test, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pooled = ConfusionMatrix::zeros(&classes);
    let mut reports = Vec::with_capacity(k);
    for cm in &per_fold {
        pooled.add(cm)?;
        reports.push(report(cm)?);
    }
    let mean_accuracy = reports.iter().map(|r| r.accuracy).sum::<f64>() / k as f64;
    Ok(Evaluation {
        protocol: Protocol::Cv5,
        report: report(&pooled)?,
        confusion: pooled,
        folds: reports,
        mean_accuracy,
    })
}

/// Single seeded train/test split.
pub fn holdout(ds: &Dataset, cfg: &EvalConfig) -> Result<Evaluation> {
    let classes = ds.classes();
    let labels: Vec<&str> = ds.records.iter().map(|r| r.label.as_str()).collect();
    let (train, test) = split(&labels, cfg.train_fraction, cfg.seed, cfg.stratify)?;
    let cm = train_and_score(ds, &classes, &train, &test, cfg)?;
    let rep = report(&cm)?;
    Ok(Evaluation {
        protocol: Protocol::Split90,
        mean_accuracy: rep.accuracy,
        report: rep,
        confusion: cm,
        folds: Vec::new(),
    })
}

/// Chance-level control: mean cross-validated accuracy over `repeats`
/// independent label permutations.
pub fn shuffled_label_accuracy(ds: &Dataset, k: usize, repeats: usize, cfg: &EvalConfig) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::Config("need at least one permutation".into()));
    }
    let mut total = 0.0;
    for r in 0..repeats as u64 {
        let shuffled = shuffle_labels(ds, cfg.seed.wrapping_add(0x5eed + r));
        total += cross_validate(&shuffled, k, cfg)?.mean_accuracy;
    }
    Ok(total / repeats as f64)
}

/// Copy of the dataset with labels randomly permuted across songs.
pub fn shuffle_labels(ds: &Dataset, seed: u64) -> Dataset {
    let mut labels: Vec<String> = ds.records.iter().map(|r| r.label.clone()).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = ds.clone();
    for (r, l) in out.records.iter_mut().zip(labels) {
        r.label = l;
    }
    out
}
