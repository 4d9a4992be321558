//! Random-forest classifier with entropy splits.
//!
//! Each tree is grown on a bootstrap sample drawn from its own ChaCha stream
//! (`random_state`, stream = tree index), so trees can be built in any order
//! or in parallel without changing the result. At every node a random subset
//! of the features is searched exhaustively over midpoints between
//! consecutive distinct values; the split with the highest information gain
//! wins, ties going to the lower feature index and then the lower threshold.
//! Leaves keep class frequencies and the forest averages them (soft voting).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Aggregation;
use crate::pca::PcaModel;

/// Gains closer than this are treated as equal.
const GAIN_TIE: f64 = 1e-12;

pub const MODEL_FORMAT: &str = "djmeter-forest";
pub const MODEL_VERSION: u32 = 1;

/// Shannon entropy in bits of a class histogram.
pub fn entropy(counts: &[usize]) -> Result<f64> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::Training("entropy of an empty histogram".into()));
    }
    Ok(entropy_of(counts, total))
}

#[inline]
fn entropy_of(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / t;
            -p * p.log2()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// floor(√d), at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (d as f64).sqrt().floor() as usize,
            MaxFeatures::All => d,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub random_state: u64,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 25,
            max_depth: 15,
            criterion: Criterion::Entropy,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            random_state: 49,
            min_samples_split: 2,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be >= 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if let MaxFeatures::Count(0) = self.max_features {
            return Err(Error::Config("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

/// A binary tree stored as parallel arrays in preorder. Internal nodes have
/// `feature >= 0`; samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Class frequencies at each leaf; empty for internal nodes.
    pub proba: Vec<Vec<f64>>,
}

impl DecisionTree {
    pub fn node_count(&self) -> usize {
        self.feature.len()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.feature[node] < 0
    }

    pub fn leaf_for(&self, x: &[f64]) -> usize {
        let mut node = 0;
        while !self.is_leaf(node) {
            let f = self.feature[node] as usize;
            node = if x[f] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            };
        }
        node
    }

    pub fn predict_proba(&self, x: &[f64]) -> &[f64] {
        &self.proba[self.leaf_for(x)]
    }

    /// Depth of the deepest leaf (the root has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, n: usize) -> usize {
            if t.is_leaf(n) {
                0
            } else {
                1 + walk(t, t.left[n]).max(walk(t, t.right[n]))
            }
        }
        walk(self, 0)
    }

    fn push_leaf(&mut self, proba: Vec<f64>) -> usize {
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.proba.push(proba);
        self.feature.len() - 1
    }
}

/// Every candidate evaluated at one split node, for inspection in tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitTrace {
    pub node: usize,
    pub chosen: (usize, f64, f64),
    /// (feature, threshold, gain)
    pub candidates: Vec<(usize, f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    tree: DecisionTree,
    trace: Option<Vec<SplitTrace>>,
}

/// Midpoint between two consecutive distinct values that still separates them.
#[inline]
pub fn split_midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) * 0.5;
    if t >= hi {
        lo
    } else {
        t
    }
}

impl TreeBuilder<'_> {
    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &s in samples {
            counts[self.y[s]] += 1;
        }
        counts
    }

    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let counts = self.class_counts(samples);
        let n = samples.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let make_leaf = |b: &mut Self| {
            let proba = counts.iter().map(|&c| c as f64 / n as f64).collect();
            b.tree.push_leaf(proba)
        };
        if depth >= self.cfg.max_depth || pure || n < self.cfg.min_samples_split.max(2) {
            return make_leaf(self);
        }
        let Some(split) = self.best_split(samples, &counts) else {
            return make_leaf(self);
        };

        let col = &self.columns[split.feature];
        // stable partition keeps the sample order deterministic
        let (mut l, mut r): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&s| col[s] <= split.threshold);
        let node = self.tree.push_leaf(Vec::new());
        self.tree.feature[node] = split.feature as i64;
        self.tree.threshold[node] = split.threshold;
        if let Some(last) = self.trace.as_mut().and_then(|t| t.last_mut()) {
            last.node = node;
        }
        let left = self.build(&mut l, depth + 1);
        let right = self.build(&mut r, depth + 1);
        self.tree.left[node] = left;
        self.tree.right[node] = right;
        node
    }

    /// Draws features in random order until `max_features` non-constant ones
    /// are found, then searches them in ascending index order.
    fn candidate_features(&mut self, samples: &[usize]) -> Vec<usize> {
        let d = self.columns.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        let mut chosen = Vec::with_capacity(self.max_features);
        for f in order {
            let col = &self.columns[f];
            let first = col[samples[0]];
            if samples.iter().any(|&s| col[s] != first) {
                chosen.push(f);
                if chosen.len() == self.max_features {
                    break;
                }
            }
        }
        chosen.sort_unstable();
        chosen
    }

    fn best_split(&mut self, samples: &[usize], counts: &[usize]) -> Option<Split> {
        let n = samples.len();
        let parent = entropy_of(counts, n);
        let features = self.candidate_features(samples);
        let mut best: Option<Split> = None;
        let mut evaluated = Vec::new();
        let mut sorted = samples.to_vec();
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];

        for f in features {
            let col = &self.columns[f];
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(counts);
            for i in 0..n - 1 {
                let s = sorted[i];
                left[self.y[s]] += 1;
                right[self.y[s]] -= 1;
                let (lo, hi) = (col[s], col[sorted[i + 1]]);
                if lo == hi {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let gain = parent
                    - (nl as f64 / n as f64) * entropy_of(&left, nl)
                    - (nr as f64 / n as f64) * entropy_of(&right, nr);
                let threshold = split_midpoint(lo, hi);
                if self.trace.is_some() {
                    evaluated.push((f, threshold, gain));
                }
                if best.is_none_or(|b| gain > b.gain + GAIN_TIE) {
                    best = Some(Split {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        if let (Some(trace), Some(b)) = (self.trace.as_mut(), best) {
            trace.push(SplitTrace {
                node: usize::MAX,
                chosen: (b.feature, b.threshold, b.gain),
                candidates: evaluated,
            });
        }
        best
    }
}

fn to_columns(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = x.first().map_or(0, Vec::len);
    (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect()
}

/// Grows one tree. `stream` selects the tree's random stream.
fn grow_tree(
    columns: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
    stream: u64,
    traced: bool,
) -> (DecisionTree, Option<Vec<SplitTrace>>) {
    let n = y.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_state);
    rng.set_stream(stream);
    let mut samples: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut builder = TreeBuilder {
        columns,
        y,
        n_classes,
        max_features: cfg.max_features.resolve(columns.len()),
        cfg,
        rng,
        tree: DecisionTree {
            feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            proba: Vec::new(),
        },
        trace: traced.then(Vec::new),
    };
    builder.build(&mut samples, 0);
    (builder.tree, builder.trace)
}

/// Fitted ensemble plus the preprocessing needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format: String,
    pub version: u32,
    /// Fingerprint of the input feature layout.
    pub schema_hash: String,
    pub aggregation: Option<Aggregation>,
    pub classes: Vec<String>,
    pub config: ForestConfig,
    /// Length of raw input vectors (before PCA).
    pub n_inputs: usize,
    pub pca: Option<PcaModel>,
    pub trees: Vec<DecisionTree>,
}

fn check_inputs(x: &[Vec<f64>], y: &[String]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Training(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Training("need at least 2 samples".into()));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::Training("rows have no features".into()));
    }
    for r in x {
        if r.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite feature value".into()));
        }
    }
    Ok(d)
}

impl ForestModel {
    /// Fits a forest; classes are the sorted distinct labels of `y`.
    pub fn fit(x: &[Vec<f64>], y: &[String], cfg: &ForestConfig) -> Result<Self> {
        let mut classes: Vec<String> = y.to_vec();
        classes.sort();
        classes.dedup();
        Self::fit_with_classes(x, y, &classes, cfg, None)
    }

    /// Fits with an explicit class order and optional PCA front end.
    pub fn fit_with_classes(
        x: &[Vec<f64>],
        y: &[String],
        classes: &[String],
        cfg: &ForestConfig,
        pca_components: Option<usize>,
    ) -> Result<Self> {
        cfg.validate()?;
        let n_inputs = check_inputs(x, y)?;
        let mut seen = std::collections::HashSet::new();
        if classes.is_empty() || !classes.iter().all(|c| seen.insert(c)) {
            return Err(Error::Training("class list must be non-empty and unique".into()));
        }
        let yi = y
            .iter()
            .map(|l| {
                classes
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| Error::UnknownLabel(l.clone()))
            })
            .collect::<Result<Vec<usize>>>()?;
        let distinct: std::collections::HashSet<_> = yi.iter().collect();
        if distinct.len() < 2 {
            return Err(Error::Training("need at least 2 distinct labels".into()));
        }

        let pca = pca_components.map(|k| PcaModel::fit(x, k)).transpose()?;
        let inputs: Vec<Vec<f64>> = match &pca {
            Some(p) => x.iter().map(|r| p.transform(r)).collect::<Result<_>>()?,
            None => x.to_vec(),
        };
        let columns = to_columns(&inputs);
        let trees = (0..cfg.n_estimators)
            .into_par_iter()
            .map(|t| grow_tree(&columns, &yi, classes.len(), cfg, t as u64, false).0)
            .collect();
        Ok(Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            schema_hash: String::new(),
            aggregation: None,
            classes: classes.to_vec(),
            config: cfg.clone(),
            n_inputs,
            pca,
            trees,
        })
    }

    /// Tags the model with the dataset layout it was trained on.
    pub fn with_schema(mut self, aggregation: Aggregation) -> Self {
        self.schema_hash = aggregation.schema_hash();
        self.aggregation = Some(aggregation);
        self
    }

    /// Number of features the trees split on (PCA scores when PCA is on).
    pub fn n_tree_features(&self) -> usize {
        self.pca.as_ref().map_or(self.n_inputs, PcaModel::k)
    }

    pub fn resolved_max_features(&self) -> usize {
        self.config.max_features.resolve(self.n_tree_features())
    }

    fn tree_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_inputs {
            return Err(Error::LengthMismatch {
                expected: self.n_inputs,
                actual: x.len(),
            });
        }
        match &self.pca {
            Some(p) => p.transform(x),
            None => Ok(x.to_vec()),
        }
    }

    /// Mean of the trees' leaf distributions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let input = self.tree_input(x)?;
        let mut acc = vec![0.0; self.classes.len()];
        for t in &self.trees {
            for (a, p) in acc.iter_mut().zip(t.predict_proba(&input)) {
                *a += p;
            }
        }
        let m = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        Ok(acc)
    }

    /// Index of the most probable class; ties go to the lowest index.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        let i = self.predict_index(x)?;
        Ok(&self.classes[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))?;
        if m.format != MODEL_FORMAT || m.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format {} v{}",
                m.format, m.version
            )));
        }
        let d = m.n_tree_features();
        let bad_feature = m
            .trees
            .iter()
            .flat_map(|t| t.feature.iter())
            .any(|&f| f >= d as i64);
        if m.classes.is_empty() || bad_feature {
            return Err(Error::Format("model references invalid features or classes".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Grows a single tree with split tracing enabled. Exposed for verification.
pub fn fit_tree_traced(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
    stream: u64,
) -> (DecisionTree, Vec<SplitTrace>) {
    let columns = to_columns(x);
    let (tree, trace) = grow_tree(&columns, y, n_classes, cfg, stream, true);
    (tree, trace.unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn blobs(n_per: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, center) in [(-3.0, -3.0), (3.0, 3.0)].iter().enumerate() {
            for _ in 0..n_per {
                x.push(vec![
                    center.0 + noise.sample(&mut rng),
                    center.1 + noise.sample(&mut rng),
                ]);
                y.push(if c == 0 { "A" } else { "B" }.to_string());
            }
        }
        (x, y)
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(entropy(&[5, 5]).unwrap(), 1.0);
        assert_eq!(entropy(&[10, 0]).unwrap(), 0.0);
        assert!((entropy(&[8, 4, 4]).unwrap() - 1.5).abs() < 1e-12);
        assert!(entropy(&[0, 0]).is_err());
    }

    #[test]
    fn max_features_rules() {
        assert_eq!(MaxFeatures::Sqrt.resolve(292), 17);
        assert_eq!(MaxFeatures::Sqrt.resolve(146), 12);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::All.resolve(9), 9);
        assert_eq!(MaxFeatures::Count(50).resolve(9), 9);
    }

    #[test]
    fn separable_blobs_train_perfectly() {
        let (x, y) = blobs(50, 1);
        let m = ForestModel::fit(&x, &y, &ForestConfig::default()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), yi);
        }
        for t in &m.trees {
            assert!(t.depth() <= 15);
            for (i, p) in t.proba.iter().enumerate() {
                if t.is_leaf(i) {
                    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn conflicting_duplicates_tie_to_first_class() {
        let x = vec![vec![1.0, 2.0]; 4];
        let y = labels(&["A", "B", "A", "B"]);
        let cfg = ForestConfig {
            bootstrap: false,
            ..Default::default()
        };
        let m = ForestModel::fit(&x, &y, &cfg).unwrap();
        assert_eq!(m.predict_proba(&x[0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(m.predict(&x[0]).unwrap(), "A");
    }

    #[test]
    fn fit_errors() {
        let (x, _) = blobs(3, 2);
        let one_class = vec!["A".to_string(); x.len()];
        assert!(ForestModel::fit(&x, &one_class, &ForestConfig::default()).is_err());
        let mut bad = x.clone();
        bad[0][1] = f64::NAN;
        let y = labels(&["A", "A", "A", "B", "B", "B"]);
        assert!(ForestModel::fit(&bad, &y, &ForestConfig::default()).is_err());
        assert!(ForestModel::fit(&x[..1], &y[..1], &ForestConfig::default()).is_err());
        let cfg = ForestConfig {
            n_estimators: 0,
            ..Default::default()
        };
        assert!(ForestModel::fit(&x, &y, &cfg).is_err());
    }

    #[test]
    fn schema_mismatch_on_predict() {
        let (x, y) = blobs(5, 3);
        let m = ForestModel::fit(&x, &y, &ForestConfig::default()).unwrap();
        assert!(matches!(
            m.predict_proba(&[1.0, 2.0, 3.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn averaging_and_argmax_consistency() {
        let (x, y) = blobs(20, 4);
        let m = ForestModel::fit(&x, &y, &ForestConfig::default()).unwrap();
        for xi in &x {
            let p = m.predict_proba(xi).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(m.predict_index(xi).unwrap(), argmax(&p));
        }

        // two hand-built trees voting for opposite classes
        let leaf = |p: Vec<f64>| DecisionTree {
            feature: vec![-1],
            threshold: vec![0.0],
            left: vec![0],
            right: vec![0],
            proba: vec![p],
        };
        let mut two = m.clone();
        two.trees = vec![leaf(vec![1.0, 0.0]), leaf(vec![0.0, 1.0])];
        assert_eq!(two.predict_proba(&x[0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(two.predict(&x[0]).unwrap(), "A");
        let mut one = m.clone();
        one.trees = vec![leaf(vec![0.0, 1.0])];
        assert_eq!(one.predict_proba(&x[0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(one.predict(&x[0]).unwrap(), "B");
    }

    #[test]
    fn chosen_split_dominates_candidates() {
        let (x, y) = blobs(30, 5);
        let yi: Vec<usize> = y.iter().map(|l| (l == "B") as usize).collect();
        let mut x = x;
        // extra noisy columns so several features compete
        for (i, r) in x.iter_mut().enumerate() {
            r.push(((i * 37) % 11) as f64);
            r.push(((i * 53) % 7) as f64);
        }
        let (tree, trace) = fit_tree_traced(&x, &yi, 2, &ForestConfig::default(), 3);
        assert!(!trace.is_empty());
        for t in &trace {
            assert!(t.node < tree.node_count());
            assert!(t.candidates.iter().all(|c| c.2 <= t.chosen.2 + GAIN_TIE));
            assert_eq!(tree.feature[t.node], t.chosen.0 as i64);
            assert_eq!(tree.threshold[t.node], t.chosen.1);
        }
    }

    #[test]
    fn monotone_transform_keeps_predictions() {
        let (x, y) = blobs(25, 6);
        let warp = |v: f64| v.powi(3) + 5.0 * v;
        let xt: Vec<Vec<f64>> = x.iter().map(|r| vec![warp(r[0]), r[1]]).collect();
        let cfg = ForestConfig {
            max_features: MaxFeatures::Count(1),
            ..Default::default()
        };
        let a = ForestModel::fit(&x, &y, &cfg).unwrap();
        let b = ForestModel::fit(&xt, &y, &cfg).unwrap();
        // midpoints move under the warp, so only training points are comparable
        for (p, pt) in x.iter().zip(&xt) {
            assert_eq!(a.predict_proba(p).unwrap(), b.predict_proba(pt).unwrap());
        }
    }

    #[test]
    fn model_json_round_trip() {
        let (x, y) = blobs(10, 7);
        let m = ForestModel::fit(&x, &y, &ForestConfig::default())
            .unwrap()
            .with_schema(Aggregation::MeanStd);
        let back = ForestModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), m.to_json());
        let broken = m.to_json().replace(MODEL_FORMAT, "other");
        assert!(ForestModel::from_json(&broken).is_err());
    }

    #[test]
    fn pca_front_end() {
        let (x, y) = blobs(20, 8);
        let classes = labels(&["A", "B"]);
        let m = ForestModel::fit_with_classes(&x, &y, &classes, &ForestConfig::default(), Some(1))
            .unwrap();
        assert_eq!(m.n_tree_features(), 1);
        assert_eq!(m.resolved_max_features(), 1);
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, yi)| m.predict(xi).unwrap() == yi.as_str())
            .count();
        assert_eq!(correct, x.len());
    }
}
