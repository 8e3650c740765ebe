//! A small detector: hashed character n-grams fed to a two-class logistic
//! regression trained with seeded SGD, plus accuracy/macro-F1 evaluation
//! and the helpers that compose training sets from claims and generated
//! data.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetRecord, Label};
use crate::seed;

/// Features hash into `2^HASH_BITS` buckets.
pub const HASH_BITS: u32 = 18;
pub const HASH_BUCKETS: usize = 1 << HASH_BITS;
pub const MAX_NGRAM: usize = 6;

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DetectError {
    #[error("n-gram range ({0}, {1}) must satisfy 1 <= low <= high <= 6")]
    BadNgramRange(usize, usize),
    #[error("training data has {0} examples, need at least 2")]
    TooFew(usize),
    #[error("training data must contain exactly two classes, found {0:?}")]
    ClassCount(Vec<String>),
    #[error("lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    Empty,
    #[error("label `{0}` is not a declared class")]
    UnknownClass(String),
    #[error("claim text is empty")]
    EmptyText,
    #[error("unknown claim label `{0}`")]
    BadClaimLabel(String),
    #[error("the {0} setting requires gold training claims")]
    MissingGold(&'static str),
    #[error("the zero_shot setting takes no gold training claims")]
    UnexpectedGold,
    #[error("factor must be at least 1")]
    ZeroFactor,
    #[error("invalid training parameters: {0}")]
    BadParams(&'static str),
    #[error("invalid model: {0}")]
    BadModel(String),
}

/// Sparse n-gram counts, sorted by bucket index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    entries: Vec<(u32, u32)>,
}

impl FeatureVector {
    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn get(&self, index: u32) -> u32 {
        self.entries.binary_search_by_key(&index, |e| e.0).map_or(0, |i| self.entries[i].1)
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| u64::from(e.1)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Counts scaled to unit L2 norm.
    fn normalized(&self) -> Vec<(u32, f64)> {
        let norm = libm::sqrt(self.entries.iter().map(|e| f64::from(e.1) * f64::from(e.1)).sum());
        self.entries.iter().map(|&(i, c)| (i, f64::from(c) / norm)).collect()
    }
}

/// Bucket of one n-gram: FNV-1a over its UTF-8 bytes, masked to the low
/// [`HASH_BITS`] bits.
pub fn ngram_bucket(gram: &str) -> u32 {
    (seed::fnv1a(gram.as_bytes()) & (HASH_BUCKETS as u64 - 1)) as u32
}

fn check_range((lo, hi): (usize, usize)) -> Result<(), DetectError> {
    if lo == 0 || lo > hi || hi > MAX_NGRAM {
        return Err(DetectError::BadNgramRange(lo, hi));
    }
    Ok(())
}

/// Counts every character n-gram of `text` for `n` in `lo..=hi`.
pub fn featurize(text: &str, n_range: (usize, usize)) -> Result<FeatureVector, DetectError> {
    check_range(n_range)?;
    let bounds: Vec<usize> = text.char_indices().map(|(i, _)| i).chain(core::iter::once(text.len())).collect();
    let chars = bounds.len() - 1;
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for n in n_range.0..=n_range.1 {
        for start in 0..chars.saturating_sub(n - 1) {
            *counts.entry(ngram_bucket(&text[bounds[start]..bounds[start + n]])).or_insert(0) += 1;
        }
    }
    Ok(FeatureVector { entries: counts.into_iter().collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainParams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub n_range: (usize, usize),
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { epochs: 10, learning_rate: 0.5, seed: 0, n_range: (2, 4) }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<(), DetectError> {
        check_range(self.n_range)?;
        if self.epochs == 0 {
            return Err(DetectError::BadParams("epochs must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(DetectError::BadParams("learning rate must be positive and finite"));
        }
        Ok(())
    }
}

/// Two-class softmax regression over hashed n-grams. Inputs are n-gram
/// counts scaled to unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct LinearModel {
    classes: [String; 2],
    params: TrainParams,
    bias: [f64; 2],
    weights: [Vec<f64>; 2],
    loss_history: Vec<f64>,
}

/// On-disk form: only non-zero weight rows are stored.
#[derive(Serialize, Deserialize)]
struct ModelRepr {
    format_version: u32,
    classes: [String; 2],
    params: TrainParams,
    bias: [f64; 2],
    weights: Vec<(u32, f64, f64)>,
    loss_history: Vec<f64>,
}

impl From<LinearModel> for ModelRepr {
    fn from(m: LinearModel) -> Self {
        let weights = (0..HASH_BUCKETS)
            .filter(|&i| m.weights[0][i] != 0.0 || m.weights[1][i] != 0.0)
            .map(|i| (i as u32, m.weights[0][i], m.weights[1][i]))
            .collect();
        Self {
            format_version: MODEL_FORMAT_VERSION,
            classes: m.classes,
            params: m.params,
            bias: m.bias,
            weights,
            loss_history: m.loss_history,
        }
    }
}

impl TryFrom<ModelRepr> for LinearModel {
    type Error = DetectError;

    fn try_from(r: ModelRepr) -> Result<Self, DetectError> {
        if r.format_version != MODEL_FORMAT_VERSION {
            return Err(DetectError::BadModel(format!("unsupported format version {}", r.format_version)));
        }
        r.params.validate()?;
        if r.classes[0] == r.classes[1] {
            return Err(DetectError::BadModel("class names must differ".into()));
        }
        let mut m = LinearModel::zeroed(r.classes, r.params);
        m.bias = r.bias;
        m.loss_history = r.loss_history;
        for (i, a, b) in r.weights {
            let slot = i as usize;
            if slot >= HASH_BUCKETS {
                return Err(DetectError::BadModel(format!("feature index {i} out of range")));
            }
            m.weights[0][slot] = a;
            m.weights[1][slot] = b;
        }
        if !m.is_finite() {
            return Err(DetectError::BadModel("non-finite weight".into()));
        }
        Ok(m)
    }
}

/// Gradient of the mean loss. Weight rows absent from the map are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub bias: [f64; 2],
    pub weights: BTreeMap<u32, [f64; 2]>,
}

fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = libm::exp(z[0] - m);
    let e1 = libm::exp(z[1] - m);
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

fn log_softmax2(z: [f64; 2], y: usize) -> f64 {
    let m = z[0].max(z[1]);
    z[y] - m - libm::log(libm::exp(z[0] - m) + libm::exp(z[1] - m))
}

/// Normalized sparse features and a class index.
type Example = (Vec<(u32, f64)>, usize);

impl LinearModel {
    fn zeroed(classes: [String; 2], params: TrainParams) -> Self {
        Self {
            classes,
            params,
            bias: [0.0; 2],
            weights: [vec![0.0; HASH_BUCKETS], vec![0.0; HASH_BUCKETS]],
            loss_history: Vec::new(),
        }
    }

    pub fn classes(&self) -> [&str; 2] {
        [&self.classes[0], &self.classes[1]]
    }

    pub fn params(&self) -> &TrainParams {
        &self.params
    }

    /// Mean training loss after each epoch.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn bias(&self) -> [f64; 2] {
        self.bias
    }

    pub fn weight(&self, class: usize, index: u32) -> f64 {
        self.weights[class][index as usize]
    }

    pub fn set_weight(&mut self, class: usize, index: u32, value: f64) {
        self.weights[class][index as usize] = value;
    }

    pub fn set_bias(&mut self, class: usize, value: f64) {
        self.bias[class] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.bias.iter().chain(&self.weights[0]).chain(&self.weights[1]).all(|w| w.is_finite())
    }

    fn scores(&self, x: &[(u32, f64)]) -> [f64; 2] {
        let mut z = self.bias;
        for &(i, v) in x {
            z[0] += self.weights[0][i as usize] * v;
            z[1] += self.weights[1][i as usize] * v;
        }
        z
    }

    fn inputs(&self, text: &str) -> Vec<(u32, f64)> {
        featurize(text, self.params.n_range).map(|f| f.normalized()).unwrap_or_default()
    }

    pub fn probabilities(&self, text: &str) -> [f64; 2] {
        softmax2(self.scores(&self.inputs(text)))
    }

    /// Predicted class index; ties go to class 0.
    pub fn predict_index(&self, text: &str) -> usize {
        let z = self.scores(&self.inputs(text));
        usize::from(z[1] > z[0])
    }

    pub fn predict(&self, text: &str) -> &str {
        &self.classes[self.predict_index(text)]
    }

    fn encode(&self, texts: &[&str], labels: &[&str]) -> Result<Vec<Example>, DetectError> {
        if texts.len() != labels.len() {
            return Err(DetectError::LengthMismatch(texts.len(), labels.len()));
        }
        texts
            .iter()
            .zip(labels)
            .map(|(t, l)| {
                let y = self.classes.iter().position(|c| c == l).ok_or_else(|| DetectError::UnknownClass(l.to_string()))?;
                Ok((self.inputs(t), y))
            })
            .collect()
    }

    /// Mean negative log-likelihood over a labeled set.
    pub fn loss(&self, texts: &[&str], labels: &[&str]) -> Result<f64, DetectError> {
        let data = self.encode(texts, labels)?;
        Ok(self.mean_loss(&data))
    }

    fn mean_loss(&self, data: &[(Vec<(u32, f64)>, usize)]) -> f64 {
        let total: f64 = data.iter().map(|(x, y)| -log_softmax2(self.scores(x), *y)).sum();
        total / data.len() as f64
    }

    /// Gradient of [`LinearModel::loss`] with respect to every parameter.
    pub fn gradient(&self, texts: &[&str], labels: &[&str]) -> Result<Gradient, DetectError> {
        let data = self.encode(texts, labels)?;
        let n = data.len() as f64;
        let mut g = Gradient { bias: [0.0; 2], weights: BTreeMap::new() };
        for (x, y) in &data {
            let p = softmax2(self.scores(x));
            let d = [p[0] - f64::from(*y == 0), p[1] - f64::from(*y == 1)];
            for (b, dc) in g.bias.iter_mut().zip(d) {
                *b += dc / n;
            }
            for &(i, v) in x {
                let row = g.weights.entry(i).or_insert([0.0; 2]);
                row[0] += d[0] * v / n;
                row[1] += d[1] * v / n;
            }
        }
        Ok(g)
    }
}

/// Trains on parallel `texts`/`labels`. The two distinct label strings,
/// sorted, become class 0 and class 1. Each epoch visits the examples in a
/// fresh seeded order and takes one SGD step per example.
pub fn train_linear(texts: &[&str], labels: &[&str], params: TrainParams) -> Result<LinearModel, DetectError> {
    params.validate()?;
    if texts.len() != labels.len() {
        return Err(DetectError::LengthMismatch(texts.len(), labels.len()));
    }
    if texts.len() < 2 {
        return Err(DetectError::TooFew(texts.len()));
    }
    let classes: BTreeSet<&str> = labels.iter().copied().collect();
    if classes.len() != 2 {
        return Err(DetectError::ClassCount(classes.into_iter().map(String::from).collect()));
    }
    let mut it = classes.into_iter();
    let names = [it.next().unwrap_or_default().to_string(), it.next().unwrap_or_default().to_string()];
    let mut model = LinearModel::zeroed(names, params);
    let data = model.encode(texts, labels)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut seed::keyed_rng(params.seed, &format!("epoch-{epoch}")));
        for &k in &order {
            let (x, y) = &data[k];
            let p = softmax2(model.scores(x));
            let lr = params.learning_rate;
            for (c, pc) in p.into_iter().enumerate() {
                let d = pc - f64::from(*y == c);
                model.bias[c] -= lr * d;
                for &(i, v) in x {
                    model.weights[c][i as usize] -= lr * d * v;
                }
            }
        }
        let loss = model.mean_loss(&data);
        model.loss_history.push(loss);
    }
    if !model.is_finite() {
        return Err(DetectError::BadParams("training diverged; lower the learning rate"));
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub classes: Vec<String>,
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// `confusion[gold][predicted]`, indexed like `classes`.
    pub confusion: Vec<Vec<u64>>,
}

/// Accuracy, per-class precision/recall/F1 and their unweighted mean.
///
/// Every declared class enters the macro mean, so a class that never
/// occurs contributes an F1 of 0. Undefined precision or recall counts
/// as 0.
pub fn evaluate(predictions: &[&str], golds: &[&str], classes: &[&str]) -> Result<EvalReport, DetectError> {
    if predictions.len() != golds.len() {
        return Err(DetectError::LengthMismatch(predictions.len(), golds.len()));
    }
    if golds.is_empty() || classes.is_empty() {
        return Err(DetectError::Empty);
    }
    let index = |l: &str| classes.iter().position(|c| *c == l).ok_or_else(|| DetectError::UnknownClass(l.to_string()));
    let k = classes.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (p, g) in predictions.iter().zip(golds) {
        confusion[index(g)?][index(p)?] += 1;
    }
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let mut per_class = BTreeMap::new();
    let mut f1_sum = 0.0;
    for (c, name) in classes.iter().enumerate() {
        let tp = confusion[c][c] as f64;
        let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
        let support: u64 = confusion[c].iter().sum();
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        f1_sum += f1;
        per_class.insert(name.to_string(), ClassMetrics { precision, recall, f1, support });
    }
    Ok(EvalReport {
        n: golds.len(),
        accuracy: correct as f64 / golds.len() as f64,
        macro_f1: f1_sum / k as f64,
        classes: classes.iter().map(|c| c.to_string()).collect(),
        per_class,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimLabel {
    True,
    Fake,
}

impl ClaimLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimLabel::True => "true",
            ClaimLabel::Fake => "fake",
        }
    }
}

impl core::str::FromStr for ClaimLabel {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, DetectError> {
        match s {
            "true" => Ok(ClaimLabel::True),
            "fake" => Ok(ClaimLabel::Fake),
            other => Err(DetectError::BadClaimLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub text: String,
    pub label: ClaimLabel,
}

impl ClaimRecord {
    pub fn new(text: impl Into<String>, label: ClaimLabel) -> Result<Self, DetectError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(DetectError::EmptyText);
        }
        Ok(Self { text, label })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Baseline,
    ZeroShot,
    Augment,
}

impl core::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(Setting::Baseline),
            "zero_shot" | "zero-shot" => Ok(Setting::ZeroShot),
            "augment" => Ok(Setting::Augment),
            other => Err(format!("unknown setting `{other}`")),
        }
    }
}

/// How generated human/machine labels become claim labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMapping {
    /// Machine-manipulated text is fake, human text is true.
    #[default]
    MachineIsFake,
    /// The reverse, for ablations.
    MachineIsTrue,
}

impl LabelMapping {
    pub fn map(self, label: Label) -> ClaimLabel {
        match (self, label) {
            (LabelMapping::MachineIsFake, Label::Machine) | (LabelMapping::MachineIsTrue, Label::Human) => ClaimLabel::Fake,
            _ => ClaimLabel::True,
        }
    }
}

fn mapped(generated: &[DatasetRecord], mapping: LabelMapping) -> impl Iterator<Item = ClaimRecord> + '_ {
    generated.iter().map(move |r| ClaimRecord { text: r.text.clone(), label: mapping.map(r.label) })
}

/// Builds the training set for one experimental setting.
///
/// * `Baseline`: the gold claims only.
/// * `ZeroShot`: the generated records only, relabeled by `mapping`.
/// * `Augment`: the gold claims followed by `factor` times the number of
///   distinct generated texts. Every distinct text is used once before any
///   is repeated, cycling in input order.
pub fn compose_training(
    setting: Setting,
    gold: Option<&[ClaimRecord]>,
    generated: &[DatasetRecord],
    factor: usize,
    mapping: LabelMapping,
) -> Result<Vec<ClaimRecord>, DetectError> {
    if factor == 0 {
        return Err(DetectError::ZeroFactor);
    }
    match (setting, gold) {
        (Setting::Baseline, Some(g)) => Ok(g.to_vec()),
        (Setting::Baseline, None) => Err(DetectError::MissingGold("baseline")),
        (Setting::ZeroShot, None) => Ok(mapped(generated, mapping).collect()),
        (Setting::ZeroShot, Some(_)) => Err(DetectError::UnexpectedGold),
        (Setting::Augment, None) => Err(DetectError::MissingGold("augment")),
        (Setting::Augment, Some(g)) => {
            let mut seen = BTreeSet::new();
            let unique: Vec<ClaimRecord> = mapped(generated, mapping).filter(|c| seen.insert(c.text.clone())).collect();
            let mut out = g.to_vec();
            out.extend(unique.iter().cycle().take(unique.len() * factor).cloned());
            Ok(out)
        }
    }
}
