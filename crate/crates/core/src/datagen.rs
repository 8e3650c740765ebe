//! Labeled human/machine datasets built from manipulated variants.
//!
//! Building happens in two phases. Variants are generated per sentence
//! (pure and order independent, so callers may run it in parallel), then
//! [`assemble_balanced`] samples and splits them on a single thread.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{split_items, CorpusError, Sentence, Split, SplitRatios};
use crate::embeddings::NeighborSource;
use crate::manipulate::{generate_variants, ManipulatedSentence, ManipulationConfig, ManipulationKind, ManipulationRecord};
use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatagenError {
    #[error("need {requested} {class} records but only {available} can be produced")]
    Shortfall { class: &'static str, requested: usize, available: usize },
    #[error("per-class count must be at least 1")]
    ZeroPerClass,
    #[error("duplicate sentence id `{0}`")]
    DuplicateSentence(String),
    #[error("got variants for {variants} sentences but {sentences} sentences")]
    VariantCountMismatch { sentences: usize, variants: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Human,
    Machine,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Human => "human",
            Label::Machine => "machine",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub source_id: String,
    pub text: String,
    pub label: Label,
    pub records: Vec<ManipulationRecord>,
    pub split: Split,
}

impl DatasetRecord {
    pub fn is_consistent(&self) -> bool {
        (self.label == Label::Human) == self.records.is_empty()
    }
}

/// Per-tag manipulation counts with excluded-neighbor statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PosStats {
    pub count: u64,
    /// `None` when no record of this tag went through the embedding model.
    pub avg_excluded: Option<f64>,
    pub median_excluded: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub per_pos: BTreeMap<String, PosStats>,
    pub per_label: BTreeMap<String, u64>,
    pub per_split: BTreeMap<String, u64>,
}

fn median(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Counts manipulations per tag and summarizes how many neighbors were
/// skipped before each accepted substitute.
///
/// The scan rank of an embedding swap is its excluded count; random number
/// swaps count as zero exclusions, and deletions contribute to the count
/// only.
pub fn pos_stats(records: &[DatasetRecord]) -> DatasetStats {
    let mut stats = DatasetStats::default();
    let mut excluded: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in records {
        *stats.per_label.entry(r.label.as_str().to_string()).or_insert(0) += 1;
        *stats.per_split.entry(r.split.as_str().to_string()).or_insert(0) += 1;
        for m in &r.records {
            stats.per_pos.entry(m.pos.clone()).or_default().count += 1;
            let skipped = match m.kind {
                ManipulationKind::EmbeddingSwap => m.rank,
                ManipulationKind::NumberRandomize => Some(0),
                ManipulationKind::NegationDelete => None,
            };
            if let Some(k) = skipped {
                excluded.entry(m.pos.clone()).or_default().push(k);
            }
        }
    }
    for (pos, mut values) in excluded {
        values.sort_unstable();
        let entry = stats.per_pos.entry(pos).or_default();
        let sum: usize = values.iter().sum();
        entry.avg_excluded = Some(sum as f64 / values.len() as f64);
        entry.median_excluded = Some(median(&values));
    }
    stats
}

fn check_unique_ids(sentences: &[Sentence]) -> Result<(), DatagenError> {
    let mut seen = BTreeSet::new();
    for s in sentences {
        if !seen.insert(s.id.as_str()) {
            return Err(DatagenError::DuplicateSentence(s.id.clone()));
        }
    }
    Ok(())
}

/// Variants for every sentence, in input order.
pub fn generate_all<S: NeighborSource + ?Sized>(
    sentences: &[Sentence],
    source: &S,
    config: &ManipulationConfig,
) -> Vec<Vec<ManipulatedSentence>> {
    sentences.iter().map(|s| generate_variants(s, source, config)).collect()
}

fn machine_record(variant: &ManipulatedSentence, index: usize, split: Split) -> DatasetRecord {
    DatasetRecord {
        id: format!("{}#m{index}", variant.source_id),
        source_id: variant.source_id.clone(),
        text: variant.text(),
        label: Label::Machine,
        records: variant.records.clone(),
        split,
    }
}

fn human_record(sentence: &Sentence, split: Split) -> DatasetRecord {
    DatasetRecord {
        id: format!("{}#h", sentence.id),
        source_id: sentence.id.clone(),
        text: sentence.text(),
        label: Label::Human,
        records: Vec::new(),
        split,
    }
}

/// Final ordering: by source id, human before machine, then variant index.
fn sort_records(records: &mut [DatasetRecord]) {
    records.sort_by(|a, b| {
        a.source_id.cmp(&b.source_id).then(a.label.cmp(&b.label)).then_with(|| variant_index(a).cmp(&variant_index(b)))
    });
}

fn variant_index(r: &DatasetRecord) -> usize {
    r.id.rsplit_once("#m").and_then(|(_, i)| i.parse().ok()).unwrap_or(0)
}

fn assign_splits(ids: Vec<&str>, ratios: SplitRatios, seed: u64) -> Result<BTreeMap<String, Split>, DatagenError> {
    let mut out = BTreeMap::new();
    if ids.is_empty() {
        return Ok(out);
    }
    let splits = split_items(ids, ratios, seed::derive_seed(seed, "splits"))?;
    for (split, group) in [(Split::Train, splits.train), (Split::Dev, splits.dev), (Split::Test, splits.test)] {
        for id in group {
            out.insert(id.to_string(), split);
        }
    }
    Ok(out)
}

/// Samples `per_class` human and `per_class` machine records.
///
/// Sources are visited in a seeded order. The machine class takes the first
/// `per_class` sources that have variants, with one seeded choice of
/// variant each. The human class prefers sources not already used for a
/// machine record and only reuses them when it runs out. Splits are drawn
/// over the distinct sources used, so a source never spans two splits.
pub fn assemble_balanced(
    sentences: &[Sentence],
    variants: &[Vec<ManipulatedSentence>],
    per_class: usize,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, DatasetStats), DatagenError> {
    ratios.validate()?;
    if per_class == 0 {
        return Err(DatagenError::ZeroPerClass);
    }
    if sentences.len() != variants.len() {
        return Err(DatagenError::VariantCountMismatch { sentences: sentences.len(), variants: variants.len() });
    }
    check_unique_ids(sentences)?;

    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.sort_by(|&a, &b| sentences[a].id.cmp(&sentences[b].id));
    order.shuffle(&mut seed::keyed_rng(seed, "sources"));

    let generatable = order.iter().filter(|&&i| !variants[i].is_empty()).count();
    if generatable < per_class {
        return Err(DatagenError::Shortfall { class: "machine", requested: per_class, available: generatable });
    }
    if sentences.len() < per_class {
        return Err(DatagenError::Shortfall { class: "human", requested: per_class, available: sentences.len() });
    }

    let machine: Vec<usize> = order.iter().copied().filter(|&i| !variants[i].is_empty()).take(per_class).collect();
    let used: BTreeSet<usize> = machine.iter().copied().collect();
    let human: Vec<usize> = order
        .iter()
        .copied()
        .filter(|i| !used.contains(i))
        .chain(order.iter().copied().filter(|i| used.contains(i)))
        .take(per_class)
        .collect();

    let mut source_ids: Vec<&str> = Vec::new();
    let mut seen = BTreeSet::new();
    for &i in order.iter().filter(|i| used.contains(i) || human.contains(i)) {
        if seen.insert(i) {
            source_ids.push(&sentences[i].id);
        }
    }
    let split_of = assign_splits(source_ids, ratios, seed)?;

    let mut records = Vec::with_capacity(2 * per_class);
    for &i in &machine {
        let s = &sentences[i];
        let pick = seed::keyed_rng(seed, &format!("variant:{}", s.id)).random_range(0..variants[i].len());
        records.push(machine_record(&variants[i][pick], pick, split_of[&s.id]));
    }
    for &i in &human {
        records.push(human_record(&sentences[i], split_of[&sentences[i].id]));
    }
    sort_records(&mut records);
    let stats = pos_stats(&records);
    Ok((records, stats))
}

/// Every source as a human record plus all of its variants as machine
/// records, split by source.
pub fn assemble_exhaustive(
    sentences: &[Sentence],
    variants: &[Vec<ManipulatedSentence>],
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Vec<DatasetRecord>, DatasetStats), DatagenError> {
    ratios.validate()?;
    if sentences.len() != variants.len() {
        return Err(DatagenError::VariantCountMismatch { sentences: sentences.len(), variants: variants.len() });
    }
    check_unique_ids(sentences)?;
    let mut ids: Vec<&str> = sentences.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    let split_of = assign_splits(ids, ratios, seed)?;
    let mut records = Vec::new();
    for (s, vs) in sentences.iter().zip(variants) {
        let split = split_of[&s.id];
        records.push(human_record(s, split));
        records.extend(vs.iter().enumerate().map(|(i, v)| machine_record(v, i, split)));
    }
    sort_records(&mut records);
    let stats = pos_stats(&records);
    Ok((records, stats))
}

/// Generates variants and assembles a balanced dataset in one go.
pub fn build_dataset<S: NeighborSource + ?Sized>(
    sentences: &[Sentence],
    source: &S,
    config: &ManipulationConfig,
    per_class: usize,
    ratios: SplitRatios,
) -> Result<(Vec<DatasetRecord>, DatasetStats), DatagenError> {
    let variants = generate_all(sentences, source, config);
    assemble_balanced(sentences, &variants, per_class, ratios, config.seed)
}
