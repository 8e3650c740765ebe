//! The two-stage human study: task sampling, label bookkeeping, Cohen's
//! kappa and per-tag veracity-change rates.
//!
//! Stage 1 shows single sentences and asks whether a human or a machine
//! wrote them. Stage 2 shows each manipulated sentence next to its source
//! and asks whether the change made it fake.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetRecord, Label};
use crate::manipulate::restore_source;
use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnotationError {
    #[error("need {requested} {class} records but the dataset has {available}")]
    Insufficient { class: &'static str, requested: usize, available: usize },
    #[error("cannot recover the source text of record `{0}`")]
    Unrestorable(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("task `{task}` belongs to stage {expected}, not stage {got}")]
    StageMismatch { task: String, expected: Stage, got: Stage },
    #[error("`{value}` is not a valid stage {stage} label")]
    BadValue { value: LabelValue, stage: Stage },
    #[error("annotator id must not be empty")]
    EmptyAnnotator,
    #[error("stage must be 1 or 2, got {0}")]
    BadStage(u8),
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no items to compare")]
    Empty,
    #[error("kappa is undefined: both annotators use a single label but disagree")]
    Degenerate,
    #[error("label for task `{0}` has no manipulated tag to join")]
    Unjoined(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Stage {
    One,
    Two,
}

impl Stage {
    pub fn allows(self, value: LabelValue) -> bool {
        matches!(
            (self, value),
            (Stage::One, LabelValue::Human | LabelValue::Machine) | (Stage::Two, LabelValue::True | LabelValue::Fake)
        )
    }

    pub fn number(self) -> u8 {
        match self {
            Stage::One => 1,
            Stage::Two => 2,
        }
    }
}

impl TryFrom<u8> for Stage {
    type Error = AnnotationError;

    fn try_from(n: u8) -> Result<Self, Self::Error> {
        match n {
            1 => Ok(Stage::One),
            2 => Ok(Stage::Two),
            other => Err(AnnotationError::BadStage(other)),
        }
    }
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        s.number()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelValue {
    Human,
    Machine,
    True,
    Fake,
}

impl LabelValue {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelValue::Human => "human",
            LabelValue::Machine => "machine",
            LabelValue::True => "true",
            LabelValue::Fake => "fake",
        }
    }
}

impl fmt::Display for LabelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub stage: Stage,
    pub shown_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_original: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_of_manipulation: Option<String>,
    pub gold_origin: Label,
    /// Dataset record the task was drawn from.
    pub record_id: String,
}

impl AnnotationTask {
    pub fn is_well_formed(&self) -> bool {
        match self.stage {
            Stage::One => self.pair_original.is_none(),
            Stage::Two => self.pair_original.is_some() && self.gold_origin == Label::Machine,
        }
    }
}

/// The tag a machine record is filed under: its single tag, or the sorted
/// distinct tags joined by `+` when a variant mixes several.
pub fn manipulation_tag(record: &DatasetRecord) -> Option<String> {
    let tags: BTreeSet<&str> = record.records.iter().map(|r| r.pos.as_str()).collect();
    if tags.is_empty() {
        return None;
    }
    Some(tags.into_iter().collect::<Vec<_>>().join("+"))
}

fn source_text(record: &DatasetRecord) -> Result<String, AnnotationError> {
    let words: Vec<&str> = record.text.split(' ').collect();
    restore_source(&words, &record.records)
        .map(|w| w.join(" "))
        .map_err(|_| AnnotationError::Unrestorable(record.id.clone()))
}

fn pick<'a>(records: &[&'a DatasetRecord], n: usize, seed: u64, key: &str, class: &'static str) -> Result<Vec<&'a DatasetRecord>, AnnotationError> {
    if records.len() < n {
        return Err(AnnotationError::Insufficient { class, requested: n, available: records.len() });
    }
    let mut pool = records.to_vec();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool.shuffle(&mut seed::keyed_rng(seed, key));
    pool.truncate(n);
    Ok(pool)
}

/// Draws the study sample and builds its tasks: stage 1 first, then stage 2.
///
/// The sampled human records followed by the sampled machine records are
/// shuffled with the `"stage1"` stream, so position carries no label
/// signal. Task ids are positional (`s1-0000`, `s2-0000`) and reveal
/// nothing about the record behind them.
pub fn sample_study(
    dataset: &[DatasetRecord],
    n_human: usize,
    n_machine: usize,
    seed: u64,
) -> Result<Vec<AnnotationTask>, AnnotationError> {
    let humans: Vec<&DatasetRecord> = dataset.iter().filter(|r| r.label == Label::Human).collect();
    let machines: Vec<&DatasetRecord> = dataset.iter().filter(|r| r.label == Label::Machine).collect();
    let humans = pick(&humans, n_human, seed, "study-human", "human")?;
    let machines = pick(&machines, n_machine, seed, "study-machine", "machine")?;

    let mut merged: Vec<&DatasetRecord> = humans.into_iter().chain(machines.iter().copied()).collect();
    merged.shuffle(&mut seed::keyed_rng(seed, "stage1"));
    let mut tasks = Vec::with_capacity(merged.len() + machines.len());
    for (i, r) in merged.iter().enumerate() {
        tasks.push(AnnotationTask {
            task_id: format!("s1-{i:04}"),
            stage: Stage::One,
            shown_text: r.text.clone(),
            pair_original: None,
            pos_of_manipulation: manipulation_tag(r),
            gold_origin: r.label,
            record_id: r.id.clone(),
        });
    }

    let mut second = machines;
    second.shuffle(&mut seed::keyed_rng(seed, "stage2"));
    for (i, r) in second.iter().enumerate() {
        tasks.push(AnnotationTask {
            task_id: format!("s2-{i:04}"),
            stage: Stage::Two,
            shown_text: r.text.clone(),
            pair_original: Some(source_text(r)?),
            pos_of_manipulation: manipulation_tag(r),
            gold_origin: Label::Machine,
            record_id: r.id.clone(),
        });
    }
    Ok(tasks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLabel {
    pub task_id: String,
    pub annotator_id: String,
    pub stage: Stage,
    pub value: LabelValue,
    /// Seconds since the Unix epoch, filled in by the service.
    #[serde(default)]
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipMark {
    pub task_id: String,
    pub annotator_id: String,
    pub stage: Stage,
    #[serde(default)]
    pub timestamp: u64,
}

/// One line of the label log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Entry {
    Label(AnnotationLabel),
    Skip(SkipMark),
}

impl Entry {
    fn key(&self) -> (String, String, Stage) {
        match self {
            Entry::Label(l) => (l.task_id.clone(), l.annotator_id.clone(), l.stage),
            Entry::Skip(s) => (s.task_id.clone(), s.annotator_id.clone(), s.stage),
        }
    }

    pub fn annotator(&self) -> &str {
        match self {
            Entry::Label(l) => &l.annotator_id,
            Entry::Skip(s) => &s.annotator_id,
        }
    }
}

/// An accepted entry and what it replaced, if anything.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub entry: Entry,
    pub replaced: Option<Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub replaced: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageProgress {
    pub total: usize,
    pub labeled: usize,
    pub skipped: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorProgress {
    pub stage1: StageProgress,
    pub stage2: StageProgress,
}

/// In-memory task list and label state. Persistence is the caller's job:
/// every accepted [`Entry`] should be appended to a log, and replaying the
/// log through [`LabelBook::apply`] rebuilds the same state.
#[derive(Debug, Clone, Default)]
pub struct LabelBook {
    tasks: Vec<AnnotationTask>,
    by_id: BTreeMap<String, usize>,
    current: BTreeMap<(String, String, Stage), Entry>,
    audit: Vec<AuditEntry>,
}

impl LabelBook {
    pub fn new(tasks: Vec<AnnotationTask>) -> Self {
        let by_id = tasks.iter().enumerate().map(|(i, t)| (t.task_id.clone(), i)).collect();
        Self { tasks, by_id, current: BTreeMap::new(), audit: Vec::new() }
    }

    pub fn tasks(&self) -> &[AnnotationTask] {
        &self.tasks
    }

    pub fn task(&self, id: &str) -> Option<&AnnotationTask> {
        self.by_id.get(id).map(|&i| &self.tasks[i])
    }

    fn check(&self, task_id: &str, annotator: &str, stage: Stage) -> Result<(), AnnotationError> {
        if annotator.is_empty() {
            return Err(AnnotationError::EmptyAnnotator);
        }
        let task = self.task(task_id).ok_or_else(|| AnnotationError::UnknownTask(task_id.to_string()))?;
        if task.stage != stage {
            return Err(AnnotationError::StageMismatch { task: task_id.to_string(), expected: task.stage, got: stage });
        }
        Ok(())
    }

    /// Validates an entry without applying it.
    pub fn validate(&self, entry: &Entry) -> Result<(), AnnotationError> {
        match entry {
            Entry::Label(l) => {
                self.check(&l.task_id, &l.annotator_id, l.stage)?;
                if !l.stage.allows(l.value) {
                    return Err(AnnotationError::BadValue { value: l.value, stage: l.stage });
                }
                Ok(())
            }
            Entry::Skip(s) => self.check(&s.task_id, &s.annotator_id, s.stage),
        }
    }

    /// Applies an entry. A second entry for the same task, annotator and
    /// stage replaces the first; both stay in the audit trail.
    pub fn apply(&mut self, entry: Entry) -> Result<Ack, AnnotationError> {
        self.validate(&entry)?;
        let replaced = self.current.insert(entry.key(), entry.clone());
        let ack = Ack { replaced: replaced.is_some() };
        self.audit.push(AuditEntry { entry, replaced });
        Ok(ack)
    }

    pub fn record_label(&mut self, label: AnnotationLabel) -> Result<Ack, AnnotationError> {
        self.apply(Entry::Label(label))
    }

    pub fn record_skip(&mut self, skip: SkipMark) -> Result<Ack, AnnotationError> {
        self.apply(Entry::Skip(skip))
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// Current labels, skips excluded.
    pub fn labels(&self) -> impl Iterator<Item = &AnnotationLabel> {
        self.current.values().filter_map(|e| match e {
            Entry::Label(l) => Some(l),
            Entry::Skip(_) => None,
        })
    }

    pub fn label(&self, task_id: &str, annotator: &str, stage: Stage) -> Option<&Entry> {
        self.current.get(&(task_id.to_string(), annotator.to_string(), stage))
    }

    pub fn annotators(&self) -> BTreeSet<&str> {
        self.current.values().map(Entry::annotator).collect()
    }

    /// The first task of `stage`, in presentation order, that the annotator
    /// has neither labeled nor skipped.
    pub fn next_task(&self, annotator: &str, stage: Stage) -> Option<&AnnotationTask> {
        self.tasks.iter().filter(|t| t.stage == stage).find(|t| self.label(&t.task_id, annotator, stage).is_none())
    }

    pub fn progress(&self, annotator: &str) -> AnnotatorProgress {
        let mut p = AnnotatorProgress::default();
        for t in &self.tasks {
            let s = if t.stage == Stage::One { &mut p.stage1 } else { &mut p.stage2 };
            s.total += 1;
            match self.label(&t.task_id, annotator, t.stage) {
                Some(Entry::Label(_)) => s.labeled += 1,
                Some(Entry::Skip(_)) => s.skipped += 1,
                None => s.remaining += 1,
            }
        }
        p
    }

    /// Agreement between two annotators over both stages.
    pub fn agreement(&self, a: &str, b: &str) -> AgreementReport {
        agreement_report(self.current.values(), a, b)
    }

    /// Veracity-change rates over every current stage-2 label.
    pub fn veracity_stats(&self) -> Result<VeracityStats, AnnotationError> {
        let labels: Vec<&AnnotationLabel> = self.labels().filter(|l| l.stage == Stage::Two).collect();
        veracity_change_rate(labels, &self.tasks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementStatus {
    Ok,
    InsufficientData,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAgreement {
    pub stage: Stage,
    pub status: AgreementStatus,
    /// Tasks labeled by both annotators.
    pub n_items: usize,
    /// Tasks skipped by at least one annotator; not part of kappa.
    pub skipped: usize,
    pub kappa: Option<f64>,
    pub observed_agreement: Option<f64>,
    /// `confusion[a_value][b_value]` = number of shared tasks.
    pub confusion: BTreeMap<String, BTreeMap<String, u64>>,
}

impl StageAgreement {
    fn compute(stage: Stage, a: &[LabelValue], b: &[LabelValue], skipped: usize) -> Self {
        let mut confusion: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
        for (x, y) in a.iter().zip(b) {
            *confusion.entry(x.to_string()).or_default().entry(y.to_string()).or_insert(0) += 1;
        }
        let (status, kappa, observed) = match cohen_kappa(a, b) {
            Ok(k) => (AgreementStatus::Ok, Some(k), Some(observed_agreement(a, b))),
            Err(AnnotationError::Degenerate) => (AgreementStatus::Degenerate, None, Some(observed_agreement(a, b))),
            Err(_) => (AgreementStatus::InsufficientData, None, None),
        };
        Self { stage, status, n_items: a.len(), skipped, kappa, observed_agreement: observed, confusion }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub annotator_a: String,
    pub annotator_b: String,
    pub kappa_stage1: Option<f64>,
    pub kappa_stage2: Option<f64>,
    pub stage1: StageAgreement,
    pub stage2: StageAgreement,
}

/// Agreement between annotators `a` and `b` from a sequence of log
/// entries. Later entries for the same task and stage replace earlier
/// ones, as in [`LabelBook`]; tasks skipped by either side are counted but
/// left out of kappa.
pub fn agreement_report<'e>(entries: impl IntoIterator<Item = &'e Entry>, a: &str, b: &str) -> AgreementReport {
    let mut current: BTreeMap<(String, String, Stage), &Entry> = BTreeMap::new();
    for e in entries {
        if e.annotator() == a || e.annotator() == b {
            current.insert(e.key(), e);
        }
    }
    let stage = |stage: Stage| {
        let (mut xs, mut ys, mut skipped) = (Vec::new(), Vec::new(), 0);
        for ((task, who, st), x) in &current {
            if *st != stage || who != a {
                continue;
            }
            match (x, current.get(&(task.clone(), b.to_string(), stage))) {
                (Entry::Label(x), Some(Entry::Label(y))) => {
                    xs.push(x.value);
                    ys.push(y.value);
                }
                (Entry::Skip(_), _) | (_, Some(Entry::Skip(_))) => skipped += 1,
                _ => {}
            }
        }
        // Tasks only `b` skipped and `a` never touched.
        skipped += current
            .iter()
            .filter(|((task, who, st), e)| {
                *st == stage && who == b && matches!(e, Entry::Skip(_)) && !current.contains_key(&(task.clone(), a.to_string(), stage))
            })
            .count();
        StageAgreement::compute(stage, &xs, &ys, skipped)
    };
    let stage1 = stage(Stage::One);
    let stage2 = stage(Stage::Two);
    AgreementReport {
        annotator_a: a.to_string(),
        annotator_b: b.to_string(),
        kappa_stage1: stage1.kappa,
        kappa_stage2: stage2.kappa,
        stage1,
        stage2,
    }
}

fn observed_agreement<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

/// Cohen's kappa with per-annotator marginals.
///
/// When chance agreement is 1 (both annotators use one and the same label
/// throughout) kappa is taken as 1.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64, AnnotationError> {
    if a.len() != b.len() {
        return Err(AnnotationError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnnotationError::Empty);
    }
    let mut marg: BTreeMap<&T, (u64, u64)> = BTreeMap::new();
    let mut agree = 0u64;
    for (x, y) in a.iter().zip(b) {
        marg.entry(x).or_default().0 += 1;
        marg.entry(y).or_default().1 += 1;
        agree += u64::from(x == y);
    }
    let n = a.len() as u64;
    let chance: u128 = marg.values().map(|&(ca, cb)| u128::from(ca) * u128::from(cb)).sum();
    let nn = u128::from(n) * u128::from(n);
    if chance == nn {
        return if agree == n { Ok(1.0) } else { Err(AnnotationError::Degenerate) };
    }
    let p_o = agree as f64 / n as f64;
    let p_e = chance as f64 / nn as f64;
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosVeracity {
    pub count: u64,
    pub fake: u64,
    pub fake_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VeracityStats {
    pub per_pos: BTreeMap<String, PosVeracity>,
}

/// Fraction of stage-2 labels that are `fake`, per manipulated tag. Every
/// label counts, so two annotators on one task give two observations.
pub fn veracity_change_rate<'a>(
    labels: impl IntoIterator<Item = &'a AnnotationLabel>,
    tasks: &[AnnotationTask],
) -> Result<VeracityStats, AnnotationError> {
    let by_id: BTreeMap<&str, &AnnotationTask> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for l in labels {
        if !Stage::Two.allows(l.value) || l.stage != Stage::Two {
            return Err(AnnotationError::BadValue { value: l.value, stage: l.stage });
        }
        let pos = by_id
            .get(l.task_id.as_str())
            .and_then(|t| t.pos_of_manipulation.as_ref())
            .ok_or_else(|| AnnotationError::Unjoined(l.task_id.clone()))?;
        let c = counts.entry(pos.clone()).or_default();
        c.0 += 1;
        c.1 += u64::from(l.value == LabelValue::Fake);
    }
    let per_pos = counts
        .into_iter()
        .map(|(pos, (count, fake))| (pos, PosVeracity { count, fake, fake_rate: fake as f64 / count as f64 }))
        .collect();
    Ok(VeracityStats { per_pos })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::manipulate::{ManipulationKind, ManipulationRecord};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use LabelValue::{Fake, Human as H, Machine as M, True};

    fn human(i: usize) -> DatasetRecord {
        DatasetRecord {
            id: format!("s{i:03}#h"),
            source_id: format!("s{i:03}"),
            text: format!("الخبر رقم {i}"),
            label: Label::Human,
            records: vec![],
            split: Split::Train,
        }
    }

    fn machine(i: usize, pos: &str) -> DatasetRecord {
        DatasetRecord {
            id: format!("s{i:03}#m0"),
            source_id: format!("s{i:03}"),
            text: format!("الخبر عدد {i}"),
            label: Label::Machine,
            records: vec![ManipulationRecord {
                token_index: 1,
                original: "رقم".into(),
                substitute: "عدد".into(),
                pos: pos.into(),
                kind: ManipulationKind::EmbeddingSwap,
                rank: Some(0),
                ratio: Some(0.0),
            }],
            split: Split::Train,
        }
    }

    fn dataset(nh: usize, nm: usize) -> Vec<DatasetRecord> {
        (0..nh).map(human).chain((0..nm).map(|i| machine(1000 + i, "N"))).collect()
    }

    #[test]
    fn study_sizes() {
        let tasks = sample_study(&dataset(200, 200), 145, 155, 7).unwrap();
        let s1 = tasks.iter().filter(|t| t.stage == Stage::One).count();
        let s2 = tasks.iter().filter(|t| t.stage == Stage::Two).count();
        assert_eq!((s1, s2), (300, 155));
        assert!(tasks.iter().all(AnnotationTask::is_well_formed));

        let none = sample_study(&dataset(10, 10), 5, 0, 7).unwrap();
        assert!(none.iter().all(|t| t.stage == Stage::One));
        assert_eq!(none.len(), 5);

        let err = sample_study(&dataset(3, 3), 4, 1, 0).unwrap_err();
        assert_eq!(err, AnnotationError::Insufficient { class: "human", requested: 4, available: 3 });
    }

    #[test]
    fn study_is_deterministic_and_pairs_sources() {
        let d = dataset(20, 20);
        let a = sample_study(&d, 10, 10, 3).unwrap();
        assert_eq!(a, sample_study(&d, 10, 10, 3).unwrap());
        assert_ne!(a, sample_study(&d, 10, 10, 4).unwrap());
        for t in a.iter().filter(|t| t.stage == Stage::Two) {
            let n = t.shown_text.rsplit(' ').next().unwrap();
            assert_eq!(t.pair_original.as_deref(), Some(format!("الخبر رقم {n}").as_str()));
        }
    }

    #[test]
    fn stage1_order_is_the_seeded_shuffle_of_the_merged_sample() {
        let d = dataset(30, 30);
        let tasks = sample_study(&d, 12, 9, 11).unwrap();
        let stage1: Vec<&str> = tasks.iter().filter(|t| t.stage == Stage::One).map(|t| t.record_id.as_str()).collect();

        // Rebuild independently from the public seed derivation.
        let take = |label: Label, n: usize, key: &str| {
            let mut ids: Vec<&str> = d.iter().filter(|r| r.label == label).map(|r| r.id.as_str()).collect();
            ids.sort_unstable();
            ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive_seed(11, key)));
            ids.truncate(n);
            ids
        };
        let mut merged = take(Label::Human, 12, "study-human");
        merged.extend(take(Label::Machine, 9, "study-machine"));
        merged.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive_seed(11, "stage1")));
        assert_eq!(stage1, merged);
    }

    fn label(task: &str, who: &str, stage: Stage, value: LabelValue) -> AnnotationLabel {
        AnnotationLabel { task_id: task.into(), annotator_id: who.into(), stage, value, timestamp: 0 }
    }

    #[test]
    fn labels_are_validated_and_replaced() {
        let mut book = LabelBook::new(sample_study(&dataset(5, 5), 2, 2, 0).unwrap());
        assert_eq!(book.record_label(label("s1-0000", "a", Stage::One, M)), Ok(Ack { replaced: false }));
        assert_eq!(
            book.record_label(label("s1-0000", "a", Stage::One, Fake)),
            Err(AnnotationError::BadValue { value: Fake, stage: Stage::One })
        );
        assert_eq!(book.record_label(label("s1-9999", "a", Stage::One, M)), Err(AnnotationError::UnknownTask("s1-9999".into())));
        assert!(matches!(book.record_label(label("s1-0000", "a", Stage::Two, True)), Err(AnnotationError::StageMismatch { .. })));
        assert_eq!(book.record_label(label("s1-0000", "a", Stage::One, H)), Ok(Ack { replaced: true }));
        assert_eq!(book.labels().count(), 1);
        assert_eq!(book.labels().next().unwrap().value, H);
        assert_eq!(book.audit().len(), 2);
        assert_eq!(book.audit()[1].replaced, Some(Entry::Label(label("s1-0000", "a", Stage::One, M))));
    }

    #[test]
    fn queue_progress_and_skips() {
        let mut book = LabelBook::new(sample_study(&dataset(5, 5), 2, 1, 0).unwrap());
        assert_eq!(book.next_task("a", Stage::One).unwrap().task_id, "s1-0000");
        book.record_label(label("s1-0000", "a", Stage::One, H)).unwrap();
        book.record_skip(SkipMark { task_id: "s1-0001".into(), annotator_id: "a".into(), stage: Stage::One, timestamp: 0 })
            .unwrap();
        assert_eq!(book.next_task("a", Stage::One).unwrap().task_id, "s1-0002");
        book.record_label(label("s1-0002", "a", Stage::One, M)).unwrap();
        assert!(book.next_task("a", Stage::One).is_none());
        assert_eq!(book.next_task("b", Stage::One).unwrap().task_id, "s1-0000");
        let p = book.progress("a");
        assert_eq!(p.stage1, StageProgress { total: 3, labeled: 2, skipped: 1, remaining: 0 });
        assert_eq!(p.stage2, StageProgress { total: 1, labeled: 0, skipped: 0, remaining: 1 });
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohen_kappa(&[H, M, M, H], &[H, M, M, H]), Ok(1.0));
        assert_eq!(cohen_kappa(&[H, H, M, M], &[H, M, M, M]), Ok(0.5));
        assert_eq!(cohen_kappa(&[H, M], &[M, H]), Ok(-1.0));
        assert_eq!(cohen_kappa(&[H, H], &[H, H]), Ok(1.0));
        assert_eq!(cohen_kappa::<LabelValue>(&[], &[]), Err(AnnotationError::Empty));
        assert_eq!(cohen_kappa(&[H], &[H, M]), Err(AnnotationError::LengthMismatch(1, 2)));
    }

    #[test]
    fn single_disagreeing_item_has_defined_kappa() {
        // p_e = 0 here since the two marginals share no label.
        assert_eq!(cohen_kappa(&[H], &[M]), Ok(0.0));
        assert_eq!(cohen_kappa(&[H, H], &[M, M]), Ok(0.0));
    }

    /// Textbook kappa from a full k×k contingency table.
    fn kappa_oracle(a: &[u8], b: &[u8], k: usize) -> Option<f64> {
        let mut table = vec![vec![0.0f64; k]; k];
        for (&x, &y) in a.iter().zip(b) {
            table[x as usize][y as usize] += 1.0;
        }
        let n = a.len() as f64;
        let po: f64 = (0..k).map(|i| table[i][i]).sum::<f64>() / n;
        let pe: f64 = (0..k)
            .map(|i| {
                let row: f64 = table[i].iter().sum();
                let col: f64 = table.iter().map(|r| r[i]).sum();
                (row / n) * (col / n)
            })
            .sum();
        if (1.0 - pe).abs() < 1e-15 {
            return None;
        }
        Some((po - pe) / (1.0 - pe))
    }

    #[test]
    fn kappa_matches_contingency_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(1..60);
            let k = rng.random_range(2..5);
            let a: Vec<u8> = (0..n).map(|_| rng.random_range(0..k as u8)).collect();
            let b: Vec<u8> = a.iter().map(|&x| if rng.random_bool(0.7) { x } else { rng.random_range(0..k as u8) }).collect();
            match kappa_oracle(&a, &b, k) {
                Some(want) => assert!((cohen_kappa(&a, &b).unwrap() - want).abs() < 1e-9),
                None => assert_eq!(cohen_kappa(&a, &b), Ok(1.0)),
            }
        }
    }

    #[test]
    fn agreement_counts_and_skips() {
        let mut book = LabelBook::new(sample_study(&dataset(5, 5), 3, 3, 0).unwrap());
        let empty = book.agreement("a", "b");
        assert_eq!(empty.stage1.status, AgreementStatus::InsufficientData);
        assert_eq!(empty.kappa_stage1, None);

        for (i, (x, y)) in [(H, H), (H, M), (M, M), (M, M)].into_iter().enumerate() {
            let t = format!("s1-{i:04}");
            book.record_label(label(&t, "a", Stage::One, x)).unwrap();
            book.record_label(label(&t, "b", Stage::One, y)).unwrap();
        }
        let r = book.agreement("a", "b");
        assert_eq!(r.kappa_stage1, Some(0.5));
        assert_eq!(r.stage1.observed_agreement, Some(0.75));
        assert_eq!(r.stage1.confusion["human"]["machine"], 1);
        assert_eq!(r.stage1.n_items, 4);

        book.record_skip(SkipMark { task_id: "s1-0000".into(), annotator_id: "b".into(), stage: Stage::One, timestamp: 1 })
            .unwrap();
        let r = book.agreement("a", "b");
        assert_eq!((r.stage1.n_items, r.stage1.skipped), (3, 1));
        book.record_skip(SkipMark { task_id: "s1-0000".into(), annotator_id: "a".into(), stage: Stage::One, timestamp: 2 })
            .unwrap();
        book.record_skip(SkipMark { task_id: "s1-0005".into(), annotator_id: "a".into(), stage: Stage::One, timestamp: 2 })
            .unwrap();
        assert_eq!(book.agreement("a", "b").stage1.skipped, 2);
        assert_eq!(book.agreement("b", "a").stage1.skipped, 2);
    }

    #[test]
    fn veracity_examples() {
        let tasks: Vec<AnnotationTask> = (0..4)
            .map(|i| AnnotationTask {
                task_id: format!("t{i}"),
                stage: Stage::Two,
                shown_text: "x".into(),
                pair_original: Some("y".into()),
                pos_of_manipulation: Some("N_PROP".into()),
                gold_origin: Label::Machine,
                record_id: format!("r{i}"),
            })
            .collect();
        let labels: Vec<_> =
            [Fake, Fake, Fake, True].iter().enumerate().map(|(i, &v)| label(&format!("t{i}"), "a", Stage::Two, v)).collect();
        let s = veracity_change_rate(&labels, &tasks).unwrap();
        assert_eq!(s.per_pos["N_PROP"], PosVeracity { count: 4, fake: 3, fake_rate: 0.75 });

        let all_true: Vec<_> = (0..4).map(|i| label(&format!("t{i}"), "a", Stage::Two, True)).collect();
        assert_eq!(veracity_change_rate(&all_true, &tasks).unwrap().per_pos["N_PROP"].fake_rate, 0.0);
        assert_eq!(veracity_change_rate(&[], &tasks).unwrap(), VeracityStats::default());
        let stray = label("zzz", "a", Stage::Two, Fake);
        assert_eq!(veracity_change_rate([&stray], &tasks), Err(AnnotationError::Unjoined("zzz".into())));
    }

    #[test]
    fn stage_serializes_as_number() {
        let l = label("t", "a", Stage::Two, Fake);
        let e = Entry::Label(l);
        assert_eq!(e.key().2.number(), 2);
        assert_eq!(Stage::try_from(3), Err(AnnotationError::BadStage(3)));
    }
}
