//! Lexical substitution: turning a tagged sentence into manipulated variants.
//!
//! Eligible tokens are chosen by tag. Negative particles are deleted, digit
//! numbers get random replacements of the same length, and every other
//! eligible token is swapped for one of its embedding neighbors. A neighbor
//! is only accepted when its character ratio to the original stays at or
//! below the threshold, which filters out clitic and inflected forms of the
//! same word (`لبنان` vs `ولبنان`, `بلبنان`).

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{self, Sentence, Token};
use crate::embeddings::{EmbeddingError, NeighborSource};
use crate::seed;

pub const NEG_PART: &str = "NEG_PART";
pub const N_NUM: &str = "N_NUM";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManipulateError {
    #[error("character ratio needs two non-empty strings")]
    EmptyString,
    #[error("`{0}` is not a digit string")]
    NotANumber(String),
    #[error("token {index} is tagged `{found}`, not NEG_PART")]
    NotNegation { index: usize, found: String },
    #[error("token index {0} is out of range")]
    IndexOutOfRange(usize),
    #[error("removing the only token would leave an empty sentence")]
    WouldEmptySentence,
    #[error("invalid manipulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("record does not match the sentence at token {0}")]
    RecordMismatch(usize),
}

/// Maps hamza-carrying alef forms to bare alef.
///
/// Orthography of alef with hamza is inconsistent in news text, so `أكثر`
/// and `اكثر` are treated as the same letters when comparing characters.
fn fold_alef(c: char) -> char {
    match c {
        '\u{0622}' | '\u{0623}' | '\u{0625}' => '\u{0627}',
        other => other,
    }
}

fn comparable_chars(s: &str) -> Vec<char> {
    s.nfc().map(fold_alef).collect()
}

/// Longest common block of `a[a0..a1]` and `b[b0..b1]`: the earliest start
/// in `a` wins ties, then the earliest in `b`.
#[allow(clippy::needless_range_loop)]
fn longest_match(a: &[char], b: &[char], a0: usize, a1: usize, b0: usize, b1: usize) -> (usize, usize, usize) {
    let (mut best_i, mut best_j, mut best_len) = (a0, b0, 0);
    let width = b1 - b0;
    let mut prev = vec![0usize; width + 1];
    let mut cur = vec![0usize; width + 1];
    for i in a0..a1 {
        for j in b0..b1 {
            let k = j - b0 + 1;
            cur[k] = if a[i] == b[j] { prev[k - 1] + 1 } else { 0 };
            let len = cur[k];
            if len > best_len {
                best_len = len;
                best_i = i + 1 - len;
                best_j = j + 1 - len;
            } else if len == best_len && len > 0 {
                let (si, sj) = (i + 1 - len, j + 1 - len);
                if (si, sj) < (best_i, best_j) {
                    best_i = si;
                    best_j = sj;
                }
            }
        }
        core::mem::swap(&mut prev, &mut cur);
        cur.iter_mut().for_each(|x| *x = 0);
    }
    (best_i, best_j, best_len)
}

/// Number of characters matched by recursive longest-common-block matching.
///
/// Block matching depends on argument order when blocks tie, so both
/// orders are tried and the larger count is kept.
pub fn matching_characters(a: &str, b: &str) -> usize {
    let (a, b) = (comparable_chars(a), comparable_chars(b));
    directed_matches(&a, &b).max(directed_matches(&b, &a))
}

fn directed_matches(a: &[char], b: &[char]) -> usize {
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((a0, a1, b0, b1)) = stack.pop() {
        if a0 >= a1 || b0 >= b1 {
            continue;
        }
        let (i, j, len) = longest_match(a, b, a0, a1, b0, b1);
        if len == 0 {
            continue;
        }
        total += len;
        stack.push((a0, i, b0, j));
        stack.push((i + len, a1, j + len, b1));
    }
    total
}

/// Character similarity `2M/T`, where `M` is the number of matched
/// characters and `T` the combined length of both strings.
pub fn char_ratio(a: &str, b: &str) -> Result<f64, ManipulateError> {
    if a.is_empty() || b.is_empty() {
        return Err(ManipulateError::EmptyString);
    }
    let total = a.nfc().count() + b.nfc().count();
    let matched = matching_characters(a, b);
    Ok(2.0 * matched as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManipulationConfig {
    pub target_pos: BTreeSet<String>,
    /// Neighbors whose character ratio exceeds this are skipped.
    pub ratio_threshold: f64,
    pub candidates_per_token: usize,
    pub number_variants: usize,
    pub max_variants_per_sentence: usize,
    pub neighbor_scan_limit: usize,
    pub seed: u64,
}

impl Default for ManipulationConfig {
    fn default() -> Self {
        Self {
            target_pos: ["N_PROP", "N_NUM", "ADJ", "ADJ_COMP", "ADJ_NUM", "NEG_PART"]
                .into_iter()
                .map(String::from)
                .collect(),
            ratio_threshold: 0.5,
            candidates_per_token: 5,
            number_variants: 3,
            max_variants_per_sentence: 75,
            neighbor_scan_limit: 50,
            seed: 0,
        }
    }
}

impl ManipulationConfig {
    pub fn validate(&self) -> Result<(), ManipulateError> {
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold <= 1.0) {
            return Err(ManipulateError::InvalidConfig("ratio_threshold must be in (0, 1]"));
        }
        if self.candidates_per_token == 0
            || self.number_variants == 0
            || self.max_variants_per_sentence == 0
            || self.neighbor_scan_limit == 0
        {
            return Err(ManipulateError::InvalidConfig("counts must be at least 1"));
        }
        Ok(())
    }

    pub fn with_targets<'a>(mut self, tags: impl IntoIterator<Item = &'a str>) -> Self {
        self.target_pos = tags.into_iter().map(String::from).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstitutionCandidate {
    pub token: String,
    pub similarity: f64,
    /// 0-based position in the scanned neighbor list.
    pub rank: usize,
    pub ratio: f64,
}

fn is_near_duplicate(ratio: f64, threshold: f64) -> bool {
    ratio > threshold || ratio >= 1.0
}

/// Scans the neighbors of `token` in rank order and keeps up to
/// `candidates_per_token` whose character ratio does not exceed the
/// threshold.
///
/// An out-of-vocabulary token returns the embedding error; callers treat it
/// as not substitutable.
pub fn select_substitutes<S: NeighborSource + ?Sized>(
    source: &S,
    token: &str,
    config: &ManipulationConfig,
) -> Result<Vec<SubstitutionCandidate>, EmbeddingError> {
    let neighbors = source.nearest(token, config.neighbor_scan_limit)?;
    let mut out = Vec::new();
    for (rank, n) in neighbors.into_iter().enumerate() {
        if out.len() == config.candidates_per_token {
            break;
        }
        let Ok(ratio) = char_ratio(token, &n.token) else { continue };
        if is_near_duplicate(ratio, config.ratio_threshold) {
            continue;
        }
        out.push(SubstitutionCandidate { token: n.token, similarity: n.similarity, rank, ratio });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DigitScript {
    Ascii,
    ArabicIndic,
    ExtendedArabicIndic,
}

impl DigitScript {
    fn of(c: char) -> Option<(Self, u32)> {
        match c {
            '0'..='9' => Some((Self::Ascii, c as u32 - '0' as u32)),
            '\u{0660}'..='\u{0669}' => Some((Self::ArabicIndic, c as u32 - 0x0660)),
            '\u{06F0}'..='\u{06F9}' => Some((Self::ExtendedArabicIndic, c as u32 - 0x06F0)),
            _ => None,
        }
    }

    fn digit(self, d: u32) -> char {
        let base = match self {
            Self::Ascii => '0' as u32,
            Self::ArabicIndic => 0x0660,
            Self::ExtendedArabicIndic => 0x06F0,
        };
        char::from_u32(base + d).unwrap_or('0')
    }
}

fn digit_script(token: &str) -> Option<DigitScript> {
    let mut script = None;
    for c in token.chars() {
        let (s, _) = DigitScript::of(c)?;
        match script {
            None => script = Some(s),
            Some(prev) if prev != s => return None,
            _ => {}
        }
    }
    script
}

/// True when the token is a non-empty run of digits in a single script.
pub fn is_digit_number(token: &str) -> bool {
    digit_script(token).is_some()
}

/// A random digit string of the same length and script, different from
/// the original, without a leading zero when longer than one digit.
pub fn substitute_number<R: Rng + ?Sized>(token: &str, rng: &mut R) -> Result<String, ManipulateError> {
    let script = digit_script(token).ok_or_else(|| ManipulateError::NotANumber(token.to_string()))?;
    let len = token.chars().count();
    loop {
        let candidate: String = (0..len)
            .map(|i| {
                let d = if i == 0 && len > 1 { rng.random_range(1..10) } else { rng.random_range(0..10) };
                script.digit(d)
            })
            .collect();
        if candidate != token {
            return Ok(candidate);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipulationKind {
    EmbeddingSwap,
    NumberRandomize,
    NegationDelete,
}

/// Provenance of one change to a sentence. `token_index` refers to the
/// position in the source sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulationRecord {
    pub token_index: usize,
    pub original: String,
    pub substitute: String,
    pub pos: String,
    pub kind: ManipulationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl ManipulationRecord {
    pub fn is_well_formed(&self) -> bool {
        let delete = self.kind == ManipulationKind::NegationDelete;
        let swap_ok = self.kind != ManipulationKind::EmbeddingSwap || (self.rank.is_some() && self.ratio.is_some());
        delete == self.substitute.is_empty() && swap_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManipulatedSentence {
    pub source_id: String,
    pub tokens: Vec<Token>,
    pub records: Vec<ManipulationRecord>,
}

impl ManipulatedSentence {
    pub fn text(&self) -> String {
        corpus::join_surfaces(&self.tokens)
    }
}

/// Replays `records` (sorted by `token_index`) on the source tokens.
pub fn apply_records(source: &[Token], records: &[ManipulationRecord]) -> Result<Vec<Token>, ManipulateError> {
    let mut out = Vec::with_capacity(source.len());
    let mut pending = records.iter().peekable();
    for (i, tok) in source.iter().enumerate() {
        match pending.next_if(|r| r.token_index == i) {
            Some(r) => {
                if r.original != tok.surface() {
                    return Err(ManipulateError::RecordMismatch(i));
                }
                if r.kind != ManipulationKind::NegationDelete {
                    out.push(Token::new(&r.substitute, tok.pos()).map_err(|_| ManipulateError::RecordMismatch(i))?);
                }
            }
            None => out.push(tok.clone()),
        }
    }
    match pending.next() {
        Some(r) => Err(ManipulateError::RecordMismatch(r.token_index)),
        None => Ok(out),
    }
}

/// Inverse of [`apply_records`] on surfaces: recovers the source words from
/// the manipulated words and their records.
pub fn restore_source<'a>(
    manipulated: &[&'a str],
    records: &'a [ManipulationRecord],
) -> Result<Vec<&'a str>, ManipulateError> {
    let mut out = Vec::with_capacity(manipulated.len() + records.len());
    let mut words = manipulated.iter();
    let mut pending = records.iter().peekable();
    loop {
        let i = out.len();
        if let Some(r) = pending.next_if(|r| r.token_index == i) {
            if r.kind != ManipulationKind::NegationDelete {
                match words.next() {
                    Some(w) if *w == r.substitute => {}
                    _ => return Err(ManipulateError::RecordMismatch(i)),
                }
            }
            out.push(r.original.as_str());
            continue;
        }
        match words.next() {
            Some(w) => out.push(w),
            None => break,
        }
    }
    match pending.next() {
        Some(r) => Err(ManipulateError::RecordMismatch(r.token_index)),
        None => Ok(out),
    }
}

/// Deletes the negative particle at `token_index`.
pub fn remove_negation(sentence: &Sentence, token_index: usize) -> Result<ManipulatedSentence, ManipulateError> {
    let tok = sentence.tokens().get(token_index).ok_or(ManipulateError::IndexOutOfRange(token_index))?;
    if tok.pos() != NEG_PART {
        return Err(ManipulateError::NotNegation { index: token_index, found: tok.pos().to_string() });
    }
    if sentence.len() == 1 {
        return Err(ManipulateError::WouldEmptySentence);
    }
    let record = negation_record(token_index, tok);
    let tokens = apply_records(sentence.tokens(), core::slice::from_ref(&record))?;
    Ok(ManipulatedSentence { source_id: sentence.id.clone(), tokens, records: vec![record] })
}

fn negation_record(index: usize, tok: &Token) -> ManipulationRecord {
    ManipulationRecord {
        token_index: index,
        original: tok.surface().to_string(),
        substitute: String::new(),
        pos: tok.pos().to_string(),
        kind: ManipulationKind::NegationDelete,
        rank: None,
        ratio: None,
    }
}

/// The replacement options for one eligible token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenOptions {
    pub token_index: usize,
    pub options: Vec<ManipulationRecord>,
}

/// Collects the options of every eligible token, left to right. Tokens that
/// end up with no option (out of vocabulary, or no neighbor under the
/// threshold) are left out.
pub fn token_options<S: NeighborSource + ?Sized>(
    sentence: &Sentence,
    source: &S,
    config: &ManipulationConfig,
) -> Vec<TokenOptions> {
    let mut rng = seed::keyed_rng(config.seed, &sentence.id);
    let mut all = Vec::new();
    for (i, tok) in sentence.tokens().iter().enumerate() {
        if !config.target_pos.contains(tok.pos()) {
            continue;
        }
        let options = if tok.pos() == NEG_PART {
            vec![negation_record(i, tok)]
        } else if tok.pos() == N_NUM && is_digit_number(tok.surface()) {
            number_options(i, tok, config.number_variants, &mut rng)
        } else {
            embedding_options(i, tok, source, config)
        };
        if !options.is_empty() {
            all.push(TokenOptions { token_index: i, options });
        }
    }
    all
}

fn number_options<R: Rng>(index: usize, tok: &Token, wanted: usize, rng: &mut R) -> Vec<ManipulationRecord> {
    let len = tok.surface().chars().count() as u32;
    // Distinct same-length values other than the original.
    let available = if len == 1 { 9 } else { 9 * 10u64.saturating_pow(len - 1) - 1 };
    let wanted = (wanted as u64).min(available) as usize;
    let mut seen: Vec<String> = Vec::with_capacity(wanted);
    while seen.len() < wanted {
        let Ok(n) = substitute_number(tok.surface(), rng) else { break };
        if !seen.contains(&n) {
            seen.push(n);
        }
    }
    seen.into_iter()
        .map(|n| ManipulationRecord {
            token_index: index,
            original: tok.surface().to_string(),
            substitute: n,
            pos: tok.pos().to_string(),
            kind: ManipulationKind::NumberRandomize,
            rank: None,
            ratio: None,
        })
        .collect()
}

fn embedding_options<S: NeighborSource + ?Sized>(
    index: usize,
    tok: &Token,
    source: &S,
    config: &ManipulationConfig,
) -> Vec<ManipulationRecord> {
    let Ok(cands) = select_substitutes(source, tok.surface(), config) else { return Vec::new() };
    cands
        .into_iter()
        .map(|c| ManipulationRecord {
            token_index: index,
            original: tok.surface().to_string(),
            substitute: c.token,
            pos: tok.pos().to_string(),
            kind: ManipulationKind::EmbeddingSwap,
            rank: Some(c.rank),
            ratio: Some(c.ratio),
        })
        .collect()
}

/// Number of variants [`generate_variants`] will produce before the cap.
pub fn variant_count(options: &[TokenOptions]) -> usize {
    if options.is_empty() {
        return 0;
    }
    options.iter().fold(1usize, |acc, o| acc.saturating_mul(o.options.len()))
}

/// Every combination of options, in lexicographic order of option indices
/// with the leftmost token as the outermost axis, capped at
/// `max_variants_per_sentence`.
pub fn generate_variants<S: NeighborSource + ?Sized>(
    sentence: &Sentence,
    source: &S,
    config: &ManipulationConfig,
) -> Vec<ManipulatedSentence> {
    let options = token_options(sentence, source, config);
    enumerate_variants(sentence, &options, config.max_variants_per_sentence)
}

pub fn enumerate_variants(sentence: &Sentence, options: &[TokenOptions], cap: usize) -> Vec<ManipulatedSentence> {
    let mut out = Vec::new();
    if options.is_empty() {
        return out;
    }
    let mut choice = vec![0usize; options.len()];
    loop {
        if out.len() == cap {
            break;
        }
        let records: Vec<ManipulationRecord> =
            options.iter().zip(&choice).map(|(o, &c)| o.options[c].clone()).collect();
        if let Ok(tokens) = apply_records(sentence.tokens(), &records) {
            if !tokens.is_empty() {
                out.push(ManipulatedSentence { source_id: sentence.id.clone(), tokens, records });
            }
        }
        // Odometer increment, rightmost axis fastest.
        let mut axis = options.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            choice[axis] += 1;
            if choice[axis] < options[axis].options.len() {
                break;
            }
            choice[axis] = 0;
        }
    }
    out
}
