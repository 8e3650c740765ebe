//! Tagged sentences, article metadata, text normalization and splits.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("token surface is empty")]
    EmptySurface,
    #[error("token tag is empty")]
    EmptyTag,
    #[error("sentence `{0}` has no tokens")]
    EmptySentence(String),
    #[error("article field `{0}` is empty")]
    EmptyArticleField(&'static str),
    #[error("`{0}` is not a canonical category")]
    UnknownCanonical(String),
    #[error("split ratios must be positive and sum to 1 (got {train}, {dev}, {test})")]
    BadRatios { train: f64, dev: f64, test: f64 },
    #[error("nothing to split")]
    EmptySplitInput,
}

/// A non-fatal diagnostic produced while loading or normalizing data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub detail: String,
}

impl Warning {
    pub fn new(code: &str, detail: impl Into<String>) -> Self {
        Self { code: code.to_string(), detail: detail.into() }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.detail)
    }
}

/// A word with its part-of-speech tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    surface: String,
    pos: String,
}

impl Token {
    /// The surface is NFC-normalized; the tag is kept byte for byte.
    pub fn new(surface: &str, pos: &str) -> Result<Self, CorpusError> {
        if surface.is_empty() {
            return Err(CorpusError::EmptySurface);
        }
        if pos.is_empty() {
            return Err(CorpusError::EmptyTag);
        }
        Ok(Self { surface: surface.nfc().collect(), pos: pos.to_string() })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn pos(&self) -> &str {
        &self.pos
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    tokens: Vec<Token>,
    pub source_article: Option<String>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<Self, CorpusError> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence(id));
        }
        Ok(Self { id, tokens, source_article: None })
    }

    pub fn with_source_article(mut self, article: impl Into<String>) -> Self {
        self.source_article = Some(article.into());
        self
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Surfaces joined by single spaces.
    pub fn text(&self) -> String {
        join_surfaces(&self.tokens)
    }
}

pub(crate) fn join_surfaces(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.surface());
    }
    out
}

/// One news article and the metadata documented for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub newspaper_name_ar: String,
    pub newspaper_name_en: String,
    pub country: String,
    pub newspaper_link: String,
    pub title: String,
    pub content: String,
    #[serde(default)]
    pub summary: Option<String>,
    #[serde(default)]
    pub author: Option<String>,
    pub url: String,
    pub date: String,
    pub topic: String,
}

impl Article {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.title.trim().is_empty() {
            return Err(CorpusError::EmptyArticleField("title"));
        }
        if self.content.trim().is_empty() {
            return Err(CorpusError::EmptyArticleField("content"));
        }
        Ok(())
    }
}

/// The seventeen thematic categories, plus a sentinel for unmapped input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Politics,
    History,
    Society,
    Media,
    Entertainments,
    Weather,
    Sports,
    #[serde(rename = "Social Media")]
    SocialMedia,
    Health,
    #[serde(rename = "Culture and Art")]
    CultureAndArt,
    Economy,
    Religion,
    Education,
    Technology,
    Fashion,
    #[serde(rename = "Local News")]
    LocalNews,
    #[serde(rename = "International News")]
    InternationalNews,
    Unknown,
}

impl Category {
    pub const CANONICAL: [Category; 17] = [
        Category::Politics,
        Category::History,
        Category::Society,
        Category::Media,
        Category::Entertainments,
        Category::Weather,
        Category::Sports,
        Category::SocialMedia,
        Category::Health,
        Category::CultureAndArt,
        Category::Economy,
        Category::Religion,
        Category::Education,
        Category::Technology,
        Category::Fashion,
        Category::LocalNews,
        Category::InternationalNews,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Politics => "Politics",
            Category::History => "History",
            Category::Society => "Society",
            Category::Media => "Media",
            Category::Entertainments => "Entertainments",
            Category::Weather => "Weather",
            Category::Sports => "Sports",
            Category::SocialMedia => "Social Media",
            Category::Health => "Health",
            Category::CultureAndArt => "Culture and Art",
            Category::Economy => "Economy",
            Category::Religion => "Religion",
            Category::Education => "Education",
            Category::Technology => "Technology",
            Category::Fashion => "Fashion",
            Category::LocalNews => "Local News",
            Category::InternationalNews => "International News",
            Category::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = CorpusError;

    /// Accepts canonical names only (case and spacing insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = category_key(s);
        Category::CANONICAL
            .iter()
            .copied()
            .find(|c| category_key(c.as_str()) == key)
            .ok_or_else(|| CorpusError::UnknownCanonical(s.to_string()))
    }
}

fn category_key(raw: &str) -> String {
    let mut key = String::new();
    for word in raw.split_whitespace() {
        if !key.is_empty() {
            key.push(' ');
        }
        key.push_str(&word.nfc().collect::<String>().to_lowercase());
    }
    key
}

/// Maps raw site categories onto the canonical set.
///
/// Canonical names always map to themselves; further entries come from a
/// config file so the dictionary can be edited without a rebuild.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    entries: BTreeMap<String, Category>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        let entries = Category::CANONICAL.iter().map(|c| (category_key(c.as_str()), *c)).collect();
        Self { entries }
    }
}

impl CategoryMap {
    pub fn from_entries<'a, I>(entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut map = Self::default();
        for (raw, canonical) in entries {
            let category = canonical.parse::<Category>()?;
            map.entries.insert(category_key(raw), category);
        }
        Ok(map)
    }

    pub fn get(&self, raw: &str) -> Option<Category> {
        self.entries.get(&category_key(raw)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Looks up `raw`, falling back to [`Category::Unknown`] with a warning.
pub fn normalize_category(raw: &str, map: &CategoryMap, warnings: &mut Vec<Warning>) -> Category {
    match map.get(raw) {
        Some(c) => c,
        None => {
            warnings.push(Warning::new("unmapped_category", raw));
            Category::Unknown
        }
    }
}

const TATWEEL: char = '\u{0640}';

fn is_arabic_letter(c: char) -> bool {
    matches!(c,
        '\u{0620}'..='\u{063F}'
        | '\u{0641}'..='\u{064A}'
        | '\u{066E}'..='\u{066F}'
        | '\u{0671}'..='\u{06D3}'
        | '\u{06D5}'
        | '\u{06EE}'..='\u{06EF}'
        | '\u{06FA}'..='\u{06FC}'
        | '\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08C9}'
        | '\u{FB50}'..='\u{FDFB}'
        | '\u{FE70}'..='\u{FEFC}')
        && c.is_alphabetic()
}

fn is_arabic_mark(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{065F}' | '\u{0670}')
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (matches!(c, '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}') && c.is_alphabetic())
}

/// ASCII, Arabic-Indic or extended Arabic-Indic digit.
pub fn is_digit(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}')
}

fn is_letter(c: char) -> bool {
    is_arabic_letter(c) || is_latin_letter(c)
}

fn is_zero_width(c: char) -> bool {
    matches!(c, '\u{200B}'..='\u{200F}' | '\u{2060}' | '\u{FEFF}' | '\u{00AD}')
}

fn is_url(word: &str) -> bool {
    let lower = word.to_ascii_lowercase();
    lower.contains("://") || lower.starts_with("www.")
}

/// Light cleanup applied to text before embedding lookups.
///
/// URLs are dropped, then every character that is not an Arabic or Latin
/// letter, an Arabic vowel mark or a digit becomes a space (this removes
/// punctuation, emoji and symbol emoticons). Tatweel and zero-width format
/// characters are deleted outright. Letter runs of three or more are
/// collapsed to a single letter; doubled letters survive. Whitespace is
/// collapsed and trimmed.
pub fn normalize_text(raw: &str) -> String {
    let composed: String = raw.nfc().collect();

    let mut filtered = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if is_url(word) {
            continue;
        }
        filtered.push(' ');
        for c in word.chars() {
            if c == TATWEEL || is_zero_width(c) {
                continue;
            }
            if is_letter(c) || is_arabic_mark(c) || is_digit(c) {
                filtered.push(c);
            } else {
                filtered.push(' ');
            }
        }
    }
    // Deleting tatweel can leave a base letter next to a combining mark.
    let recomposed: String = filtered.nfc().collect();

    let mut out = String::with_capacity(recomposed.len());
    let chars: Vec<char> = recomposed.chars().collect();
    let mut i = 0;
    let mut pending_space = false;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            pending_space = true;
            i += 1;
            continue;
        }
        let mut run = 1;
        while i + run < chars.len() && chars[i + run] == c {
            run += 1;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        let keep = if run >= 3 && is_letter(c) { 1 } else { run };
        for _ in 0..keep {
            out.push(c);
        }
        i += run;
    }
    out
}

/// Train/dev/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.8, dev: 0.1, test: 0.1 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self, CorpusError> {
        let r = Self { train, dev, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let all = [self.train, self.dev, self.test];
        let ok = all.iter().all(|x| x.is_finite() && *x > 0.0)
            && libm::fabs(self.train + self.dev + self.test - 1.0) <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(CorpusError::BadRatios { train: self.train, dev: self.dev, test: self.test })
        }
    }

    /// Split sizes for `n` items: dev and test are floored, the remainder
    /// goes to train.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let take = |r: f64| libm::floor(n as f64 * r + 1e-9) as usize;
        let dev = take(self.dev).min(n);
        let test = take(self.test).min(n - dev);
        (n - dev - test, dev, test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle followed by a cut according to `ratios`.
pub fn split_items<T>(mut items: Vec<T>, ratios: SplitRatios, seed: u64) -> Result<Splits<T>, CorpusError> {
    ratios.validate()?;
    if items.is_empty() {
        return Err(CorpusError::EmptySplitInput);
    }
    let (n_train, n_dev, _) = ratios.sizes(items.len());
    items.shuffle(&mut seed::rng(seed));
    let mut rest = items.split_off(n_train);
    let test = rest.split_off(n_dev);
    Ok(Splits { train: items, dev: rest, test })
}

/// Splits whole articles, so no article straddles two splits.
pub fn split_articles(articles: Vec<Article>, ratios: SplitRatios, seed: u64) -> Result<Splits<Article>, CorpusError> {
    split_items(articles, ratios, seed)
}
