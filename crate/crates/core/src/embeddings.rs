//! Word vectors and exact cosine nearest-neighbor search.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::Warning;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("`{0}` is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cosine is undefined for a zero vector")]
    ZeroNorm,
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("row for `{token}` has {found} components, expected {expected}")]
    RowLength { token: String, expected: usize, found: usize },
    #[error("row for `{0}` contains a non-finite component")]
    NonFinite(String),
    #[error("empty token")]
    EmptyToken,
    #[error("k must be at least 1")]
    ZeroK,
}

impl EmbeddingError {
    pub fn is_oov(&self) -> bool {
        matches!(self, EmbeddingError::OutOfVocabulary(_))
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

fn squared_norm(a: &[f32]) -> f64 {
    a.iter().map(|x| f64::from(*x) * f64::from(*x)).sum()
}

/// `dot / sqrt(|a|^2 |b|^2)`; identical vectors give exactly 1.
fn cosine_from_parts(dot: f64, sq_a: f64, sq_b: f64) -> f64 {
    clamp_unit(dot / libm::sqrt(sq_a * sq_b))
}

/// Cosine similarity, computed in `f64`.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionMismatch(a.len(), b.len()));
    }
    let (na, nb) = (squared_norm(a), squared_norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok(cosine_from_parts(dot(a, b), na, nb))
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub token: String,
    pub similarity: f64,
}

/// Ranking order: higher similarity first, then lexicographic token.
pub fn rank_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.similarity.total_cmp(&a.similarity).then_with(|| a.token.cmp(&b.token))
}

/// Anything that can list the nearest words of a token, best first.
///
/// [`EmbeddingIndex`] is the real implementation; tests substitute fixed
/// neighbor lists.
pub trait NeighborSource {
    fn nearest(&self, token: &str, k: usize) -> Result<Vec<Neighbor>, EmbeddingError>;
}

/// An immutable vocabulary of vectors with precomputed norms.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    dim: usize,
    vocab: Vec<String>,
    lookup: BTreeMap<String, usize>,
    vectors: Vec<f32>,
    /// Squared L2 norm per row.
    norms: Vec<f64>,
}

impl PartialEq for EmbeddingIndex {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.vocab == other.vocab
            && self.vectors.len() == other.vectors.len()
            && self.vectors.iter().zip(&other.vectors).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug)]
pub struct IndexBuilder {
    dim: usize,
    vocab: Vec<String>,
    lookup: BTreeMap<String, usize>,
    vectors: Vec<f32>,
    warnings: Vec<Warning>,
}

impl IndexBuilder {
    pub fn new(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDimension);
        }
        Ok(Self { dim, vocab: Vec::new(), lookup: BTreeMap::new(), vectors: Vec::new(), warnings: Vec::new() })
    }

    /// Adds a row. A repeated token keeps its first vector and records a
    /// warning.
    pub fn push(&mut self, token: &str, vector: &[f32]) -> Result<(), EmbeddingError> {
        if token.is_empty() {
            return Err(EmbeddingError::EmptyToken);
        }
        if vector.len() != self.dim {
            return Err(EmbeddingError::RowLength { token: token.into(), expected: self.dim, found: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite(token.into()));
        }
        if self.lookup.contains_key(token) {
            self.warnings.push(Warning::new("duplicate_token", format!("`{token}` repeated; keeping first vector")));
            return Ok(());
        }
        self.lookup.insert(token.into(), self.vocab.len());
        self.vocab.push(token.into());
        self.vectors.extend_from_slice(vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn finish(self) -> (EmbeddingIndex, Vec<Warning>) {
        let norms = self.vectors.chunks_exact(self.dim).map(squared_norm).collect();
        let index = EmbeddingIndex { dim: self.dim, vocab: self.vocab, lookup: self.lookup, vectors: self.vectors, norms };
        (index, self.warnings)
    }
}

#[derive(PartialEq)]
struct Scored<'a> {
    similarity: f64,
    token: &'a str,
}

impl Eq for Scored<'_> {}

impl Ord for Scored<'_> {
    // "Greater" means better ranked, so the heap top is the worst kept entry
    // when the order is reversed.
    fn cmp(&self, other: &Self) -> Ordering {
        self.similarity.total_cmp(&other.similarity).then_with(|| other.token.cmp(self.token))
    }
}

impl PartialOrd for Scored<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl EmbeddingIndex {
    pub fn builder(dim: usize) -> Result<IndexBuilder, EmbeddingError> {
        IndexBuilder::new(dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn contains(&self, token: &str) -> bool {
        self.lookup.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.lookup.get(token).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vocab.iter().map(String::as_str).zip(self.vectors.chunks_exact(self.dim))
    }

    fn query(&self, token: &str, k: usize) -> Result<(usize, f64), EmbeddingError> {
        if k == 0 {
            return Err(EmbeddingError::ZeroK);
        }
        let q = *self.lookup.get(token).ok_or_else(|| EmbeddingError::OutOfVocabulary(token.into()))?;
        let qn = self.norms[q];
        if qn == 0.0 {
            return Err(EmbeddingError::ZeroNorm);
        }
        Ok((q, qn))
    }

    /// Similarity of every other usable row to row `q`. Zero rows are
    /// skipped since their cosine is undefined.
    fn scores(&self, q: usize, qn: f64) -> impl Iterator<Item = Scored<'_>> + '_ {
        let qv = self.row(q);
        (0..self.vocab.len()).filter(move |&i| i != q && self.norms[i] != 0.0).map(move |i| Scored {
            similarity: cosine_from_parts(dot(qv, self.row(i)), qn, self.norms[i]),
            token: &self.vocab[i],
        })
    }

    /// Top-`k` neighbors of `token` by cosine, excluding the token itself.
    ///
    /// Uses a bounded heap over one pass of the matrix; the result is
    /// identical to [`EmbeddingIndex::k_nearest_exhaustive`].
    pub fn k_nearest(&self, token: &str, k: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        let (q, qn) = self.query(token, k)?;
        let mut heap: BinaryHeap<core::cmp::Reverse<Scored<'_>>> = BinaryHeap::with_capacity(k + 1);
        for s in self.scores(q, qn) {
            if heap.len() < k {
                heap.push(core::cmp::Reverse(s));
            } else if let Some(worst) = heap.peek() {
                if s > worst.0 {
                    heap.pop();
                    heap.push(core::cmp::Reverse(s));
                }
            }
        }
        let mut out: Vec<Neighbor> = heap
            .into_iter()
            .map(|r| Neighbor { token: r.0.token.into(), similarity: r.0.similarity })
            .collect();
        out.sort_by(rank_order);
        Ok(out)
    }

    /// Scores and sorts the whole vocabulary, then truncates.
    pub fn k_nearest_exhaustive(&self, token: &str, k: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        let (q, qn) = self.query(token, k)?;
        let mut all: Vec<Neighbor> =
            self.scores(q, qn).map(|s| Neighbor { token: s.token.into(), similarity: s.similarity }).collect();
        all.sort_by(rank_order);
        all.truncate(k);
        Ok(all)
    }
}

impl NeighborSource for EmbeddingIndex {
    fn nearest(&self, token: &str, k: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        self.k_nearest(token, k)
    }
}

impl<T: NeighborSource + ?Sized> NeighborSource for &T {
    fn nearest(&self, token: &str, k: usize) -> Result<Vec<Neighbor>, EmbeddingError> {
        (**self).nearest(token, k)
    }
}
