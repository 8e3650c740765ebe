//! Parallel variant generation.

use rayon::prelude::*;
use textmanip_core::manipulate::generate_variants;
use textmanip_core::{EmbeddingIndex, ManipulatedSentence, ManipulationConfig, Sentence};

/// Variants for every sentence, in input order, computed on `workers`
/// threads. Each sentence draws from its own keyed random stream, so the
/// result does not depend on the worker count.
pub fn generate_parallel(
    sentences: &[Sentence],
    index: &EmbeddingIndex,
    config: &ManipulationConfig,
    workers: usize,
) -> Result<Vec<Vec<ManipulatedSentence>>, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    Ok(pool.install(|| sentences.par_iter().map(|s| generate_variants(s, index, config)).collect()))
}
