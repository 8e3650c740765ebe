//! Core algorithms for generating machine-manipulated news text.
//!
//! Sentences tagged with parts of speech are rewritten by swapping selected
//! tokens for nearby words in an embedding space, while a character-level
//! similarity ratio keeps inflected forms of the same word out of the
//! candidate list. Around that sit the pieces needed to turn the output into
//! labeled datasets, measure annotator agreement, and train a small baseline
//! detector.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the annotation
//! service and the command line live in the `textmanip` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod annotation;
pub mod corpus;
pub mod datagen;
pub mod detect;
pub mod embeddings;
pub mod manipulate;
mod seed;

pub use corpus::{Article, Category, CategoryMap, Sentence, SplitRatios, Token, Warning};
pub use embeddings::{cosine, EmbeddingIndex, Neighbor, NeighborSource};
pub use manipulate::{char_ratio, ManipulationConfig, ManipulationRecord, ManipulatedSentence};
pub use seed::derive_seed;
