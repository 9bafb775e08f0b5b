//! Random token-level text perturbation for text-pair corpora.
//!
//! Five edit operations over tokenized text — synonym replacement, random
//! insertion, random swap, random deletion and a random mix of those — with
//! deduplicated output, cross pairing against the untouched partner text,
//! label-balanced corpus splitting, and a small bag-of-words matching model
//! to measure the effect of augmentation on training.
//!
//! Everything is deterministic under an explicit seed, including parallel
//! corpus augmentation.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod lexicon;
pub mod matcher;
pub mod pairs;
pub mod text;

pub use engine::{augment, num_edits, EditOp, RedaConfig, ALL_OPS};
pub use error::{Error, Result};
pub use lexicon::SynonymLexicon;
pub use matcher::{Metrics, TrainConfig};
pub use pairs::{
    augment_corpus, balanced_split, corpus_stats, Corpus, PairExample, SplitName,
};
pub use text::{LanguageMode, TokenSeq, Tokenizer};
