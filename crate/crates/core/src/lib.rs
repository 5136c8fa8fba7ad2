//! Synonymous keyword retrieval for frequent search queries.
//!
//! Queries and keywords are canonicalized into bags of core words, a
//! translation model is trained on seed query/keyword pairs, and every
//! frequent query is decoded with beam search constrained to a prefix tree
//! of the keyword repository. Decoded forms are joined back to the original
//! keywords, merged into the expanded pair set and optionally filtered by a
//! discriminator.

pub mod dataset;
pub mod discriminant;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod synthetic;
pub mod text;
pub mod translation;
pub mod trie;

pub use dataset::{delta, PairDataset};
pub use error::{Error, Result};
pub use text::{bcw, canonicalize, core_words, tokenize, CanonicalForm, Canonicalizer, Strategy};
pub use trie::{build_trie, KeywordTrie};
