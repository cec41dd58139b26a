//! Unsupervised cross-lingual semantic textual similarity.
//!
//! Monolingual word embeddings of two languages are tied together by a
//! linear translation matrix learned from a small set of word translation
//! pairs ([`mapper`]). Sentences are then compared in the shared space with
//! three scores ([`scorer`]): greedy association, optimal alignment (solved
//! exactly by [`assignment`]) and aggregation. [`evalkit`] and [`apps`]
//! provide the STS, lexicon, parallel-mining and plagiarism evaluations, and
//! [`cli`] wires everything into the `clsts` command.

pub mod apps;
pub mod assignment;
pub mod cli;
pub mod embed;
pub mod error;
pub mod evalkit;
pub mod mapper;
mod par;
pub mod scorer;
pub mod textprep;
pub mod vecops;

pub use embed::{EmbeddingFormat, EmbeddingSpace};
pub use error::{Error, Result};
pub use mapper::{BilingualSpace, MappingMethod, TranslationMatrix, TranslationPairSet};
pub use scorer::{SentenceScore, SimilarityMethod};
pub use textprep::TokenBag;
