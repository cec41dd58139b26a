//! Extrinsic pipelines built on sentence scoring: parallel-sentence mining
//! from comparable documents and cross-lingual plagiarism fragment retrieval.

pub mod mining;
pub mod plagiarism;

pub use mining::{mine_parallel, ComparablePair, MiningConfig, MiningResult};
pub use plagiarism::{
    char_recall_at_k, rank_fragments, segment_document, FragmentRanking, FragmentedDoc,
    PlagiarismCase, Retrieval,
};
