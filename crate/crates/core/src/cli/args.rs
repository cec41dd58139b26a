//! Command-line and config-file options.
//!
//! Every subcommand option is optional at parse time so that values can be
//! layered: flags first, then the matching table of the `--config` TOML
//! file, then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::embed::EmbeddingFormat;
use crate::error::{Error, Result};
use crate::mapper::MappingMethod;
use crate::scorer::SimilarityMethod;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "clsts",
    version,
    about = "Cross-lingual semantic textual similarity toolkit"
)]
pub struct Cli {
    /// TOML file with default option values (flags take precedence).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every source of randomness.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for batch scoring.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a translation matrix from word translation pairs.
    TrainMapping(TrainArgs),
    /// Report precision@k of a translation matrix on held-out pairs.
    EvalMapping(EvalMappingArgs),
    /// Score sentence pairs.
    Score(ScoreArgs),
    /// Pearson correlation against an STS dataset.
    EvalSts(EvalStsArgs),
    /// Mine parallel sentences from a comparable document pair.
    Mine(MineArgs),
    /// Character-level recall of plagiarism fragment retrieval.
    Plagiarism(PlagiarismArgs),
    /// P@k as a function of the number of training pairs.
    AblatePairs(AblateArgs),
}

/// Global values that may also come from the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub train_mapping: Option<TrainArgs>,
    pub eval_mapping: Option<EvalMappingArgs>,
    pub score: Option<ScoreArgs>,
    pub eval_sts: Option<EvalStsArgs>,
    pub mine: Option<MineArgs>,
    pub plagiarism: Option<PlagiarismArgs>,
    pub ablate_pairs: Option<AblateArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// Field-wise `self.or(fallback)`.
pub trait Merge: Sized {
    fn merge(self, fallback: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($field:ident),* $(,)? } $(; nested $($nested:ident),*)?) => {
        impl Merge for $ty {
            fn merge(self, fallback: Self) -> Self {
                Self {
                    $($field: self.$field.or(fallback.$field),)*
                    $($($nested: self.$nested.merge(fallback.$nested),)*)?
                }
            }
        }
    };
}

/// Embedding inputs shared by most subcommands.
#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SpaceArgs {
    /// Source-language embeddings (word2vec or GloVe text).
    #[arg(long)]
    pub source_emb: Option<PathBuf>,
    /// Target-language embeddings; omit for monolingual use of --source-emb.
    #[arg(long)]
    pub target_emb: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<EmbeddingFormat>,
    /// Keep only the first N words of each embedding file.
    #[arg(long)]
    pub max_vocab: Option<usize>,
    #[arg(long)]
    pub source_lang: Option<String>,
    #[arg(long)]
    pub target_lang: Option<String>,
}

merge_fields!(SpaceArgs {
    source_emb,
    target_emb,
    format,
    max_vocab,
    source_lang,
    target_lang
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OptimizerArgs {
    #[arg(long, value_enum)]
    pub method: Option<MappingMethod>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Ridge term of the closed-form solution.
    #[arg(long)]
    pub ridge: Option<f64>,
}

merge_fields!(OptimizerArgs {
    method,
    learning_rate,
    batch_size,
    epochs,
    ridge
});

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,
    /// Translation pairs, one `source<TAB>target` per line.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Where to write the matrix.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

merge_fields!(TrainArgs { pairs, out }; nested space, optimizer);

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvalMappingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Held-out translation pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Ranks to report (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
}

merge_fields!(EvalMappingArgs { matrix, pairs, ranks }; nested space);

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ScoreArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<SimilarityMethod>,
    /// Source-language sentence (with --target-text).
    #[arg(long, requires = "target_text")]
    pub source_text: Option<String>,
    #[arg(long, requires = "source_text")]
    pub target_text: Option<String>,
    /// TSV of `source<TAB>target[<TAB>...]` sentence pairs.
    #[arg(long, conflicts_with = "source_text")]
    pub input: Option<PathBuf>,
}

merge_fields!(ScoreArgs { matrix, method, source_text, target_text, input }; nested space);

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvalStsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<SimilarityMethod>,
    /// STS file of `sent_a<TAB>sent_b<TAB>gold` lines.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

merge_fields!(EvalStsArgs { matrix, method, dataset }; nested space);

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct MineArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<SimilarityMethod>,
    /// Source-language document, one sentence per line.
    #[arg(long)]
    pub doc_s: Option<PathBuf>,
    /// Target-language document, one sentence per line.
    #[arg(long)]
    pub doc_t: Option<PathBuf>,
    /// Gold `index_s<TAB>index_t` alignments.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Emit pairs scoring at least this value.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Also write the emitted pairs to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

merge_fields!(MineArgs { matrix, method, doc_s, doc_t, gold, tau, output }; nested space);

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct PlagiarismArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<SimilarityMethod>,
    /// Suspicious document (source language), one sentence per line.
    #[arg(long)]
    pub suspicious: Option<PathBuf>,
    /// Candidate source documents (target language); the file stem is the document id.
    #[arg(long = "source-doc", num_args = 1..)]
    pub source_docs: Option<Vec<PathBuf>>,
    /// Gold cases, `susp_start<TAB>susp_end<TAB>source_doc_id<TAB>src_start<TAB>src_end`.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Sentences per fragment.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// Retrieval depths to report (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
}

merge_fields!(PlagiarismArgs { matrix, method, suspicious, source_docs, gold, window, stride, ks }; nested space);

#[derive(Debug, Default, Clone, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct AblateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerArgs,
    /// Training pairs; subsets are taken from the top of the file.
    #[arg(long)]
    pub train_pairs: Option<PathBuf>,
    #[arg(long)]
    pub test_pairs: Option<PathBuf>,
    /// Training-set sizes to sweep (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
}

merge_fields!(AblateArgs { train_pairs, test_pairs, sizes, ranks }; nested space, optimizer);

/// Unwraps an option that must be present after layering.
pub fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Domain(format!("missing required option --{flag}")))
}
