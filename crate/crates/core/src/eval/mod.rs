//! Scoring generated paths against implicit-knowledge references, model
//! metrics, Random-class construction, annotation agreement and corpus
//! statistics.

mod annotation;
mod metrics;
mod random_class;
mod reference;
mod report;
mod stats;

use crate::backends::BackendError;
use crate::kg::Relation;

pub use annotation::{paired_labels, read_annotations, AnnotationRecord};
pub use metrics::{cohens_kappa, hits_at_k, weighted_prf, LabelScores, PrfReport};
pub use random_class::{build_random_class, RandomKind, RandomPair};
pub use reference::{
    build_silver_path, encode_and_cosim, linearize, token_match_f1, ReferenceEncoding, ReferenceKind, SilverPath,
    TemplateTable, TokenF1,
};
pub use report::{evaluate, generated_triples, EvalItem, MetricReport, Setting, SettingScores, SilverSource};
pub use stats::{corpus_stats, render_table, CorpusStats, MethodStats};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no template for relation {0}")]
    MissingTemplate(Relation),
    #[error("template line {line}: {reason}")]
    Template { line: usize, reason: String },
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no instances to score")]
    EmptyInput,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("only {available} {kind} candidates for {needed} requested")]
    TooFewCandidates { kind: &'static str, needed: usize, available: usize },
    #[error("annotation line {line}: {reason}")]
    Annotation { line: usize, reason: String },
    #[error("setting ({setting}) needs {field} references but the corpus has none")]
    MissingReference { setting: char, field: &'static str },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
