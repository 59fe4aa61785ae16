//! Static-graph baseline: a focused subgraph around a sentence pair's
//! concepts, node centrality, ranked paths of at most three hops, and optional
//! relabeling of vague relations by a classifier.

mod centrality;
mod rank;
mod subgraph;

use crate::backends::BackendError;
use crate::extract::ConceptPair;

pub use centrality::{closeness, node_scores, pagerank, NodeScores, PageRankParams};
pub use rank::{rank_paths, replace_vague, PathScoring, ReplaceStats};
pub use subgraph::{build_subgraph, SeedConnection, Subgraph};

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("no seed concepts given")]
    EmptySeeds,
    #[error("concept {0:?} is not in the subgraph")]
    SeedMissing(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("pair {pair}: {source}")]
    Backend {
        pair: Box<ConceptPair>,
        #[source]
        source: BackendError,
    },
}
