//! Direct links from relation classification, multihop paths from
//! similarity-guided forward chaining, and the rule that combines them.

mod chain;
mod combine;
mod direct;
mod record;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::backends::BackendError;
use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType};

pub use chain::{chain, ChainOutcome, ChainParams};
pub use combine::{combine, ConnectResult, Verdict};
pub use direct::{link_direct, link_pair, DirectLink, DEFAULT_THRESHOLD};
pub use record::{ConnectRecord, HopRecord, LinkRecord, PathRecord};

#[derive(Debug, thiserror::Error)]
pub enum PathfindError {
    #[error("pair {pair}: {source}")]
    Backend {
        pair: Box<ConceptPair>,
        #[source]
        source: BackendError,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("evidence does not belong to pair {expected}: {found}")]
    PairMismatch { expected: ConceptPair, found: String },
    #[error("malformed record: {0}")]
    Record(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub source: Concept,
    pub relation: RelationType,
    pub target: Concept,
    pub confidence: f64,
}

impl Hop {
    /// The same fact read the other way: (t, r⁻¹, s).
    pub fn reversed(&self) -> Hop {
        Hop {
            source: self.target.clone(),
            relation: self.relation.toggled().expect("hop relations are never Random"),
            target: self.source.clone(),
            confidence: self.confidence,
        }
    }

    /// The underlying triple in (head, relation, tail) order.
    pub fn as_triple(&self) -> (&Concept, Relation, &Concept) {
        if self.relation.inverted {
            (&self.target, self.relation.relation, &self.source)
        } else {
            (&self.source, self.relation.relation, &self.target)
        }
    }
}

/// Which component produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Generator,
    Classifier,
    Static,
}

/// The search direction a path was found in, before it was normalized to
/// S1→S2 presentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathDirection {
    #[serde(rename = "s1->s2")]
    Forward,
    #[serde(rename = "s2->s1")]
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgePath {
    pub hops: Vec<Hop>,
    pub origin: Origin,
    pub direction: PathDirection,
    pub terminal_similarity: f64,
    /// Ranking score, set for static-baseline paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

pub const MAX_PATH_HOPS: usize = 3;

impl KnowledgePath {
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Source of the first hop followed by every hop target.
    pub fn nodes(&self) -> Vec<&Concept> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        if let Some(first) = self.hops.first() {
            out.push(&first.source);
        }
        out.extend(self.hops.iter().map(|h| &h.target));
        out
    }

    pub fn mean_confidence(&self) -> f64 {
        if self.hops.is_empty() {
            return 0.0;
        }
        self.hops.iter().map(|h| h.confidence).sum::<f64>() / self.hops.len() as f64
    }

    /// Node and relation sequence; two paths with equal keys state the same facts.
    pub fn identity(&self) -> Vec<(&str, RelationType, &str)> {
        self.hops.iter().map(|h| (h.source.as_str(), h.relation, h.target.as_str())).collect()
    }

    /// 1..=3 hops, chained, acyclic, never `Random`.
    pub fn check_shape(&self) -> Result<(), String> {
        if self.hops.is_empty() || self.hops.len() > MAX_PATH_HOPS {
            return Err(format!("path has {} hops", self.hops.len()));
        }
        for w in self.hops.windows(2) {
            if w[0].target != w[1].source {
                return Err(format!("hop ending at {} is followed by hop from {}", w[0].target, w[1].source));
            }
        }
        let nodes = self.nodes();
        let unique: std::collections::HashSet<_> = nodes.iter().collect();
        if unique.len() != nodes.len() {
            return Err("path revisits a concept".into());
        }
        if self.hops.iter().any(|h| h.relation.relation == Relation::Random) {
            return Err("path uses the Random label".into());
        }
        Ok(())
    }
}

/// Ordering used for every path list: terminal similarity desc, mean hop
/// confidence desc, then node/relation sequence and direction.
pub fn path_order(a: &KnowledgePath, b: &KnowledgePath) -> Ordering {
    b.terminal_similarity
        .total_cmp(&a.terminal_similarity)
        .then_with(|| b.mean_confidence().total_cmp(&a.mean_confidence()))
        .then_with(|| {
            let na: Vec<&str> = a.nodes().iter().map(|c| c.as_str()).collect();
            let nb: Vec<&str> = b.nodes().iter().map(|c| c.as_str()).collect();
            na.cmp(&nb)
        })
        .then_with(|| {
            let ra: Vec<RelationType> = a.hops.iter().map(|h| h.relation).collect();
            let rb: Vec<RelationType> = b.hops.iter().map(|h| h.relation).collect();
            ra.cmp(&rb)
        })
        .then_with(|| a.direction.cmp(&b.direction))
}
