//! ConceptNet-style triple store: relation labels, concept normalization,
//! loading, indexing and inverse-relation closure.

mod concept;
mod graph;
mod relation;

pub(crate) use concept::normalize_text;
pub use concept::{normalize_concept, Concept};
pub use graph::{Direction, KnowledgeGraph, Triple};
pub use relation::{InventoryKind, Relation, RelationInventory, RelationType, CN13};

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed triple: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("line {line}: relation {relation} is not part of the active inventory")]
    RelationOutsideInventory { line: usize, relation: String },
    #[error("relation {0} is only admitted by baseline inventories")]
    VagueRelationNotAllowed(String),
    #[error("Random has no inverse")]
    InvertedRandom,
    #[error("concept {0:?} is empty after normalization")]
    EmptyConcept(String),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("graph already contains inverted relations")]
    AlreadyClosed,
}
