use std::collections::BTreeMap;
use std::sync::Arc;

use super::{BackendError, GeneratedTarget, RelationClassifier, RelationDistribution, TargetGenerator};
use crate::extract::ConceptPair;
use crate::kg::{Concept, KnowledgeGraph, Relation, RelationType};

/// Answers classification and generation queries by looking them up in a graph.
///
/// `classify` scores 1.0 for every CN-13 relation asserted from `c_s` to `c_t`
/// and falls back to `Random` = 1.0 when there is none. `generate` returns the
/// neighbours reached by `relation` (walking base triples backwards for r⁻¹),
/// ordered by weight then name, with confidence = weight / max weight.
#[derive(Debug, Clone)]
pub struct KgOracle {
    graph: Arc<KnowledgeGraph>,
}

impl KgOracle {
    pub fn new(graph: Arc<KnowledgeGraph>) -> Self {
        KgOracle { graph }
    }

    pub fn graph(&self) -> &KnowledgeGraph {
        &self.graph
    }
}

impl RelationClassifier for KgOracle {
    fn classify(&self, pair: &ConceptPair) -> Result<RelationDistribution, BackendError> {
        let mut scores = BTreeMap::new();
        let mut any = false;
        for label in crate::kg::CN13 {
            let hit = self.graph.contains_triple(pair.c_s.as_str(), RelationType::base(label), pair.c_t.as_str());
            any |= hit;
            scores.insert(label, if hit { 1.0 } else { 0.0 });
        }
        scores.insert(Relation::Random, if any { 0.0 } else { 1.0 });
        RelationDistribution::new(scores)
    }
}

impl TargetGenerator for KgOracle {
    fn relations(&self) -> Vec<Relation> {
        self.graph.inventory().generator_relations()
    }

    fn generate(
        &self,
        source: &Concept,
        relation: RelationType,
        beam: usize,
    ) -> Result<Vec<GeneratedTarget>, BackendError> {
        if beam == 0 {
            return Err(BackendError::InvalidRequest("beam must be at least 1".into()));
        }
        let found = self.graph.follow(source.as_str(), relation);
        let max = found.first().map(|(_, w)| *w).unwrap_or(0.0);
        Ok(found
            .into_iter()
            .filter(|(c, _)| c != source)
            .take(beam)
            .enumerate()
            .map(|(i, (concept, weight))| GeneratedTarget {
                concept,
                confidence: if max > 0.0 { weight / max } else { 0.0 },
                rank: i + 1,
            })
            .collect())
    }
}
