//! Relation-classifier and target-generator contracts, with a deterministic
//! graph-backed oracle, an HTTP client for a model service, and PoS filtering.

mod memo;
mod oracle;
mod pos;
mod remote;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType};

pub use memo::Memoized;
pub use oracle::KgOracle;
pub use pos::{pos_filter, PosError, PosFilter, PosPattern, PosPatternTable, PosTag, Tagger, Verdict};
pub use remote::{RemoteBackend, RemoteConfig};

#[derive(Debug, Clone, thiserror::Error)]
pub enum BackendError {
    /// Network-level failure; the request may succeed if retried.
    #[error("transport error: {0}")]
    Transport(String),
    /// The peer answered with something that violates the wire contract.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl BackendError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, BackendError::Transport(_))
    }
}

/// Independent per-label probabilities over CN-13 plus `Random`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationDistribution {
    scores: BTreeMap<Relation, f64>,
}

impl RelationDistribution {
    /// Requires exactly the 14 classifier labels with scores in [0, 1].
    pub fn new(scores: BTreeMap<Relation, f64>) -> Result<Self, BackendError> {
        for label in Relation::classifier_labels() {
            if !scores.contains_key(&label) {
                return Err(BackendError::Protocol(format!("missing score for {label}")));
            }
        }
        for (label, score) in &scores {
            if !(label.is_cn13() || *label == Relation::Random) {
                return Err(BackendError::Protocol(format!("unexpected label {label}")));
            }
            if !(0.0..=1.0).contains(score) {
                return Err(BackendError::Protocol(format!("score {score} for {label} outside [0, 1]")));
            }
        }
        Ok(RelationDistribution { scores })
    }

    pub fn score(&self, label: Relation) -> f64 {
        self.scores.get(&label).copied().unwrap_or(0.0)
    }

    pub fn scores(&self) -> &BTreeMap<Relation, f64> {
        &self.scores
    }

    /// Non-`Random` labels scoring at least `threshold`, best first.
    pub fn above(&self, threshold: f64) -> Vec<(Relation, f64)> {
        let mut out: Vec<(Relation, f64)> = self
            .scores
            .iter()
            .filter(|(r, s)| **r != Relation::Random && **s >= threshold)
            .map(|(r, s)| (*r, *s))
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.name().cmp(b.0.name())));
        out
    }

    /// Best non-`Random` label; ties go to the lexicographically smaller name.
    pub fn top_relation(&self) -> Option<(Relation, f64)> {
        self.above(f64::NEG_INFINITY).into_iter().next()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTarget {
    pub concept: Concept,
    pub confidence: f64,
    /// 1-based beam position.
    pub rank: usize,
}

pub trait RelationClassifier: Send + Sync {
    fn classify(&self, pair: &ConceptPair) -> Result<RelationDistribution, BackendError>;
}

pub trait TargetGenerator: Send + Sync {
    /// Base relations this generator was trained on; the chainer fans out over
    /// these and, optionally, their inverses.
    fn relations(&self) -> Vec<Relation>;

    fn generate(
        &self,
        source: &Concept,
        relation: RelationType,
        beam: usize,
    ) -> Result<Vec<GeneratedTarget>, BackendError>;
}

impl<T: RelationClassifier + ?Sized> RelationClassifier for &T {
    fn classify(&self, pair: &ConceptPair) -> Result<RelationDistribution, BackendError> {
        (**self).classify(pair)
    }
}

impl<T: TargetGenerator + ?Sized> TargetGenerator for &T {
    fn relations(&self) -> Vec<Relation> {
        (**self).relations()
    }

    fn generate(
        &self,
        source: &Concept,
        relation: RelationType,
        beam: usize,
    ) -> Result<Vec<GeneratedTarget>, BackendError> {
        (**self).generate(source, relation, beam)
    }
}

/// Checks the response-shape contract shared by every generator: at most
/// `beam` targets, gapless 1-based ranks, confidences in [0, 1] and
/// non-increasing, no target equal to the source, no duplicates.
pub fn check_targets(source: &Concept, targets: &[GeneratedTarget], beam: usize) -> Result<(), BackendError> {
    if targets.len() > beam {
        return Err(BackendError::Protocol(format!("{} targets for beam {beam}", targets.len())));
    }
    let mut seen = std::collections::HashSet::new();
    for (i, t) in targets.iter().enumerate() {
        if t.rank != i + 1 {
            return Err(BackendError::Protocol(format!("rank {} at position {}", t.rank, i + 1)));
        }
        if !(0.0..=1.0).contains(&t.confidence) {
            return Err(BackendError::Protocol(format!("confidence {} outside [0, 1]", t.confidence)));
        }
        if i > 0 && t.confidence > targets[i - 1].confidence {
            return Err(BackendError::Protocol("confidence increases with rank".into()));
        }
        if t.concept == *source {
            return Err(BackendError::Protocol(format!("target equals source {source}")));
        }
        if !seen.insert(&t.concept) {
            return Err(BackendError::Protocol(format!("duplicate target {}", t.concept)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(pairs: &[(Relation, f64)]) -> Result<RelationDistribution, BackendError> {
        let mut scores: BTreeMap<Relation, f64> = Relation::classifier_labels().map(|r| (r, 0.0)).collect();
        scores.extend(pairs.iter().copied());
        RelationDistribution::new(scores)
    }

    #[test]
    fn distribution_requires_all_labels() {
        let mut partial = BTreeMap::new();
        partial.insert(Relation::HasA, 1.0);
        assert!(RelationDistribution::new(partial).is_err());
        assert!(dist(&[(Relation::HasA, 1.2)]).is_err());
        assert!(dist(&[(Relation::PartOf, 0.5)]).is_err());
    }

    #[test]
    fn above_threshold_excludes_random() {
        let d =
            dist(&[(Relation::HasA, 0.95), (Relation::IsA, 0.91), (Relation::Random, 0.99), (Relation::Causes, 0.5)])
                .unwrap();
        assert_eq!(d.above(0.9), vec![(Relation::HasA, 0.95), (Relation::IsA, 0.91)]);
        assert_eq!(d.top_relation(), Some((Relation::HasA, 0.95)));
        let d = dist(&[(Relation::HasA, 0.85)]).unwrap();
        assert!(d.above(0.9).is_empty());
    }

    #[test]
    fn target_shape_checks() {
        let src = Concept::new("waste").unwrap();
        let t = |c: &str, conf: f64, rank: usize| GeneratedTarget {
            concept: Concept::new(c).unwrap(),
            confidence: conf,
            rank,
        };
        assert!(check_targets(&src, &[t("a", 1.0, 1), t("b", 0.5, 2)], 2).is_ok());
        assert!(check_targets(&src, &[t("a", 1.0, 1), t("b", 0.5, 2)], 1).is_err());
        assert!(check_targets(&src, &[t("a", 0.5, 1), t("b", 0.6, 2)], 5).is_err());
        assert!(check_targets(&src, &[t("a", 0.5, 2)], 5).is_err());
        assert!(check_targets(&src, &[t("waste", 0.5, 1)], 5).is_err());
        assert!(check_targets(&src, &[t("a", 0.5, 1), t("a", 0.5, 2)], 5).is_err());
    }
}
