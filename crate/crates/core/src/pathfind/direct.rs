use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::PathfindError;
use crate::backends::{PosFilter, RelationClassifier};
use crate::extract::ConceptPair;
use crate::kg::{Relation, RelationType};

pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// A relation the classifier asserts between the two concepts of a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectLink {
    pub pair: ConceptPair,
    pub relation: Relation,
    pub probability: f64,
}

fn check_threshold(threshold: f64) -> Result<(), PathfindError> {
    if threshold > 0.0 && threshold <= 1.0 {
        Ok(())
    } else {
        Err(PathfindError::InvalidParams(format!("threshold {threshold} outside (0, 1]")))
    }
}

/// Every non-`Random` relation scoring at least `threshold` that survives the
/// optional PoS filter, best first.
pub fn link_pair<C: RelationClassifier + ?Sized>(
    pair: &ConceptPair,
    classifier: &C,
    threshold: f64,
    filter: Option<&PosFilter>,
) -> Result<Vec<DirectLink>, PathfindError> {
    check_threshold(threshold)?;
    let dist =
        classifier.classify(pair).map_err(|source| PathfindError::Backend { pair: Box::new(pair.clone()), source })?;
    Ok(dist
        .above(threshold)
        .into_iter()
        .filter(|(r, _)| filter.is_none_or(|f| f.keep(&pair.c_s, RelationType::base(*r), &pair.c_t)))
        .map(|(relation, probability)| DirectLink { pair: pair.clone(), relation, probability })
        .collect())
}

/// [`link_pair`] over many pairs, keyed in input order. Stops at the first
/// backend failure, which names the pair.
pub fn link_direct<C: RelationClassifier + ?Sized>(
    pairs: &[ConceptPair],
    classifier: &C,
    threshold: f64,
    filter: Option<&PosFilter>,
) -> Result<IndexMap<ConceptPair, Vec<DirectLink>>, PathfindError> {
    let mut out = IndexMap::with_capacity(pairs.len());
    for pair in pairs {
        let links = link_pair(pair, classifier, threshold, filter)?;
        out.insert(pair.clone(), links);
    }
    Ok(out)
}
