//! Flat JSON-lines form of a [`ConnectResult`].

use serde::{Deserialize, Serialize};

use super::{ConnectResult, DirectLink, Hop, KnowledgePath, Origin, PathDirection, PathfindError, Verdict};
use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub relation: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub source: String,
    pub relation: String,
    pub inverted: bool,
    pub target: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub hops: Vec<HopRecord>,
    pub terminal_similarity: f64,
    pub origin: Origin,
    pub direction: PathDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// One output line per concept pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectRecord {
    pub pair_id: String,
    pub sentence_id: String,
    pub c_s: String,
    pub c_t: String,
    pub verdict: String,
    pub links: Vec<LinkRecord>,
    pub paths: Vec<PathRecord>,
    pub discarded_multihop: usize,
}

fn concept(s: &str) -> Result<Concept, PathfindError> {
    Concept::new(s).map_err(|e| PathfindError::Record(e.to_string()))
}

fn relation(s: &str) -> Result<Relation, PathfindError> {
    s.parse().map_err(|_| PathfindError::Record(format!("unknown relation {s:?}")))
}

impl PathRecord {
    pub fn from_path(path: &KnowledgePath) -> Self {
        PathRecord {
            hops: path
                .hops
                .iter()
                .map(|h| HopRecord {
                    source: h.source.as_str().to_string(),
                    relation: h.relation.relation.name().to_string(),
                    inverted: h.relation.inverted,
                    target: h.target.as_str().to_string(),
                    confidence: h.confidence,
                })
                .collect(),
            terminal_similarity: path.terminal_similarity,
            origin: path.origin,
            direction: path.direction,
            score: path.score,
        }
    }

    pub fn to_path(&self) -> Result<KnowledgePath, PathfindError> {
        let mut hops = Vec::with_capacity(self.hops.len());
        for h in &self.hops {
            let r = relation(&h.relation)?;
            let relation = if h.inverted {
                RelationType::inverse_of(r).map_err(|e| PathfindError::Record(e.to_string()))?
            } else {
                RelationType::base(r)
            };
            hops.push(Hop {
                source: concept(&h.source)?,
                relation,
                target: concept(&h.target)?,
                confidence: h.confidence,
            });
        }
        let path = KnowledgePath {
            hops,
            origin: self.origin,
            direction: self.direction,
            terminal_similarity: self.terminal_similarity,
            score: self.score,
        };
        path.check_shape().map_err(PathfindError::Record)?;
        Ok(path)
    }
}

impl ConnectRecord {
    /// `pair_id` is `<sentence_id>#<index of the pair within the sentence pair>`.
    pub fn from_result(sentence_id: &str, index: usize, result: &ConnectResult) -> Self {
        let (links, paths) = match &result.verdict {
            Verdict::Direct(links) => (
                links
                    .iter()
                    .map(|l| LinkRecord { relation: l.relation.name().to_string(), prob: l.probability })
                    .collect(),
                Vec::new(),
            ),
            Verdict::Multihop(paths) => (Vec::new(), paths.iter().map(PathRecord::from_path).collect()),
            Verdict::Unconnected => (Vec::new(), Vec::new()),
        };
        ConnectRecord {
            pair_id: format!("{sentence_id}#{index}"),
            sentence_id: sentence_id.to_string(),
            c_s: result.pair.c_s.as_str().to_string(),
            c_t: result.pair.c_t.as_str().to_string(),
            verdict: result.verdict.name().to_string(),
            links,
            paths,
            discarded_multihop: result.discarded_multihop,
        }
    }

    pub fn pair(&self) -> Result<ConceptPair, PathfindError> {
        ConceptPair::new(concept(&self.c_s)?, concept(&self.c_t)?).map_err(|e| PathfindError::Record(e.to_string()))
    }

    pub fn to_result(&self) -> Result<ConnectResult, PathfindError> {
        let pair = self.pair()?;
        let verdict = match self.verdict.as_str() {
            "direct" if !self.links.is_empty() && self.paths.is_empty() => {
                let mut links = Vec::with_capacity(self.links.len());
                for l in &self.links {
                    links.push(DirectLink {
                        pair: pair.clone(),
                        relation: relation(&l.relation)?,
                        probability: l.prob,
                    });
                }
                Verdict::Direct(links)
            }
            "multihop" if self.links.is_empty() && !self.paths.is_empty() => {
                Verdict::Multihop(self.paths.iter().map(PathRecord::to_path).collect::<Result<_, _>>()?)
            }
            "unconnected" if self.links.is_empty() && self.paths.is_empty() => Verdict::Unconnected,
            other => {
                return Err(PathfindError::Record(format!(
                    "verdict {other:?} with {} links and {} paths",
                    self.links.len(),
                    self.paths.len()
                )))
            }
        };
        Ok(ConnectResult { pair, verdict, discarded_multihop: self.discarded_multihop })
    }
}
