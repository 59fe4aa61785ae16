use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{path_order, Hop, KnowledgePath, Origin, PathDirection, PathfindError, MAX_PATH_HOPS};
use crate::backends::TargetGenerator;
use crate::embed::{cosine, EmbeddingStore, PhraseVector};
use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Targets requested per (concept, relation) query.
    pub beam: usize,
    /// Minimum cosine to the target for a candidate to be expanded further.
    pub sim_gate: f64,
    /// Cosine above which a candidate counts as reaching the target.
    pub terminate: f64,
    pub max_hops: usize,
    /// Distinct end concepts kept per hop level, best similarity first.
    pub frontier_cap: usize,
    pub use_inverse: bool,
    /// Also search from the S2 concept back toward the S1 concept.
    pub bidirectional: bool,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            beam: 10,
            sim_gate: 0.7,
            terminate: 0.95,
            max_hops: 3,
            frontier_cap: 50,
            use_inverse: true,
            bidirectional: true,
        }
    }
}

impl ChainParams {
    pub fn validate(&self) -> Result<(), PathfindError> {
        let bad = |msg: String| Err(PathfindError::InvalidParams(msg));
        if !(0.0 <= self.sim_gate && self.sim_gate <= self.terminate && self.terminate <= 1.0) {
            return bad(format!("need 0 <= sim_gate ({}) <= terminate ({}) <= 1", self.sim_gate, self.terminate));
        }
        if self.beam == 0 {
            return bad("beam must be at least 1".into());
        }
        if !(1..=MAX_PATH_HOPS).contains(&self.max_hops) {
            return bad(format!("max_hops {} outside 1..={MAX_PATH_HOPS}", self.max_hops));
        }
        if self.frontier_cap == 0 {
            return bad("frontier_cap must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChainOutcome {
    /// Completed paths in S1→S2 presentation, deduplicated and ordered.
    pub paths: Vec<KnowledgePath>,
    /// Search targets that have no embedding coverage; no path can reach them.
    pub uncovered: Vec<Concept>,
}

struct Partial {
    hops: Vec<Hop>,
    nodes: Vec<Concept>,
}

struct Search<'a, G: ?Sized> {
    generator: &'a G,
    embeddings: &'a EmbeddingStore,
    params: &'a ChainParams,
    relations: Vec<RelationType>,
    pair: &'a ConceptPair,
}

impl<G: TargetGenerator + ?Sized> Search<'_, G> {
    /// Forward chaining from `start` until candidates come within `terminate`
    /// of `goal`. Returns completed paths in search order (start first).
    fn run(&self, start: &Concept, goal: &PhraseVector) -> Result<Vec<(Vec<Hop>, f64)>, PathfindError> {
        let mut sims: HashMap<Concept, f64> = HashMap::new();
        let mut similarity = |c: &Concept| -> f64 {
            *sims.entry(c.clone()).or_insert_with(|| {
                cosine(&self.embeddings.encode_phrase(c), goal).expect("store vectors share one dimension")
            })
        };

        let mut completed = Vec::new();
        let mut frontier = vec![Partial { hops: Vec::new(), nodes: vec![start.clone()] }];
        for depth in 1..=self.params.max_hops {
            let mut next: Vec<(Partial, f64)> = Vec::new();
            for partial in &frontier {
                let last = partial.nodes.last().expect("partials are never empty");
                for &relation in &self.relations {
                    let targets = self
                        .generator
                        .generate(last, relation, self.params.beam)
                        .map_err(|source| PathfindError::Backend { pair: Box::new(self.pair.clone()), source })?;
                    for target in targets.into_iter().take(self.params.beam) {
                        if partial.nodes.contains(&target.concept) {
                            continue;
                        }
                        let sim = similarity(&target.concept);
                        let hop = Hop {
                            source: last.clone(),
                            relation,
                            target: target.concept.clone(),
                            confidence: target.confidence,
                        };
                        if sim > self.params.terminate {
                            let mut hops = partial.hops.clone();
                            hops.push(hop);
                            completed.push((hops, sim));
                        } else if sim >= self.params.sim_gate && depth < self.params.max_hops {
                            let mut hops = partial.hops.clone();
                            hops.push(hop);
                            let mut nodes = partial.nodes.clone();
                            nodes.push(target.concept);
                            next.push((Partial { hops, nodes }, sim));
                        }
                    }
                }
            }
            frontier = self.cap(next);
            if frontier.is_empty() {
                break;
            }
        }
        Ok(completed)
    }

    fn cap(&self, next: Vec<(Partial, f64)>) -> Vec<Partial> {
        let mut ends: Vec<(&Concept, f64)> = Vec::new();
        let mut seen = HashSet::new();
        for (p, sim) in &next {
            let end = p.nodes.last().expect("partials are never empty");
            if seen.insert(end) {
                ends.push((end, *sim));
            }
        }
        if ends.len() <= self.params.frontier_cap {
            return next.into_iter().map(|(p, _)| p).collect();
        }
        ends.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let keep: HashSet<Concept> = ends.iter().take(self.params.frontier_cap).map(|(c, _)| (*c).clone()).collect();
        next.into_iter()
            .map(|(p, _)| p)
            .filter(|p| keep.contains(p.nodes.last().expect("partials are never empty")))
            .collect()
    }
}

/// Similarity-guided forward chaining between the two concepts of `pair`.
///
/// Each frontier concept is expanded with every generator relation (and its
/// inverse when `use_inverse`), keeping up to `beam` targets per query.
/// Targets whose cosine to the goal concept exceeds `terminate` complete a
/// path; targets at or above `sim_gate` are expanded at the next level, up to
/// `max_hops`. Concepts never repeat within a path. With `bidirectional`, the
/// search is repeated from `c_t` toward `c_s` and those paths are reversed
/// into S1→S2 form. Only completed paths are returned.
pub fn chain<G: TargetGenerator + ?Sized>(
    pair: &ConceptPair,
    generator: &G,
    embeddings: &EmbeddingStore,
    params: &ChainParams,
) -> Result<ChainOutcome, PathfindError> {
    params.validate()?;
    let mut relations = Vec::new();
    for r in generator.relations().into_iter().filter(|r| *r != Relation::Random) {
        relations.push(RelationType::base(r));
        if params.use_inverse {
            relations.push(RelationType::inverse_of(r).expect("Random is filtered out"));
        }
    }
    let search = Search { generator, embeddings, params, relations, pair };

    let mut outcome = ChainOutcome::default();
    let mut paths = Vec::new();

    let mut directions = vec![(PathDirection::Forward, &pair.c_s, &pair.c_t)];
    if params.bidirectional {
        directions.push((PathDirection::Backward, &pair.c_t, &pair.c_s));
    }
    for (direction, start, goal) in directions {
        let goal_vec = embeddings.encode_phrase(goal);
        if goal_vec.coverage == 0.0 {
            log::debug!("no embedding coverage for {goal}; skipping search from {start}");
            outcome.uncovered.push(goal.clone());
            continue;
        }
        for (hops, sim) in search.run(start, &goal_vec)? {
            let hops = match direction {
                PathDirection::Forward => hops,
                PathDirection::Backward => hops.iter().rev().map(Hop::reversed).collect(),
            };
            paths.push(KnowledgePath {
                hops,
                origin: Origin::Generator,
                direction,
                terminal_similarity: sim,
                score: None,
            });
        }
    }

    paths.sort_by(path_order);
    let mut seen = HashSet::new();
    outcome.paths = paths
        .into_iter()
        .filter(|p| {
            let key: Vec<(String, RelationType, String)> =
                p.identity().into_iter().map(|(s, r, t)| (s.to_string(), r, t.to_string())).collect();
            seen.insert(key)
        })
        .collect();
    Ok(outcome)
}
