use serde::{Deserialize, Serialize};

use super::{BaselineError, NodeScores, Subgraph};
use crate::backends::RelationClassifier;
use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType, Triple};
use crate::pathfind::{Hop, KnowledgePath, Origin, PathDirection, MAX_PATH_HOPS};

/// How per-node scores are combined into a path score (always a mean over
/// the path's nodes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathScoring {
    /// pagerank · closeness
    #[default]
    Product,
    PageRank,
    Closeness,
}

impl std::str::FromStr for PathScoring {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product" => Ok(PathScoring::Product),
            "pagerank" => Ok(PathScoring::PageRank),
            "closeness" => Ok(PathScoring::Closeness),
            other => Err(format!("unknown path scoring {other:?} (expected product, pagerank or closeness)")),
        }
    }
}

impl PathScoring {
    fn node(self, scores: &NodeScores, c: &Concept) -> f64 {
        let pr = scores.pagerank.get(c).copied().unwrap_or(0.0);
        let cl = scores.closeness.get(c).copied().unwrap_or(0.0);
        match self {
            PathScoring::Product => pr * cl,
            PathScoring::PageRank => pr,
            PathScoring::Closeness => cl,
        }
    }
}

/// The hop from `from` to `to` read off one triple, or `None` if the triple
/// cannot be traversed (a `Random` edge).
fn hop_from(t: &Triple, from: &Concept) -> Option<Hop> {
    let (relation, target) =
        if t.head == *from { (t.relation, &t.tail) } else { (t.relation.toggled().ok()?, &t.head) };
    (relation.relation != Relation::Random).then(|| Hop {
        source: from.clone(),
        relation,
        target: target.clone(),
        confidence: 1.0,
    })
}

/// Representative hop between adjacent nodes: heaviest triple, then relation
/// name, then the one read in its stored direction.
fn best_hop(sub: &Subgraph, from: &Concept, to: &Concept) -> Option<Hop> {
    sub.edges_between(from.as_str(), to.as_str())
        .filter_map(|t| hop_from(t, from).map(|h| (t.weight, h)))
        .min_by(|(wa, a), (wb, b)| {
            wb.total_cmp(wa)
                .then_with(|| a.relation.relation.name().cmp(b.relation.relation.name()))
                .then_with(|| a.relation.inverted.cmp(&b.relation.inverted))
        })
        .map(|(_, h)| h)
}

fn enumerate(sub: &Subgraph, goal: &Concept, max_hops: usize, stack: &mut Vec<Concept>, out: &mut Vec<Vec<Concept>>) {
    let last = stack.last().expect("stack starts with the source").clone();
    if last == *goal {
        out.push(stack.clone());
        return;
    }
    if stack.len() > max_hops {
        return;
    }
    for next in sub.neighbors(last.as_str()) {
        if stack.contains(next) {
            continue;
        }
        stack.push(next.clone());
        enumerate(sub, goal, max_hops, stack, out);
        stack.pop();
    }
}

/// Acyclic paths of at most `max_hops` edges from `c_s` to `c_t` inside the
/// subgraph, scored by the mean node score and returned best first.
pub fn rank_paths(
    sub: &Subgraph,
    pair: &ConceptPair,
    scores: &NodeScores,
    scoring: PathScoring,
    max_hops: usize,
    top_k: usize,
) -> Result<Vec<KnowledgePath>, BaselineError> {
    if !(1..=MAX_PATH_HOPS).contains(&max_hops) || top_k == 0 {
        return Err(BaselineError::InvalidParams(format!("max_hops {max_hops} / top_k {top_k}")));
    }
    for c in [&pair.c_s, &pair.c_t] {
        if !sub.contains(c.as_str()) {
            return Err(BaselineError::SeedMissing(c.as_str().to_string()));
        }
    }
    let mut sequences = Vec::new();
    enumerate(sub, &pair.c_t, max_hops, &mut vec![pair.c_s.clone()], &mut sequences);

    let mut paths: Vec<KnowledgePath> = sequences
        .into_iter()
        .filter_map(|nodes| {
            let hops: Option<Vec<Hop>> = nodes.windows(2).map(|w| best_hop(sub, &w[0], &w[1])).collect();
            let score = nodes.iter().map(|c| scoring.node(scores, c)).sum::<f64>() / nodes.len() as f64;
            Some(KnowledgePath {
                hops: hops?,
                origin: Origin::Static,
                direction: PathDirection::Forward,
                terminal_similarity: 1.0,
                score: Some(score),
            })
        })
        .collect();
    paths.sort_by(|a, b| {
        let sa = a.score.unwrap_or(0.0);
        let sb = b.score.unwrap_or(0.0);
        sb.total_cmp(&sa).then_with(|| crate::pathfind::path_order(a, b))
    });
    paths.truncate(top_k);
    Ok(paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReplaceStats {
    pub vague_hops: usize,
    pub replaced: usize,
}

/// Relabels `RelatedTo`/`HasContext` hops with the classifier's best
/// non-`Random` relation when it scores at least `threshold`. The classifier
/// sees the underlying triple's (head, tail); the hop keeps its direction.
pub fn replace_vague<C: RelationClassifier + ?Sized>(
    paths: &[KnowledgePath],
    classifier: &C,
    threshold: f64,
) -> Result<(Vec<KnowledgePath>, ReplaceStats), BaselineError> {
    let mut stats = ReplaceStats::default();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let mut path = path.clone();
        for hop in &mut path.hops {
            if !hop.relation.relation.is_vague() {
                continue;
            }
            stats.vague_hops += 1;
            let (head, _, tail) = hop.as_triple();
            let pair = ConceptPair::new(head.clone(), tail.clone())
                .map_err(|e| BaselineError::InvalidParams(e.to_string()))?;
            let dist =
                classifier.classify(&pair).map_err(|source| BaselineError::Backend { pair: Box::new(pair), source })?;
            if let Some(&(relation, _)) = dist.above(threshold).first() {
                hop.relation = RelationType { relation, inverted: hop.relation.inverted };
                stats.replaced += 1;
            }
        }
        out.push(path);
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backends::KgOracle;
    use crate::baseline::{build_subgraph, node_scores, PageRankParams};
    use crate::kg::{KnowledgeGraph, RelationInventory};

    fn c(s: &str) -> Concept {
        Concept::new(s).unwrap()
    }

    fn pair(a: &str, b: &str) -> ConceptPair {
        ConceptPair::new(c(a), c(b)).unwrap()
    }

    fn graph(src: &str) -> KnowledgeGraph {
        KnowledgeGraph::load(src.as_bytes(), RelationInventory::baseline()).unwrap()
    }

    fn ranked(src: &str, a: &str, b: &str, top_k: usize) -> Vec<KnowledgePath> {
        let g = graph(src);
        let sub = build_subgraph(&g, &[c(a), c(b)]).unwrap();
        let scores = node_scores(&sub, PageRankParams::default());
        rank_paths(&sub, &pair(a, b), &scores, PathScoring::Product, 3, top_k).unwrap()
    }

    #[test]
    fn unique_path_with_mixed_directions() {
        let paths = ranked(
            "ReceivesAction\twaste\trecycle\nRelatedTo\tenvironmental protection\trecycle\n",
            "waste",
            "environmental protection",
            5,
        );
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        assert_eq!(p.origin, Origin::Static);
        assert_eq!(
            p.identity(),
            vec![
                ("waste", RelationType::base(Relation::ReceivesAction), "recycle"),
                ("recycle", RelationType::inverse_of(Relation::RelatedTo).unwrap(), "environmental protection"),
            ]
        );
        p.check_shape().unwrap();
    }

    #[test]
    fn dominant_interior_node_wins() {
        // s-h-t and s-m-t; h has three extra leaves, so it dominates both scores.
        let src = "IsA\ts\th\nIsA\th\tt\nIsA\ts\tm\nIsA\tm\tt\nIsA\th\tx1\nIsA\th\tx2\nIsA\th\tx3\n";
        let g = graph(src);
        let sub = build_subgraph(&g, &[c("s"), c("t")]).unwrap();
        let scores = node_scores(&sub, PageRankParams::default());
        let product = |n: &str| scores.pagerank[&c(n)] * scores.closeness[&c(n)];
        assert!(product("h") > product("m"));
        let paths = rank_paths(&sub, &pair("s", "t"), &scores, PathScoring::Product, 3, 2).unwrap();
        assert_eq!(paths[0].nodes()[1].as_str(), "h");
        let expected = (product("s") + product("h") + product("t")) / 3.0;
        assert!((paths[0].score.unwrap() - expected).abs() < 1e-15);
        assert_eq!(paths[1].nodes()[1].as_str(), "m");
    }

    #[test]
    fn nothing_within_three_hops() {
        assert!(ranked("IsA\ta\tb\nIsA\tb\tc\nIsA\tc\td\nIsA\td\te\n", "a", "e", 1).is_empty());
        assert_eq!(ranked("IsA\ta\tb\nIsA\tb\tc\nIsA\tc\td\n", "a", "d", 1).len(), 1);
    }

    #[test]
    fn representative_triple_prefers_weight_then_name() {
        let paths = ranked("IsA\ta\tb\t1.0\nAtLocation\ta\tb\t1.0\nCauses\tb\ta\t3.0\n", "a", "b", 1);
        assert_eq!(paths[0].hops[0].relation, RelationType::inverse_of(Relation::Causes).unwrap());
        let paths = ranked("IsA\ta\tb\t1.0\nAtLocation\ta\tb\t1.0\n", "a", "b", 1);
        assert_eq!(paths[0].hops[0].relation, RelationType::base(Relation::AtLocation));
    }

    #[test]
    fn missing_seed_is_an_error() {
        let g = graph("IsA\ta\tb\n");
        let sub = build_subgraph(&g, &[c("a")]).unwrap();
        let scores = node_scores(&sub, PageRankParams::default());
        assert!(matches!(
            rank_paths(&sub, &pair("a", "zz"), &scores, PathScoring::Product, 3, 1),
            Err(BaselineError::SeedMissing(_))
        ));
    }

    #[test]
    fn vague_hops_relabeled_by_classifier() {
        let model =
            KnowledgeGraph::load("ReceivesAction\twaste\trecycle\n".as_bytes(), RelationInventory::cn13()).unwrap();
        let oracle = KgOracle::new(Arc::new(model));
        let forward = ranked("RelatedTo\twaste\trecycle\nRelatedTo\tpaper\twaste\n", "waste", "recycle", 1);
        let backward = ranked("RelatedTo\twaste\trecycle\n", "recycle", "waste", 1);
        let untouched = ranked("RelatedTo\tpaper\twaste\n", "paper", "waste", 1);
        let plain = ranked("IsA\tpaper\twaste\n", "paper", "waste", 1);

        let (out, stats) = replace_vague(&forward, &oracle, 0.9).unwrap();
        assert_eq!(out[0].hops[0].relation, RelationType::base(Relation::ReceivesAction));
        assert_eq!(stats, ReplaceStats { vague_hops: 1, replaced: 1 });

        let (out, _) = replace_vague(&backward, &oracle, 0.9).unwrap();
        assert_eq!(out[0].hops[0].relation, RelationType::inverse_of(Relation::ReceivesAction).unwrap());

        let (out, stats) = replace_vague(&untouched, &oracle, 0.9).unwrap();
        assert_eq!(out, untouched);
        assert_eq!(stats.replaced, 0);

        let (out, stats) = replace_vague(&plain, &oracle, 0.9).unwrap();
        assert_eq!(serde_json::to_string(&out).unwrap(), serde_json::to_string(&plain).unwrap());
        assert_eq!(stats.vague_hops, 0);
    }
}
