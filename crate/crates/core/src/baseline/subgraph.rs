use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::BaselineError;
use crate::kg::{Concept, KnowledgeGraph, Relation, Triple};

/// Shortest-path evidence between two seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedConnection {
    pub from: Concept,
    pub to: Concept,
    /// Undirected BFS distance; `None` when the seeds are disconnected.
    pub distance: Option<usize>,
    /// Every edge lying on some shortest path, as (nearer-to-`from`, farther) node pairs.
    pub path_edges: BTreeSet<(Concept, Concept)>,
}

/// A node-induced view of the graph around a set of seed concepts.
#[derive(Debug, Clone)]
pub struct Subgraph {
    seeds: Vec<Concept>,
    nodes: BTreeSet<Concept>,
    edges: Vec<Triple>,
    adjacency: BTreeMap<Concept, BTreeSet<Concept>>,
    connections: Vec<SeedConnection>,
}

fn triple_key(t: &Triple) -> (&str, crate::kg::RelationType, &str) {
    (t.head.as_str(), t.relation, t.tail.as_str())
}

impl Subgraph {
    /// A subgraph over exactly the given triples (plus isolated `seeds`).
    pub fn from_parts(seeds: Vec<Concept>, extra_nodes: impl IntoIterator<Item = Concept>, edges: Vec<Triple>) -> Self {
        let mut nodes: BTreeSet<Concept> = seeds.iter().cloned().collect();
        nodes.extend(extra_nodes);
        let mut edges = edges;
        edges.sort_by(|a, b| triple_key(a).cmp(&triple_key(b)));
        edges.dedup_by(|a, b| triple_key(a) == triple_key(b));
        let mut adjacency: BTreeMap<Concept, BTreeSet<Concept>> = BTreeMap::new();
        for t in &edges {
            nodes.insert(t.head.clone());
            nodes.insert(t.tail.clone());
            adjacency.entry(t.head.clone()).or_default().insert(t.tail.clone());
            adjacency.entry(t.tail.clone()).or_default().insert(t.head.clone());
        }
        for n in &nodes {
            adjacency.entry(n.clone()).or_default();
        }
        Subgraph { seeds, nodes, edges, adjacency, connections: Vec::new() }
    }

    pub fn seeds(&self) -> &[Concept] {
        &self.seeds
    }

    pub fn nodes(&self) -> &BTreeSet<Concept> {
        &self.nodes
    }

    /// Triples sorted by (head, relation, tail).
    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn contains(&self, concept: &str) -> bool {
        self.nodes.contains(concept)
    }

    /// Undirected neighbours, sorted.
    pub fn neighbors(&self, concept: &str) -> impl Iterator<Item = &Concept> + '_ {
        self.adjacency.get(concept).into_iter().flatten()
    }

    /// Triples joining `a` and `b` in either direction.
    pub fn edges_between<'a>(&'a self, a: &'a str, b: &'a str) -> impl Iterator<Item = &'a Triple> + 'a {
        self.edges.iter().filter(move |t| {
            (t.head.as_str() == a && t.tail.as_str() == b) || (t.head.as_str() == b && t.tail.as_str() == a)
        })
    }

    /// One entry per unordered seed pair, in seed order.
    pub fn connections(&self) -> &[SeedConnection] {
        &self.connections
    }
}

fn usable(t: &Triple) -> bool {
    t.relation.relation != Relation::Random
}

/// Undirected BFS from `start` until every concept in `wanted` has been
/// reached and its level is complete, or the component is exhausted.
fn bfs<'g>(g: &'g KnowledgeGraph, start: &'g Concept, wanted: &BTreeSet<&str>) -> HashMap<&'g Concept, usize> {
    let mut dist: HashMap<&Concept, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([start]);
    let mut missing: BTreeSet<&str> = wanted.iter().copied().filter(|w| *w != start.as_str()).collect();
    let mut stop_after: Option<usize> = if missing.is_empty() { Some(0) } else { None };
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if stop_after.is_some_and(|s| du >= s) {
            break;
        }
        for t in g.incident(u.as_str()).filter(|t| usable(t)) {
            let v = if t.head == *u { &t.tail } else { &t.head };
            if !dist.contains_key(v) {
                dist.insert(v, du + 1);
                queue.push_back(v);
                if missing.remove(v.as_str()) && missing.is_empty() {
                    stop_after = Some(du + 1);
                }
            }
        }
    }
    dist
}

/// Builds the baseline subgraph for `concepts`.
///
/// Concepts absent from the graph are dropped with a warning. For every pair
/// of remaining seeds, all edges on any shortest undirected path between them
/// are added; then every node in the subgraph brings along all of its incident
/// edges and their other endpoints. `Random` triples are never traversed.
pub fn build_subgraph(g: &KnowledgeGraph, concepts: &[Concept]) -> Result<Subgraph, BaselineError> {
    if concepts.is_empty() {
        return Err(BaselineError::EmptySeeds);
    }
    let mut seeds: Vec<Concept> = Vec::new();
    for c in concepts {
        match g.concept(c.as_str()) {
            Some(known) if !seeds.contains(known) => seeds.push(known.clone()),
            Some(_) => {}
            None => log::warn!("seed concept {c} is not in the graph; dropped"),
        }
    }

    let mut core: BTreeSet<Concept> = seeds.iter().cloned().collect();
    let mut connections = Vec::new();
    for (i, a) in seeds.iter().enumerate() {
        let wanted: BTreeSet<&str> = seeds[i + 1..].iter().map(Concept::as_str).collect();
        if wanted.is_empty() {
            continue;
        }
        let dist = bfs(g, a, &wanted);
        for b in &seeds[i + 1..] {
            let mut conn = SeedConnection {
                from: a.clone(),
                to: b.clone(),
                distance: dist.get(b).copied(),
                path_edges: BTreeSet::new(),
            };
            if conn.distance.is_some() {
                // Walk the BFS layers back from b; every neighbour one layer
                // closer to a lies on a shortest path.
                let mut layer: BTreeSet<&Concept> = BTreeSet::from([b]);
                while !layer.is_empty() {
                    let mut prev = BTreeSet::new();
                    for &v in &layer {
                        let dv = dist[v];
                        if dv == 0 {
                            continue;
                        }
                        for t in g.incident(v.as_str()).filter(|t| usable(t)) {
                            let u = if t.head == *v { &t.tail } else { &t.head };
                            if dist.get(u) == Some(&(dv - 1)) {
                                conn.path_edges.insert((u.clone(), v.clone()));
                                prev.insert(u);
                            }
                        }
                    }
                    layer = prev;
                }
                for (u, v) in &conn.path_edges {
                    core.insert(u.clone());
                    core.insert(v.clone());
                }
            }
            connections.push(conn);
        }
    }

    let mut edges = Vec::new();
    for n in &core {
        edges.extend(g.incident(n.as_str()).filter(|t| usable(t)).cloned());
    }
    let mut sub = Subgraph::from_parts(seeds, core, edges);
    sub.connections = connections;
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::RelationInventory;

    fn graph(src: &str) -> KnowledgeGraph {
        KnowledgeGraph::load(src.as_bytes(), RelationInventory::baseline()).unwrap()
    }

    fn c(s: &str) -> Concept {
        Concept::new(s).unwrap()
    }

    fn names(set: &BTreeSet<Concept>) -> Vec<&str> {
        set.iter().map(Concept::as_str).collect()
    }

    #[test]
    fn adjacent_seeds_bring_neighbourhoods() {
        let g = graph("IsA\ta\tb\nIsA\ta\tx\nIsA\ty\tb\nIsA\tx\tfar\n");
        let sub = build_subgraph(&g, &[c("a"), c("b")]).unwrap();
        assert_eq!(names(sub.nodes()), ["a", "b", "x", "y"]);
        assert_eq!(sub.edges().len(), 3);
        assert_eq!(sub.connections()[0].distance, Some(1));
    }

    #[test]
    fn disconnected_seeds() {
        let g = graph("IsA\ta\tx\nIsA\tb\ty\n");
        let sub = build_subgraph(&g, &[c("a"), c("b")]).unwrap();
        assert_eq!(names(sub.nodes()), ["a", "b", "x", "y"]);
        assert_eq!(sub.connections()[0].distance, None);
        assert!(sub.connections()[0].path_edges.is_empty());
    }

    #[test]
    fn both_shortest_paths_and_edge_direction_kept() {
        // s-m1-t and s-m2-t (m2 reached against edge direction) are both
        // shortest; s-l1-l2-t is longer and only its first edge is adjacent.
        let g = graph(
            "IsA\ts\tm1\nIsA\tm1\tt\nIsA\tm2\ts\nUsedFor\tt\tm2\nIsA\ts\tl1\nIsA\tl1\tl2\nIsA\tl2\tt\nIsA\tl2\tq\nIsA\tq\tr\n",
        );
        let sub = build_subgraph(&g, &[c("s"), c("t")]).unwrap();
        let conn = &sub.connections()[0];
        assert_eq!(conn.distance, Some(2));
        let edges: Vec<(&str, &str)> = conn.path_edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        assert_eq!(edges, [("m1", "t"), ("m2", "t"), ("s", "m1"), ("s", "m2")]);
        assert!(sub.edges().iter().any(|t| t.head.as_str() == "t" && t.tail.as_str() == "m2"));
        // l2 arrives as a neighbour of t, but q only hangs off l2.
        assert!(sub.contains("l2") && !sub.contains("q"));
    }

    #[test]
    fn missing_seeds_dropped_and_empty_rejected() {
        let g = graph("IsA\ta\tb\n");
        let sub = build_subgraph(&g, &[c("a"), c("nowhere")]).unwrap();
        assert_eq!(sub.seeds(), [c("a")]);
        assert!(matches!(build_subgraph(&g, &[]), Err(BaselineError::EmptySeeds)));
    }
}
