use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::Subgraph;
use crate::kg::Concept;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageRankParams {
    pub damping: f64,
    /// Stop once the L1 change between iterations drops below this.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams { damping: 0.85, eps: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeScores {
    pub pagerank: BTreeMap<Concept, f64>,
    pub closeness: BTreeMap<Concept, f64>,
}

/// Node list and index-based undirected adjacency, in sorted node order.
fn indexed(sub: &Subgraph) -> (Vec<&Concept>, Vec<Vec<usize>>) {
    let nodes: Vec<&Concept> = sub.nodes().iter().collect();
    let pos: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let adj = nodes.iter().map(|c| sub.neighbors(c.as_str()).map(|n| pos[n.as_str()]).collect()).collect();
    (nodes, adj)
}

/// Power-iteration PageRank over the undirected, unweighted adjacency.
/// Mass on isolated nodes is spread uniformly.
pub fn pagerank(sub: &Subgraph, params: PageRankParams) -> BTreeMap<Concept, f64> {
    let (nodes, adj) = indexed(sub);
    let n = nodes.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let nf = n as f64;
    let d = params.damping;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..params.max_iter {
        let dangling: f64 = (0..n).filter(|&i| adj[i].is_empty()).map(|i| x[i]).sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        let mut next = vec![base; n];
        for (u, nbrs) in adj.iter().enumerate() {
            if nbrs.is_empty() {
                continue;
            }
            let share = d * x[u] / nbrs.len() as f64;
            for &v in nbrs {
                next[v] += share;
            }
        }
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < params.eps {
            break;
        }
    }
    let total: f64 = x.iter().sum();
    nodes.into_iter().zip(x).map(|(c, v)| (c.clone(), v / total)).collect()
}

/// Closeness normalized within each connected component and scaled by the
/// component's share of the graph: `((k-1)/Σd) · ((k-1)/(n-1))` for a node
/// whose component has `k` nodes. Isolated nodes score 0.
pub fn closeness(sub: &Subgraph) -> BTreeMap<Concept, f64> {
    let (nodes, adj) = indexed(sub);
    let n = nodes.len();
    let mut out = BTreeMap::new();
    for (s, node) in nodes.iter().enumerate() {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        let (mut reached, mut total) = (0usize, 0usize);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    reached += 1;
                    total += dist[v];
                    queue.push_back(v);
                }
            }
        }
        let score = if total == 0 || n < 2 {
            0.0
        } else {
            let r = reached as f64;
            (r / total as f64) * (r / (n - 1) as f64)
        };
        out.insert((*node).clone(), score);
    }
    out
}

pub fn node_scores(sub: &Subgraph, params: PageRankParams) -> NodeScores {
    NodeScores { pagerank: pagerank(sub, params), closeness: closeness(sub) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Relation, Triple};

    fn c(s: &str) -> Concept {
        Concept::new(s).unwrap()
    }

    fn sub(edges: &[(&str, &str)], isolated: &[&str]) -> Subgraph {
        let triples = edges.iter().map(|(a, b)| Triple::new(c(a), Relation::IsA, c(b), 1.0)).collect();
        Subgraph::from_parts(vec![], isolated.iter().map(|s| c(s)), triples)
    }

    #[test]
    fn ring_is_uniform() {
        let ring = sub(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "a")], &[]);
        for v in pagerank(&ring, PageRankParams::default()).values() {
            assert!((v - 0.2).abs() < 1e-12);
        }
        for v in closeness(&ring).values() {
            assert!((v - 4.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node() {
        let one = sub(&[], &["solo"]);
        assert_eq!(pagerank(&one, PageRankParams::default())[&c("solo")], 1.0);
        assert_eq!(closeness(&one)[&c("solo")], 0.0);
    }

    #[test]
    fn star_matches_closed_form() {
        // Stationary point: centre = (1 + 3d) / (4(1 + d)), leaves share the rest.
        let star = sub(&[("hub", "a"), ("hub", "b"), ("c", "hub")], &[]);
        let pr = pagerank(&star, PageRankParams { eps: 1e-15, max_iter: 10_000, ..Default::default() });
        let centre = (1.0 + 3.0 * 0.85) / (4.0 * 1.85);
        assert!((pr[&c("hub")] - centre).abs() < 1e-9);
        assert!((pr[&c("a")] - (1.0 - centre) / 3.0).abs() < 1e-9);
        assert_eq!(closeness(&star)[&c("hub")], 1.0);
    }

    #[test]
    fn path_graph_closeness() {
        let cl = closeness(&sub(&[("a", "b"), ("b", "c")], &[]));
        assert_eq!(cl[&c("b")], 1.0);
        assert!((cl[&c("a")] - 2.0 / 3.0).abs() < 1e-15);
        assert!((cl[&c("c")] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn isolated_nodes_and_dangling_mass() {
        let g = sub(&[("a", "b")], &["z"]);
        let pr = pagerank(&g, PageRankParams::default());
        assert!((pr.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pr[&c("z")] > 0.0);
        let cl = closeness(&g);
        assert_eq!(cl[&c("z")], 0.0);
        // Component of 2 in a graph of 3: (1/1) * (1/2).
        assert_eq!(cl[&c("a")], 0.5);
    }
}
