use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::pathfind::{ConnectResult, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: String,
    pub pairs: usize,
    pub linked_pairs: usize,
    pub direct: usize,
    pub multihop: usize,
    /// Mean hop count over linked pairs, a direct link counting as one hop.
    /// `None` when nothing is linked.
    pub avg_hops: Option<f64>,
    /// Share of each relation among all reported links and path hops.
    pub relation_histogram: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub methods: Vec<MethodStats>,
}

fn method_stats(method: &str, results: &[ConnectResult]) -> MethodStats {
    let (mut direct, mut multihop, mut hops) = (0usize, 0usize, 0usize);
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for r in results {
        match &r.verdict {
            Verdict::Direct(links) => {
                direct += 1;
                hops += 1;
                for l in links {
                    *counts.entry(l.relation.name()).or_default() += 1;
                }
            }
            Verdict::Multihop(paths) => {
                multihop += 1;
                hops += paths.first().map_or(0, |p| p.len());
                for h in paths.iter().flat_map(|p| &p.hops) {
                    *counts.entry(h.relation.relation.name()).or_default() += 1;
                }
            }
            Verdict::Unconnected => {}
        }
    }
    let linked = direct + multihop;
    let total: usize = counts.values().sum();
    MethodStats {
        method: method.to_string(),
        pairs: results.len(),
        linked_pairs: linked,
        direct,
        multihop,
        avg_hops: (linked > 0).then(|| hops as f64 / linked as f64),
        relation_histogram: counts.into_iter().map(|(r, n)| (r.to_string(), n as f64 / total as f64)).collect(),
    }
}

/// Linked-pair counts, average hops and relation shares per method, in the
/// order given.
pub fn corpus_stats(methods: &[(String, Vec<ConnectResult>)]) -> CorpusStats {
    CorpusStats { methods: methods.iter().map(|(m, r)| method_stats(m, r)).collect() }
}

/// Plain-text report: one row per method with linked pairs and average hops,
/// followed by the relation distribution (percent) with one column per method.
pub fn render_table(stats: &CorpusStats) -> String {
    let mut out = String::new();
    let width = stats.methods.iter().map(|m| m.method.len()).max().unwrap_or(0).max("Method".len());
    let _ = writeln!(out, "{:<width$}  {:>12}  {:>9}", "Method", "Linked pairs", "Avg. hops");
    let _ = writeln!(out, "{}  {}  {}", "-".repeat(width), "-".repeat(12), "-".repeat(9));
    for m in &stats.methods {
        let hops = m.avg_hops.map_or_else(|| "-".to_string(), |h| format!("{h:.2}"));
        let _ = writeln!(out, "{:<width$}  {:>12}  {:>9}", m.method, m.linked_pairs, hops);
    }

    let relations: BTreeSet<&str> =
        stats.methods.iter().flat_map(|m| m.relation_histogram.keys().map(String::as_str)).collect();
    if relations.is_empty() {
        return out;
    }
    let rel_width = relations.iter().map(|r| r.len()).max().unwrap_or(0).max("Relation".len());
    let cols: Vec<usize> = stats.methods.iter().map(|m| m.method.len().max(6)).collect();
    let _ = write!(out, "\n{:<rel_width$}", "Relation");
    for (m, w) in stats.methods.iter().zip(&cols) {
        let _ = write!(out, "  {:>w$}", m.method);
    }
    out.push('\n');
    for r in relations {
        let _ = write!(out, "{r:<rel_width$}");
        for (m, w) in stats.methods.iter().zip(&cols) {
            let share = m.relation_histogram.get(r).copied().unwrap_or(0.0) * 100.0;
            let _ = write!(out, "  {:>w$}", format!("{share:.1}"));
        }
        out.push('\n');
    }
    out
}
