use serde::{Deserialize, Serialize};

use super::{path_order, DirectLink, KnowledgePath, PathfindError};
use crate::extract::ConceptPair;

/// How a concept pair ended up connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "evidence", rename_all = "lowercase")]
pub enum Verdict {
    Direct(Vec<DirectLink>),
    Multihop(Vec<KnowledgePath>),
    Unconnected,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Direct(_) => "direct",
            Verdict::Multihop(_) => "multihop",
            Verdict::Unconnected => "unconnected",
        }
    }

    pub fn is_connected(&self) -> bool {
        !matches!(self, Verdict::Unconnected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectResult {
    pub pair: ConceptPair,
    pub verdict: Verdict,
    /// Multihop paths found but not reported because a direct link won.
    pub discarded_multihop: usize,
}

fn check_pair(pair: &ConceptPair, direct: &[DirectLink], multihop: &[KnowledgePath]) -> Result<(), PathfindError> {
    if let Some(link) = direct.iter().find(|l| l.pair != *pair) {
        return Err(PathfindError::PairMismatch {
            expected: pair.clone(),
            found: format!("direct link on {}", link.pair),
        });
    }
    for path in multihop {
        let first = path.hops.first().map(|h| &h.source);
        let last = path.hops.last().map(|h| &h.target);
        if first != Some(&pair.c_s) && last != Some(&pair.c_t) {
            let nodes: Vec<&str> = path.nodes().iter().map(|c| c.as_str()).collect();
            return Err(PathfindError::PairMismatch {
                expected: pair.clone(),
                found: format!("path {}", nodes.join(" -> ")),
            });
        }
    }
    Ok(())
}

/// Direct links take precedence; otherwise the `top_k` best multihop paths;
/// otherwise the pair is unconnected.
pub fn combine(
    pair: &ConceptPair,
    direct: Vec<DirectLink>,
    mut multihop: Vec<KnowledgePath>,
    top_k: usize,
) -> Result<ConnectResult, PathfindError> {
    if top_k == 0 {
        return Err(PathfindError::InvalidParams("top_k must be at least 1".into()));
    }
    check_pair(pair, &direct, &multihop)?;
    let (verdict, discarded_multihop) = if !direct.is_empty() {
        (Verdict::Direct(direct), multihop.len())
    } else if !multihop.is_empty() {
        multihop.sort_by(path_order);
        multihop.truncate(top_k);
        (Verdict::Multihop(multihop), 0)
    } else {
        (Verdict::Unconnected, 0)
    };
    Ok(ConnectResult { pair: pair.clone(), verdict, discarded_multihop })
}
