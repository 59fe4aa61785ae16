use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{
    build_silver_path, encode_and_cosim, linearize, token_match_f1, EvalError, ReferenceKind, TemplateTable, TokenF1,
};
use crate::backends::RelationClassifier;
use crate::embed::EmbeddingStore;
use crate::extract::{ConceptExtractor, SentencePair};
use crate::kg::{Concept, RelationType};
use crate::pathfind::{ConnectResult, Verdict};

/// Which comparison to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Generated paths against silver paths derived from the gold sentence.
    A,
    /// Templated generated paths against the gold sentence.
    B,
    /// Generated paths against annotated gold paths.
    C,
}

impl Setting {
    pub fn letter(self) -> char {
        match self {
            Setting::A => 'a',
            Setting::B => 'b',
            Setting::C => 'c',
        }
    }

    pub fn reference(self) -> ReferenceKind {
        match self {
            Setting::A => ReferenceKind::SilverPath,
            Setting::B => ReferenceKind::GoldNl,
            Setting::C => ReferenceKind::GoldPath,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Setting::A => "generated vs silver paths",
            Setting::B => "generated NL vs gold NL",
            Setting::C => "generated vs gold paths",
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim_matches(|c| c == '(' || c == ')') {
            "a" | "A" => Ok(Setting::A),
            "b" | "B" => Ok(Setting::B),
            "c" | "C" => Ok(Setting::C),
            other => Err(format!("unknown setting {other:?} (expected a, b or c)")),
        }
    }
}

/// A connect result together with the sentence pair it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub sentence_id: String,
    pub result: ConnectResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingScores {
    pub description: String,
    pub reference: ReferenceKind,
    /// Mean cosine of averaged embeddings.
    pub cosim: f64,
    /// Mean greedy-match token precision, recall and F1 (static vectors; an
    /// approximation of contextual token matching).
    pub greedy_match_f1: TokenF1,
    pub scored: usize,
    /// Linked items without a usable reference.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub settings: BTreeMap<Setting, SettingScores>,
}

/// Hops reported for a result: each direct link as a one-hop triple, or every
/// hop of every kept path. Unconnected results have none.
pub fn generated_triples(result: &ConnectResult) -> Vec<(Concept, RelationType, Concept)> {
    match &result.verdict {
        Verdict::Direct(links) => {
            links.iter().map(|l| (l.pair.c_s.clone(), RelationType::base(l.relation), l.pair.c_t.clone())).collect()
        }
        Verdict::Multihop(paths) => {
            paths.iter().flat_map(|p| &p.hops).map(|h| (h.source.clone(), h.relation, h.target.clone())).collect()
        }
        Verdict::Unconnected => Vec::new(),
    }
}

fn as_hops(triples: &[(Concept, RelationType, Concept)]) -> Vec<(&str, RelationType, &str)> {
    triples.iter().map(|(h, r, t)| (h.as_str(), *r, t.as_str())).collect()
}

/// Silver-path inputs for setting (a).
pub struct SilverSource<'a> {
    pub extractor: &'a ConceptExtractor<'a>,
    pub classifier: &'a dyn RelationClassifier,
    pub threshold: f64,
}

/// Scores every linked item against the reference that `setting` calls for.
/// Items whose sentence pair lacks that reference are skipped; a corpus with
/// no gold paths at all cannot be scored in setting (c).
pub fn evaluate(
    setting: Setting,
    corpus: &[SentencePair],
    items: &[EvalItem],
    emb: &EmbeddingStore,
    templates: &TemplateTable,
    silver: Option<SilverSource<'_>>,
) -> Result<MetricReport, EvalError> {
    if setting == Setting::C && !corpus.iter().any(|p| p.gold_path.is_some()) {
        return Err(EvalError::MissingReference { setting: 'c', field: "gold_path" });
    }
    if setting == Setting::A && silver.is_none() {
        return Err(EvalError::InvalidParams("setting (a) needs a classifier for silver paths".into()));
    }
    let by_id: HashMap<&str, &SentencePair> = corpus.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut references: HashMap<&str, Option<String>> = HashMap::new();

    let (mut cosim, mut p, mut r, mut f) = (0.0, 0.0, 0.0, 0.0);
    let (mut scored, mut skipped) = (0usize, 0usize);
    for item in items {
        let generated = generated_triples(&item.result);
        if generated.is_empty() {
            continue;
        }
        let Some(pair) = by_id.get(item.sentence_id.as_str()) else {
            skipped += 1;
            continue;
        };
        let reference = match references.get(item.sentence_id.as_str()) {
            Some(r) => r.clone(),
            None => {
                let r = match setting {
                    Setting::A => match (&pair.gold_implicit, &silver) {
                        (Some(gold), Some(src)) => {
                            let path = build_silver_path(gold, src.extractor, src.classifier, src.threshold)?;
                            (!path.triples.is_empty()).then(|| linearize(&path.hops()))
                        }
                        _ => None,
                    },
                    Setting::B => pair.gold_implicit.clone().filter(|s| !s.trim().is_empty()),
                    Setting::C => pair.gold_path.as_ref().filter(|g| !g.is_empty()).map(|g| {
                        let hops: Vec<(&str, RelationType, &str)> =
                            g.iter().map(|t| (t.head.as_str(), t.relation, t.tail.as_str())).collect();
                        linearize(&hops)
                    }),
                };
                references.insert(item.sentence_id.as_str(), r.clone());
                r
            }
        };
        let Some(reference) = reference else {
            skipped += 1;
            continue;
        };
        let candidate = match setting {
            Setting::B => templates.render(&as_hops(&generated))?,
            Setting::A | Setting::C => linearize(&as_hops(&generated)),
        };
        cosim += encode_and_cosim(&candidate, &reference, emb);
        let t = token_match_f1(&candidate, &reference, emb);
        p += t.precision;
        r += t.recall;
        f += t.f1;
        scored += 1;
    }
    let n = scored.max(1) as f64;
    let scores = SettingScores {
        description: setting.description().to_string(),
        reference: setting.reference(),
        cosim: cosim / n,
        greedy_match_f1: TokenF1 { precision: p / n, recall: r / n, f1: f / n, degenerate: scored == 0 },
        scored,
        skipped,
    };
    Ok(MetricReport { settings: BTreeMap::from([(setting, scores)]) })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;
    use std::sync::Arc;

    use super::*;
    use crate::backends::KgOracle;
    use crate::extract::{ConceptPair, GoldTriple};
    use crate::kg::{KnowledgeGraph, Relation, RelationInventory};
    use crate::pathfind::DirectLink;

    fn c(s: &str) -> Concept {
        Concept::new(s).unwrap()
    }

    fn emb() -> EmbeddingStore {
        EmbeddingStore::from_vectors(2, [("dog", vec![1.0, 0.0]), ("bone", vec![0.3, 1.0]), ("cat", vec![0.9, 0.2])])
            .unwrap()
    }

    fn corpus(gold_path: bool) -> Vec<SentencePair> {
        vec![SentencePair {
            id: "p1".into(),
            s1: "The dog is hungry".into(),
            s2: "It chews".into(),
            gold_implicit: Some("My dog has a bone".into()),
            gold_path: gold_path.then(|| {
                vec![GoldTriple { head: c("dog"), relation: RelationType::base(Relation::HasA), tail: c("bone") }]
            }),
        }]
    }

    fn item(head: &str) -> EvalItem {
        let pair = ConceptPair::new(c(head), c("bone")).unwrap();
        EvalItem {
            sentence_id: "p1".into(),
            result: ConnectResult {
                pair: pair.clone(),
                verdict: Verdict::Direct(vec![DirectLink { pair, relation: Relation::HasA, probability: 1.0 }]),
                discarded_multihop: 0,
            },
        }
    }

    #[test]
    fn identical_to_silver_scores_one() {
        let g = KnowledgeGraph::load("HasA\tdog\tbone\n".as_bytes(), RelationInventory::cn13()).unwrap();
        let vocab: BTreeSet<Concept> = g.vocab().clone();
        let oracle = KgOracle::new(Arc::new(g));
        let ex = ConceptExtractor::new(&vocab).unwrap();
        let silver = SilverSource { extractor: &ex, classifier: &oracle, threshold: 0.9 };
        let report =
            evaluate(Setting::A, &corpus(false), &[item("dog")], &emb(), &TemplateTable::default(), Some(silver))
                .unwrap();
        let s = &report.settings[&Setting::A];
        assert_eq!(s.scored, 1);
        assert!((s.cosim - 1.0).abs() < 1e-12);
        assert_eq!(s.greedy_match_f1.f1, 1.0);
    }

    #[test]
    fn setting_c_needs_gold_paths() {
        let err =
            evaluate(Setting::C, &corpus(false), &[item("dog")], &emb(), &TemplateTable::default(), None).unwrap_err();
        assert!(matches!(err, EvalError::MissingReference { setting: 'c', .. }));
        let report =
            evaluate(Setting::C, &corpus(true), &[item("cat")], &emb(), &TemplateTable::default(), None).unwrap();
        let s = &report.settings[&Setting::C];
        assert_eq!(s.scored, 1);
        assert!(s.cosim < 1.0 && s.cosim > 0.9);
    }

    #[test]
    fn setting_b_uses_templates() {
        let report =
            evaluate(Setting::B, &corpus(false), &[item("dog")], &emb(), &TemplateTable::default(), None).unwrap();
        let s = &report.settings[&Setting::B];
        // "dog has bone" vs "My dog has a bone": same content words.
        assert!((s.cosim - 1.0).abs() < 1e-12);
        let f = s.greedy_match_f1;
        assert_eq!(f.precision, 1.0);
        assert!((f.recall - 3.0 / 5.0).abs() < 1e-12);
        let json = serde_json::to_value(&report).unwrap();
        assert!(json["settings"]["b"]["greedy_match_f1"]["f1"].is_number());
    }
}
