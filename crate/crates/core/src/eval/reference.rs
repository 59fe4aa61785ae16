use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::backends::RelationClassifier;
use crate::embed::{cosine, cosine_slices, EmbeddingStore};
use crate::extract::{ConceptExtractor, ConceptPair};
use crate::kg::{Concept, Relation, RelationType};
use crate::text;

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    SilverPath,
    GoldPath,
    GoldNl,
}

/// A reference in the textual form that generated output is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEncoding {
    pub kind: ReferenceKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<Vec<(Concept, RelationType, Concept)>>,
}

/// Natural-language templates per relation, `{0}` for the head and `{1}` for the tail.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateTable(BTreeMap<Relation, String>);

impl TemplateTable {
    /// `relation<TAB>template` lines; blank lines and `#` comments are skipped.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, EvalError> {
        let mut map = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let bad = |reason: String| EvalError::Template { line: idx + 1, reason };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (rel, template) = line.split_once('\t').ok_or_else(|| bad("expected relation<TAB>template".into()))?;
            let rel: Relation = rel.trim().parse().map_err(|e: crate::kg::KgError| bad(e.to_string()))?;
            if !(template.contains("{0}") && template.contains("{1}")) {
                return Err(bad(format!("template for {rel} must use both {{0}} and {{1}}")));
            }
            map.insert(rel, template.trim().to_string());
        }
        Ok(TemplateTable(map))
    }

    /// Renders each hop, swapping arguments for inverted relations, and joins
    /// the sentences with ". ".
    pub fn render(&self, hops: &[(&str, RelationType, &str)]) -> Result<String, EvalError> {
        let mut parts = Vec::with_capacity(hops.len());
        for &(source, relation, target) in hops {
            let template = self.0.get(&relation.relation).ok_or(EvalError::MissingTemplate(relation.relation))?;
            let (head, tail) = if relation.inverted { (target, source) } else { (source, target) };
            parts.push(template.replace("{0}", head).replace("{1}", tail));
        }
        Ok(parts.join(". "))
    }
}

impl Default for TemplateTable {
    fn default() -> Self {
        TemplateTable::from_reader(DEFAULT_TEMPLATES.as_bytes()).expect("bundled template table is valid")
    }
}

/// Relational form: "head Relation tail" per underlying triple, joined by ". ".
pub fn linearize(hops: &[(&str, RelationType, &str)]) -> String {
    hops.iter()
        .map(|&(s, r, t)| {
            let (h, t) = if r.inverted { (t, s) } else { (s, t) };
            format!("{h} {} {t}", r.relation.name())
        })
        .collect::<Vec<_>>()
        .join(". ")
}

/// Cosine between the averaged embeddings of two whole texts.
pub fn encode_and_cosim(generated: &str, reference: &str, emb: &EmbeddingStore) -> f64 {
    cosine(&emb.encode_text(generated), &emb.encode_text(reference)).expect("one store, one dimension")
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TokenF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when either side had no tokens; all scores are then 0.
    pub degenerate: bool,
}

fn token_similarity(a: &str, b: &str, emb: &EmbeddingStore) -> f64 {
    if a == b {
        return 1.0;
    }
    match (emb.word_vector(a), emb.word_vector(b)) {
        (Some(u), Some(v)) => cosine_slices(&u, &v).expect("one store, one dimension"),
        _ => 0.0,
    }
}

fn greedy(from: &[String], to: &[String], emb: &EmbeddingStore) -> f64 {
    let total: f64 = from
        .iter()
        .map(|a| to.iter().map(|b| token_similarity(a, b, emb)).fold(f64::NEG_INFINITY, f64::max).clamp(0.0, 1.0))
        .sum();
    total / from.len() as f64
}

/// Greedy-match token F1 over static word vectors: every candidate token is
/// matched to its most similar reference token (precision) and vice versa
/// (recall). Identical tokens score 1, stopwords are kept, and similarities
/// are floored at 0.
pub fn token_match_f1(candidate: &str, reference: &str, emb: &EmbeddingStore) -> TokenF1 {
    let cand = text::words(candidate);
    let refs = text::words(reference);
    if cand.is_empty() || refs.is_empty() {
        return TokenF1 { degenerate: true, ..TokenF1::default() };
    }
    let precision = greedy(&cand, &refs, emb);
    let recall = greedy(&refs, &cand, emb);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    TokenF1 { precision, recall, f1, degenerate: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilverPath {
    pub triples: Vec<(Concept, RelationType, Concept)>,
    /// Distinct concepts found in the sentence.
    pub concepts: usize,
}

impl SilverPath {
    pub fn hops(&self) -> Vec<(&str, RelationType, &str)> {
        self.triples.iter().map(|(h, r, t)| (h.as_str(), *r, t.as_str())).collect()
    }
}

/// Relational encoding of a gold sentence: its concepts, in textual order,
/// are classified pairwise in both orders and every relation at or above
/// `threshold` becomes a triple.
pub fn build_silver_path<C: RelationClassifier + ?Sized>(
    sentence: &str,
    extractor: &ConceptExtractor<'_>,
    classifier: &C,
    threshold: f64,
) -> Result<SilverPath, EvalError> {
    let mut concepts: Vec<Concept> = Vec::new();
    for m in extractor.extract(sentence) {
        if !concepts.contains(&m.node) {
            concepts.push(m.node);
        }
    }
    let mut triples = Vec::new();
    for (i, a) in concepts.iter().enumerate() {
        for (j, b) in concepts.iter().enumerate() {
            if i == j {
                continue;
            }
            let pair = ConceptPair::new(a.clone(), b.clone()).expect("distinct concepts");
            for (relation, _) in classifier.classify(&pair)?.above(threshold) {
                triples.push((a.clone(), RelationType::base(relation), b.clone()));
            }
        }
    }
    Ok(SilverPath { triples, concepts: concepts.len() })
}
