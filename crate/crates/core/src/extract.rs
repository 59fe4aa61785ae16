//! Concept extraction: sentence pairs, gazetteer matching against the graph
//! vocabulary, concept-pair construction and pre-extracted concept lists.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::kg::{normalize_text, Concept, RelationType};
use crate::text::{tokenize, Stopwords, Token};

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("line {line}: duplicate sentence id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown sentence id {id:?}")]
    UnknownId { line: usize, id: String },
    #[error("concept vocabulary is empty")]
    EmptyVocab,
    #[error("concept pair has identical ends: {0}")]
    IdenticalPair(String),
}

/// A relation triple as written in corpus annotations, either
/// `{"head":…, "relation":…, "tail":…}` or `[head, relation, tail]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGoldTriple", into = "RawGoldTriple")]
pub struct GoldTriple {
    pub head: Concept,
    pub relation: RelationType,
    pub tail: Concept,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawGoldTriple {
    Object { head: String, relation: String, tail: String },
    Array(String, String, String),
}

impl TryFrom<RawGoldTriple> for GoldTriple {
    type Error = String;

    fn try_from(raw: RawGoldTriple) -> Result<Self, Self::Error> {
        let (h, r, t) = match raw {
            RawGoldTriple::Object { head, relation, tail } => (head, relation, tail),
            RawGoldTriple::Array(h, r, t) => (h, r, t),
        };
        Ok(GoldTriple {
            head: Concept::new(&h).map_err(|e| e.to_string())?,
            relation: r.parse().map_err(|e: crate::kg::KgError| e.to_string())?,
            tail: Concept::new(&t).map_err(|e| e.to_string())?,
        })
    }
}

impl From<GoldTriple> for RawGoldTriple {
    fn from(t: GoldTriple) -> Self {
        RawGoldTriple::Object { head: t.head.to_string(), relation: t.relation.to_string(), tail: t.tail.to_string() }
    }
}

/// One corpus item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub s1: String,
    pub s2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_implicit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_path: Option<Vec<GoldTriple>>,
}

/// Reads a JSON-lines corpus. Ids must be unique and both sentences non-empty.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<SentencePair>, ExtractError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| ExtractError::Io { line: line_no, source })?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: SentencePair =
            serde_json::from_str(&line).map_err(|e| ExtractError::Record { line: line_no, reason: e.to_string() })?;
        if pair.s1.trim().is_empty() || pair.s2.trim().is_empty() {
            return Err(ExtractError::Record {
                line: line_no,
                reason: format!("sentence pair {:?} has an empty sentence", pair.id),
            });
        }
        if !seen.insert(pair.id.clone()) {
            return Err(ExtractError::DuplicateId { line: line_no, id: pair.id });
        }
        out.push(pair);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptMention {
    pub surface: String,
    /// Character offsets into the sentence, end exclusive. Absent when the
    /// mention came from a pre-extracted list and could not be located.
    pub span: Option<(usize, usize)>,
    pub node: Concept,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptPair {
    pub c_s: Concept,
    pub c_t: Concept,
}

impl ConceptPair {
    pub fn new(c_s: Concept, c_t: Concept) -> Result<Self, ExtractError> {
        if c_s == c_t {
            return Err(ExtractError::IdenticalPair(c_s.to_string()));
        }
        Ok(ConceptPair { c_s, c_t })
    }

    pub fn reversed(&self) -> ConceptPair {
        ConceptPair { c_s: self.c_t.clone(), c_t: self.c_s.clone() }
    }
}

impl std::fmt::Display for ConceptPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.c_s, self.c_t)
    }
}

/// Longest-match gazetteer over a concept vocabulary.
///
/// All n-grams (n ≤ `max_ngram`) that resolve to a vocabulary entry are
/// collected, then accepted longest first and leftmost among equals, skipping
/// any that overlap an accepted span. A plural `-s`/`-es` on the last token is
/// stripped when the surface form itself is not in the vocabulary.
#[derive(Debug, Clone)]
pub struct ConceptExtractor<'v> {
    vocab: &'v BTreeSet<Concept>,
    stopwords: Stopwords,
    max_ngram: usize,
}

impl<'v> ConceptExtractor<'v> {
    pub const DEFAULT_MAX_NGRAM: usize = 4;

    pub fn new(vocab: &'v BTreeSet<Concept>) -> Result<Self, ExtractError> {
        if vocab.is_empty() {
            return Err(ExtractError::EmptyVocab);
        }
        Ok(ConceptExtractor { vocab, stopwords: Stopwords::default(), max_ngram: Self::DEFAULT_MAX_NGRAM })
    }

    pub fn with_stopwords(mut self, stopwords: Stopwords) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn with_max_ngram(mut self, max_ngram: usize) -> Self {
        self.max_ngram = max_ngram.max(1);
        self
    }

    pub fn vocab(&self) -> &BTreeSet<Concept> {
        self.vocab
    }

    pub fn extract(&self, sentence: &str) -> Vec<ConceptMention> {
        let chars: Vec<char> = sentence.chars().collect();
        let tokens = tokenize(sentence);
        let mut candidates: Vec<(usize, usize, &Concept)> = Vec::new();
        for start in 0..tokens.len() {
            for len in 1..=self.max_ngram.min(tokens.len() - start) {
                let gram = &tokens[start..start + len];
                if gram.iter().all(|t| self.stopwords.contains(&t.text)) {
                    continue;
                }
                if let Some(node) = self.resolve(gram, &chars) {
                    candidates.push((start, len, node));
                }
            }
        }
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut taken = vec![false; tokens.len()];
        let mut accepted = Vec::new();
        for (start, len, node) in candidates {
            if taken[start..start + len].iter().any(|t| *t) {
                continue;
            }
            taken[start..start + len].iter_mut().for_each(|t| *t = true);
            accepted.push((start, len, node));
        }
        accepted.sort_by_key(|(start, _, _)| *start);
        accepted
            .into_iter()
            .map(|(start, len, node)| {
                let (from, to) = (tokens[start].start, tokens[start + len - 1].end);
                ConceptMention { surface: chars[from..to].iter().collect(), span: Some((from, to)), node: node.clone() }
            })
            .collect()
    }

    fn resolve(&self, gram: &[Token], chars: &[char]) -> Option<&'v Concept> {
        let span_text: String = chars[gram[0].start..gram[gram.len() - 1].end].iter().collect();
        let spaced = gram.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
        let forms = [normalize_text(&span_text), spaced];
        for form in &forms {
            if let Some(hit) = self.vocab.get(form.as_str()) {
                return Some(hit);
            }
        }
        for form in &forms {
            for suffix in ["s", "es"] {
                if let Some(stem) = form.strip_suffix(suffix) {
                    if stem.len() > 1 && !stem.ends_with(' ') {
                        if let Some(hit) = self.vocab.get(stem) {
                            return Some(hit);
                        }
                    }
                }
            }
        }
        None
    }
}

/// Cross product of S1 and S2 mentions without identical pairs, deduplicated,
/// first occurrence order.
pub fn pair_concepts(m1: &[ConceptMention], m2: &[ConceptMention]) -> Vec<ConceptPair> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for a in m1 {
        for b in m2 {
            if a.node == b.node {
                continue;
            }
            let pair = ConceptPair { c_s: a.node.clone(), c_t: b.node.clone() };
            if seen.insert(pair.clone()) {
                out.push(pair);
            }
        }
    }
    out
}

#[derive(Debug, Deserialize)]
struct PreExtractedRecord {
    id: String,
    #[serde(default)]
    s1_concepts: Vec<String>,
    #[serde(default)]
    s2_concepts: Vec<String>,
}

/// Mentions supplied by an external extractor, keyed by sentence-pair id.
#[derive(Debug, Clone, Default)]
pub struct PreExtracted {
    pub mentions: HashMap<String, (Vec<ConceptMention>, Vec<ConceptMention>)>,
    /// Concepts dropped because they are not in the vocabulary.
    pub dropped: usize,
}

/// Reads `{id, s1_concepts, s2_concepts}` JSON lines. Concepts are normalized,
/// deduplicated and restricted to `vocab`.
pub fn load_pre_extracted<R: BufRead>(
    reader: R,
    corpus: &[SentencePair],
    vocab: &BTreeSet<Concept>,
) -> Result<PreExtracted, ExtractError> {
    let by_id: HashMap<&str, &SentencePair> = corpus.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut out = PreExtracted::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| ExtractError::Io { line: line_no, source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PreExtractedRecord =
            serde_json::from_str(&line).map_err(|e| ExtractError::Record { line: line_no, reason: e.to_string() })?;
        let pair =
            by_id.get(rec.id.as_str()).ok_or_else(|| ExtractError::UnknownId { line: line_no, id: rec.id.clone() })?;
        let m1 = map_listed(&rec.s1_concepts, &pair.s1, vocab, &mut out.dropped);
        let m2 = map_listed(&rec.s2_concepts, &pair.s2, vocab, &mut out.dropped);
        out.mentions.insert(rec.id, (m1, m2));
    }
    if out.dropped > 0 {
        log::warn!("{} pre-extracted concepts are not in the graph vocabulary and were dropped", out.dropped);
    }
    Ok(out)
}

fn map_listed(
    listed: &[String],
    sentence: &str,
    vocab: &BTreeSet<Concept>,
    dropped: &mut usize,
) -> Vec<ConceptMention> {
    let tokens = tokenize(sentence);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in listed {
        let Some(node) = Concept::new(raw).ok().and_then(|c| vocab.get(c.as_str())) else {
            *dropped += 1;
            continue;
        };
        if !seen.insert(node.clone()) {
            continue;
        }
        out.push(ConceptMention { surface: raw.clone(), span: locate(&tokens, node), node: node.clone() });
    }
    out
}

fn locate(tokens: &[Token], node: &Concept) -> Option<(usize, usize)> {
    let words: Vec<&str> = node.tokens().collect();
    tokens
        .windows(words.len())
        .find(|w| w.iter().zip(&words).all(|(t, n)| t.text == *n))
        .map(|w| (w[0].start, w[w.len() - 1].end))
}
