//! Type-based filtering of predicted triples by part-of-speech sequence patterns.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::kg::{Concept, Relation, RelationType, CN13};

const DEFAULT_LEXICON: &str = include_str!("../../data/pos_lexicon.tsv");
const DEFAULT_PATTERNS: &str = include_str!("../../data/pos_patterns.tsv");

#[derive(Debug, thiserror::Error)]
pub enum PosError {
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("pattern table has no entry for {0}")]
    MissingRelation(Relation),
}

/// Universal PoS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Det,
    Pron,
    Adp,
    Conj,
    Num,
    Prt,
    X,
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "DET" => PosTag::Det,
            "PRON" => PosTag::Pron,
            "ADP" => PosTag::Adp,
            "CONJ" => PosTag::Conj,
            "NUM" => PosTag::Num,
            "PRT" => PosTag::Prt,
            "X" => PosTag::X,
            other => return Err(format!("unknown tag {other:?}")),
        })
    }
}

/// Lexicon lookup with suffix fallback: `-ing`/`-ed` → VERB, `-ly` → ADV,
/// digits → NUM, everything else NOUN.
#[derive(Debug, Clone)]
pub struct Tagger {
    lexicon: HashMap<String, PosTag>,
}

impl Tagger {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, PosError> {
        let mut lexicon = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| PosError::Format { line: idx + 1, reason: "expected word<TAB>tag".into() })?;
            let tag = tag.trim().parse().map_err(|reason| PosError::Format { line: idx + 1, reason })?;
            lexicon.entry(word.trim().to_lowercase()).or_insert(tag);
        }
        Ok(Tagger { lexicon })
    }

    pub fn tag_word(&self, word: &str) -> PosTag {
        let lower = word.to_lowercase();
        if let Some(tag) = self.lexicon.get(&lower) {
            return *tag;
        }
        let n = lower.chars().count();
        if lower.chars().all(|c| c.is_ascii_digit()) {
            PosTag::Num
        } else if n >= 5 && (lower.ends_with("ing") || lower.ends_with("ed")) {
            PosTag::Verb
        } else if n >= 4 && lower.ends_with("ly") {
            PosTag::Adv
        } else {
            PosTag::Noun
        }
    }

    pub fn tag(&self, concept: &Concept) -> Vec<PosTag> {
        concept.tokens().map(|w| self.tag_word(w)).collect()
    }
}

impl Default for Tagger {
    fn default() -> Self {
        Tagger::from_reader(DEFAULT_LEXICON.as_bytes()).expect("bundled lexicon is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantifier {
    One,
    Optional,
    Star,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Item {
    tag: Option<PosTag>,
    quantifier: Quantifier,
}

/// A tag-sequence pattern such as `DET? ADJ* NOUN+` or `VERB ANY*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosPattern {
    source: String,
    items: Vec<Item>,
}

impl FromStr for PosPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut items = Vec::new();
        for raw in s.split_whitespace() {
            let (name, quantifier) = match raw.chars().last() {
                Some('?') => (&raw[..raw.len() - 1], Quantifier::Optional),
                Some('*') => (&raw[..raw.len() - 1], Quantifier::Star),
                Some('+') => (&raw[..raw.len() - 1], Quantifier::Plus),
                _ => (raw, Quantifier::One),
            };
            let tag = if name.eq_ignore_ascii_case("ANY") { None } else { Some(name.parse()?) };
            items.push(Item { tag, quantifier });
        }
        if items.is_empty() {
            return Err("empty pattern".into());
        }
        Ok(PosPattern { source: s.trim().to_string(), items })
    }
}

impl fmt::Display for PosPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl PosPattern {
    pub fn matches(&self, tags: &[PosTag]) -> bool {
        // reachable[j]: the items consumed so far can end exactly at tag j.
        let mut reachable = vec![false; tags.len() + 1];
        reachable[0] = true;
        for item in &self.items {
            let accepts = |t: PosTag| item.tag.is_none_or(|want| want == t);
            let mut next = vec![false; tags.len() + 1];
            for start in (0..=tags.len()).filter(|&j| reachable[j]) {
                let (min, max) = match item.quantifier {
                    Quantifier::One => (1, 1),
                    Quantifier::Optional => (0, 1),
                    Quantifier::Star => (0, usize::MAX),
                    Quantifier::Plus => (1, usize::MAX),
                };
                let mut count = 0;
                let mut pos = start;
                loop {
                    if count >= min {
                        next[pos] = true;
                    }
                    if count == max || pos == tags.len() || !accepts(tags[pos]) {
                        break;
                    }
                    pos += 1;
                    count += 1;
                }
            }
            reachable = next;
        }
        reachable[tags.len()]
    }
}

/// Allowed (head pattern, tail pattern) combinations per relation.
#[derive(Debug, Clone)]
pub struct PosPatternTable {
    patterns: BTreeMap<Relation, Vec<(PosPattern, PosPattern)>>,
}

impl PosPatternTable {
    /// `relation<TAB>head_pattern<TAB>tail_pattern` lines. Every CN-13
    /// relation must appear at least once.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, PosError> {
        let mut patterns: BTreeMap<Relation, Vec<(PosPattern, PosPattern)>> = BTreeMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [rel, head, tail] = fields.as_slice() else {
                return Err(PosError::Format { line: line_no, reason: "expected 3 tab-separated fields".into() });
            };
            let fmt_err = |reason: String| PosError::Format { line: line_no, reason };
            let rel: Relation = rel.parse().map_err(|e: crate::kg::KgError| fmt_err(e.to_string()))?;
            let head: PosPattern = head.parse().map_err(fmt_err)?;
            let tail: PosPattern = tail.parse().map_err(|e| PosError::Format { line: line_no, reason: e })?;
            patterns.entry(rel).or_default().push((head, tail));
        }
        for r in CN13 {
            if !patterns.contains_key(&r) {
                return Err(PosError::MissingRelation(r));
            }
        }
        Ok(PosPatternTable { patterns })
    }

    pub fn patterns(&self, relation: Relation) -> Option<&[(PosPattern, PosPattern)]> {
        self.patterns.get(&relation).map(Vec::as_slice)
    }
}

impl Default for PosPatternTable {
    fn default() -> Self {
        PosPatternTable::from_reader(DEFAULT_PATTERNS.as_bytes()).expect("bundled pattern table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Drop,
}

/// Keep iff the argument tag sequences match an allowed pattern pair for the
/// relation. Inverted relations are checked with arguments swapped; relations
/// missing from the table are kept.
pub fn pos_filter(
    head: &Concept,
    relation: RelationType,
    tail: &Concept,
    table: &PosPatternTable,
    tagger: &Tagger,
) -> Verdict {
    let Some(allowed) = table.patterns(relation.relation) else {
        return Verdict::Keep;
    };
    let (h, t) = if relation.inverted { (tail, head) } else { (head, tail) };
    let (ht, tt) = (tagger.tag(h), tagger.tag(t));
    if allowed.iter().any(|(hp, tp)| hp.matches(&ht) && tp.matches(&tt)) {
        Verdict::Keep
    } else {
        Verdict::Drop
    }
}

/// A pattern table paired with the tagger used to apply it.
#[derive(Debug, Clone, Default)]
pub struct PosFilter {
    pub table: PosPatternTable,
    pub tagger: Tagger,
}

impl PosFilter {
    pub fn keep(&self, head: &Concept, relation: RelationType, tail: &Concept) -> bool {
        pos_filter(head, relation, tail, &self.table, &self.tagger) == Verdict::Keep
    }
}
