use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{Concept, KgError, Relation, RelationInventory, RelationType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub head: Concept,
    pub relation: RelationType,
    pub tail: Concept,
    pub weight: f64,
}

impl Triple {
    pub fn new(head: Concept, relation: impl Into<RelationType>, tail: Concept, weight: f64) -> Self {
        Triple { head, relation: relation.into(), tail, weight }
    }

    /// (t, r⁻¹, h) for (h, r, t), and back.
    pub fn inverted(&self) -> Result<Triple, KgError> {
        Ok(Triple {
            head: self.tail.clone(),
            relation: self.relation.toggled()?,
            tail: self.head.clone(),
            weight: self.weight,
        })
    }

    fn key(&self) -> (&str, RelationType, &str) {
        (self.head.as_str(), self.relation, self.tail.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

type Index = HashMap<Concept, BTreeMap<RelationType, Vec<usize>>>;

/// An immutable, indexed triple store.
///
/// Triples are kept sorted by (head, relation, tail). The forward index maps
/// (head, relation) to tails and the backward index (tail, relation) to heads;
/// both lists are ordered by weight descending with lexicographic ties.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    inventory: RelationInventory,
    triples: Vec<Triple>,
    vocab: BTreeSet<Concept>,
    fwd: Index,
    bwd: Index,
    skipped_self_loops: usize,
}

impl KnowledgeGraph {
    /// Reads `relation<TAB>head<TAB>tail[<TAB>weight]` lines.
    pub fn load<R: BufRead>(reader: R, inventory: RelationInventory) -> Result<Self, KgError> {
        let mut triples = Vec::new();
        let mut self_loops = 0;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| KgError::Io { line: line_no, source })?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !(3..=4).contains(&fields.len()) {
                return Err(KgError::Malformed {
                    line: line_no,
                    reason: format!("expected 3 or 4 tab-separated fields, found {}", fields.len()),
                });
            }
            let relation: Relation = fields[0].parse()?;
            if !inventory.contains(relation) {
                return Err(KgError::RelationOutsideInventory { line: line_no, relation: relation.name().to_string() });
            }
            let head =
                Concept::new(fields[1]).map_err(|e| KgError::Malformed { line: line_no, reason: e.to_string() })?;
            let tail =
                Concept::new(fields[2]).map_err(|e| KgError::Malformed { line: line_no, reason: e.to_string() })?;
            let weight = match fields.get(3) {
                Some(raw) if !raw.trim().is_empty() => {
                    let w: f64 = raw
                        .trim()
                        .parse()
                        .map_err(|_| KgError::Malformed { line: line_no, reason: format!("invalid weight {raw:?}") })?;
                    if !w.is_finite() || w < 0.0 {
                        return Err(KgError::Malformed {
                            line: line_no,
                            reason: format!("weight must be finite and non-negative, got {w}"),
                        });
                    }
                    w
                }
                _ => 1.0,
            };
            if head == tail {
                log::warn!("line {line_no}: dropping self-loop on {head:?}");
                self_loops += 1;
                continue;
            }
            triples.push(Triple::new(head, relation, tail, weight));
        }
        let mut graph = Self::from_triples(triples, inventory)?;
        graph.skipped_self_loops = self_loops;
        Ok(graph)
    }

    /// Builds a graph from in-memory triples, applying the same dedup rule as
    /// [`KnowledgeGraph::load`] (max weight wins). Self-loops are an error here.
    pub fn from_triples(
        triples: impl IntoIterator<Item = Triple>,
        inventory: RelationInventory,
    ) -> Result<Self, KgError> {
        let mut dedup: BTreeMap<(String, RelationType, String), Triple> = BTreeMap::new();
        for t in triples {
            if t.head == t.tail {
                return Err(KgError::SelfLoop(t.head.to_string()));
            }
            if !inventory.contains(t.relation.relation) {
                return Err(KgError::RelationOutsideInventory {
                    line: 0,
                    relation: t.relation.relation.name().to_string(),
                });
            }
            let key = (t.head.to_string(), t.relation, t.tail.to_string());
            match dedup.get_mut(&key) {
                Some(existing) if existing.weight >= t.weight => {}
                Some(existing) => existing.weight = t.weight,
                None => {
                    dedup.insert(key, t);
                }
            }
        }
        let triples: Vec<Triple> = dedup.into_values().collect();
        Ok(Self::index(triples, inventory))
    }

    fn index(triples: Vec<Triple>, inventory: RelationInventory) -> Self {
        let mut vocab = BTreeSet::new();
        let mut fwd: Index = HashMap::new();
        let mut bwd: Index = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            vocab.insert(t.head.clone());
            vocab.insert(t.tail.clone());
            fwd.entry(t.head.clone()).or_default().entry(t.relation).or_default().push(i);
            bwd.entry(t.tail.clone()).or_default().entry(t.relation).or_default().push(i);
        }
        let order = |ids: &mut Vec<usize>, far: fn(&Triple) -> &Concept| {
            ids.sort_by(|&a, &b| {
                triples[b].weight.total_cmp(&triples[a].weight).then_with(|| far(&triples[a]).cmp(far(&triples[b])))
            });
        };
        for rels in fwd.values_mut() {
            for ids in rels.values_mut() {
                order(ids, |t| &t.tail);
            }
        }
        for rels in bwd.values_mut() {
            for ids in rels.values_mut() {
                order(ids, |t| &t.head);
            }
        }
        KnowledgeGraph { inventory, triples, vocab, fwd, bwd, skipped_self_loops: 0 }
    }

    pub fn inventory(&self) -> &RelationInventory {
        &self.inventory
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn vocab(&self) -> &BTreeSet<Concept> {
        &self.vocab
    }

    pub fn contains_concept(&self, concept: &str) -> bool {
        self.vocab.contains(concept)
    }

    /// Returns the stored concept with this normalized form.
    pub fn concept(&self, concept: &str) -> Option<&Concept> {
        self.vocab.get(concept)
    }

    pub fn skipped_self_loops(&self) -> usize {
        self.skipped_self_loops
    }

    /// True when the graph holds any r⁻¹ triple, i.e. it was closed under inverses.
    pub fn is_closed(&self) -> bool {
        self.triples.iter().any(|t| t.relation.inverted)
    }

    pub fn contains_triple(&self, head: &str, relation: RelationType, tail: &str) -> bool {
        self.triples.binary_search_by(|t| t.key().cmp(&(head, relation, tail))).is_ok()
    }

    pub fn get_triple(&self, head: &str, relation: RelationType, tail: &str) -> Option<&Triple> {
        self.triples.binary_search_by(|t| t.key().cmp(&(head, relation, tail))).ok().map(|i| &self.triples[i])
    }

    /// True when (head, r, tail) holds for any relation r.
    pub fn has_any_relation(&self, head: &str, tail: &str) -> bool {
        self.fwd
            .get(head)
            .map(|rels| rels.values().any(|ids| ids.iter().any(|&i| self.triples[i].tail.as_str() == tail)))
            .unwrap_or(false)
    }

    fn neighbor_ids(&self, concept: &str, relation: RelationType, direction: Direction) -> &[usize] {
        let index = match direction {
            Direction::Forward => &self.fwd,
            Direction::Backward => &self.bwd,
        };
        index.get(concept).and_then(|rels| rels.get(&relation)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Tails of (c, r, ·) for `Forward`, heads of (·, r, c) for `Backward`.
    pub fn neighbors(&self, concept: &str, relation: RelationType, direction: Direction) -> Vec<(Concept, f64)> {
        self.neighbor_ids(concept, relation, direction)
            .iter()
            .map(|&i| {
                let t = &self.triples[i];
                let other = match direction {
                    Direction::Forward => &t.tail,
                    Direction::Backward => &t.head,
                };
                (other.clone(), t.weight)
            })
            .collect()
    }

    /// Concepts reachable from `concept` via one `relation` hop, where an
    /// inverted relation walks a base triple backwards. Works on both open and
    /// closed graphs.
    pub fn follow(&self, concept: &str, relation: RelationType) -> Vec<(Concept, f64)> {
        if relation.inverted && !self.is_closed() {
            self.neighbors(concept, RelationType::base(relation.relation), Direction::Backward)
        } else {
            self.neighbors(concept, relation, Direction::Forward)
        }
    }

    /// All triples incident to `concept`, regardless of direction, in a stable order.
    pub fn incident(&self, concept: &str) -> impl Iterator<Item = &Triple> + '_ {
        let out = self.fwd.get(concept).into_iter().flat_map(|m| m.values().flatten());
        let inc = self.bwd.get(concept).into_iter().flat_map(|m| m.values().flatten());
        out.chain(inc).map(move |&i| &self.triples[i])
    }

    /// Adds (t, r⁻¹, h) for every (h, r, t). Fails when the graph already
    /// contains inverted relations.
    pub fn close_under_inverses(&self) -> Result<KnowledgeGraph, KgError> {
        if self.is_closed() {
            return Err(KgError::AlreadyClosed);
        }
        let mut all = self.triples.clone();
        for t in &self.triples {
            all.push(t.inverted()?);
        }
        KnowledgeGraph::from_triples(all, self.inventory.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{InventoryKind, CN13};
    use proptest::prelude::*;

    fn c(s: &str) -> Concept {
        Concept::new(s).unwrap()
    }

    fn load(src: &str) -> Result<KnowledgeGraph, KgError> {
        KnowledgeGraph::load(src.as_bytes(), RelationInventory::cn13())
    }

    #[test]
    fn loads_single_triple() {
        let g = load("UsedFor\toven\tbaking\n").unwrap();
        assert_eq!(g.len(), 1);
        let vocab: Vec<_> = g.vocab().iter().map(|c| c.as_str()).collect();
        assert_eq!(vocab, ["baking", "oven"]);
        assert_eq!(g.triples()[0].weight, 1.0);
    }

    #[test]
    fn empty_input_gives_empty_graph() {
        let g = load("").unwrap();
        assert!(g.is_empty());
        assert!(g.vocab().is_empty());
    }

    #[test]
    fn duplicate_keeps_max_weight() {
        let g = load("HasA\tcar\tengine\t1.0\nHasA\tcar\tengine\t2.0\nHasA\tCar\tengine\t0.5\n").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.triples()[0].weight, 2.0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = load("UsedFor\toven\tbaking\nUsedFor\toven\n").unwrap_err();
        assert!(matches!(err, KgError::Malformed { line: 2, .. }), "{err}");
        let err = load("UsedFor\toven\tbaking\tabc\n").unwrap_err();
        assert!(matches!(err, KgError::Malformed { line: 1, .. }));
        let err = load("UsedFor\toven\tbaking\t-1\n").unwrap_err();
        assert!(matches!(err, KgError::Malformed { line: 1, .. }));
    }

    #[test]
    fn unknown_relation_is_named() {
        let err = load("\nFlibbles\ta\tb\n").unwrap_err();
        assert!(err.to_string().contains("Flibbles"), "{err}");
        let err = load("RelatedTo\ta\tb\n").unwrap_err();
        assert!(matches!(err, KgError::RelationOutsideInventory { line: 1, ref relation } if relation == "RelatedTo"));
        let g = KnowledgeGraph::load("RelatedTo\ta\tb\n".as_bytes(), RelationInventory::baseline()).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn underscores_and_self_loops() {
        let g = load("IsA\tice_cream\tdessert\nIsA\tDog\tdog\n").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.skipped_self_loops(), 1);
        assert!(g.contains_concept("ice cream"));
    }

    #[test]
    fn neighbors_order_and_absent() {
        let g = load("UsedFor\toven\tbaking\n").unwrap();
        assert_eq!(
            g.neighbors("oven", RelationType::base(Relation::UsedFor), Direction::Forward),
            vec![(c("baking"), 1.0)]
        );
        assert!(g.neighbors("toaster", RelationType::base(Relation::UsedFor), Direction::Forward).is_empty());
        assert_eq!(
            g.neighbors("baking", RelationType::base(Relation::UsedFor), Direction::Backward),
            vec![(c("oven"), 1.0)]
        );

        // Ties are lexicographic, heavier first.
        let g = load("AtLocation\tcup\ttable\t1\nAtLocation\tcup\tcupboard\t1\nAtLocation\tcup\tsink\t3\n").unwrap();
        let got = g.neighbors("cup", RelationType::base(Relation::AtLocation), Direction::Forward);
        assert_eq!(got, vec![(c("sink"), 3.0), (c("cupboard"), 1.0), (c("table"), 1.0)]);
        assert_eq!(got, g.neighbors("cup", RelationType::base(Relation::AtLocation), Direction::Forward));
    }

    #[test]
    fn closing_adds_inverses() {
        let g = load("UsedFor\toven\tbaking\n").unwrap();
        let closed = g.close_under_inverses().unwrap();
        assert_eq!(closed.len(), 2);
        let inv = RelationType::inverse_of(Relation::UsedFor).unwrap();
        assert!(closed.contains_triple("baking", inv, "oven"));
        assert!(matches!(closed.close_under_inverses(), Err(KgError::AlreadyClosed)));
        assert_eq!(closed.follow("baking", inv), g.follow("baking", inv));

        let empty = load("").unwrap().close_under_inverses().unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn closing_five_triple_fixture_doubles() {
        let g = load("IsA\ta\tb\nIsA\tb\tc\nHasA\tc\td\nUsedFor\td\te\nCauses\ta\te\n").unwrap();
        assert_eq!(g.close_under_inverses().unwrap().len(), 10);
    }

    fn arb_graph() -> impl Strategy<Value = Vec<Triple>> {
        let names: Vec<String> = (0..25).map(|i| format!("n{i}")).collect();
        let rel = prop::sample::select(CN13.to_vec());
        prop::collection::vec((prop::sample::select(names.clone()), rel, prop::sample::select(names), 0u8..4), 0..200)
            .prop_map(|raw| {
                raw.into_iter()
                    .filter(|(h, _, t, _)| h != t)
                    .map(|(h, r, t, w)| Triple::new(c(&h), r, c(&t), w as f64))
                    .collect()
            })
    }

    proptest! {
        #[test]
        fn indices_match_triple_set(triples in arb_graph()) {
            let g = KnowledgeGraph::from_triples(triples, RelationInventory::cn13()).unwrap();
            let rebuilt = KnowledgeGraph::from_triples(g.triples().to_vec(), RelationInventory::cn13()).unwrap();
            for concept in g.vocab() {
                for r in CN13 {
                    let rt = RelationType::base(r);
                    for dir in [Direction::Forward, Direction::Backward] {
                        let got = g.neighbors(concept.as_str(), rt, dir);
                        prop_assert_eq!(&got, &rebuilt.neighbors(concept.as_str(), rt, dir));
                        // Brute-force the expected list straight from the triples.
                        let mut want: Vec<(Concept, f64)> = g.triples().iter().filter_map(|t| match dir {
                            Direction::Forward if t.head == *concept && t.relation == rt => Some((t.tail.clone(), t.weight)),
                            Direction::Backward if t.tail == *concept && t.relation == rt => Some((t.head.clone(), t.weight)),
                            _ => None,
                        }).collect();
                        want.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                        prop_assert_eq!(got, want);
                    }
                }
            }
        }

        #[test]
        fn inversion_is_an_involution(triples in arb_graph()) {
            let g = KnowledgeGraph::from_triples(triples, RelationInventory::cn13()).unwrap();
            let closed = g.close_under_inverses().unwrap();
            prop_assert_eq!(closed.len(), 2 * g.len());
            let mut recovered: Vec<Triple> = closed
                .triples()
                .iter()
                .filter(|t| t.relation.inverted)
                .map(|t| t.inverted().unwrap())
                .collect();
            recovered.sort_by(|a, b| a.key().cmp(&b.key()));
            prop_assert_eq!(recovered, g.triples().to_vec());
        }
    }

    #[test]
    fn custom_inventory_admits_part_of() {
        let mut rels: Vec<_> = Relation::classifier_labels().collect();
        rels.push(Relation::PartOf);
        let inv = RelationInventory::from_relations(InventoryKind::Model, rels).unwrap();
        let g = KnowledgeGraph::load("PartOf\trecycle\tenvironmental_protection\n".as_bytes(), inv).unwrap();
        assert!(g.contains_concept("environmental protection"));
    }
}
