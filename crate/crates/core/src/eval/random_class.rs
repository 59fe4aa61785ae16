use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::extract::ConceptPair;
use crate::kg::{Concept, KnowledgeGraph, Relation, Triple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RandomKind {
    /// Head and tail of a positive triple swapped.
    Opposite,
    /// One side of a positive triple replaced by another concept of the same relation.
    Corrupt,
}

/// An unrelated concept pair, labelled `Random`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPair {
    pub pair: ConceptPair,
    pub kind: RandomKind,
    /// Relation of the positive triple the pair was derived from.
    pub source_relation: Relation,
}

type Key = (String, String);

fn key(a: &Concept, b: &Concept) -> Key {
    (a.as_str().to_string(), b.as_str().to_string())
}

struct Pools<'g> {
    heads: BTreeMap<Relation, Vec<&'g Concept>>,
    tails: BTreeMap<Relation, Vec<&'g Concept>>,
}

impl<'g> Pools<'g> {
    fn new(base: &[&'g Triple]) -> Self {
        let mut heads: BTreeMap<Relation, BTreeSet<&Concept>> = BTreeMap::new();
        let mut tails: BTreeMap<Relation, BTreeSet<&Concept>> = BTreeMap::new();
        for t in base {
            heads.entry(t.relation.relation).or_default().insert(&t.head);
            tails.entry(t.relation.relation).or_default().insert(&t.tail);
        }
        let flat = |m: BTreeMap<Relation, BTreeSet<&'g Concept>>| {
            m.into_iter().map(|(r, s)| (r, s.into_iter().collect())).collect()
        };
        Pools { heads: flat(heads), tails: flat(tails) }
    }
}

/// `n` seeded Random-class pairs: `n/2` opposite pairs and `n/2` corrupt
/// pairs. No pair is a positive triple under any relation, no pair repeats,
/// and no pair joins a concept to itself.
pub fn build_random_class(g: &KnowledgeGraph, n: usize, seed: u64) -> Result<Vec<RandomPair>, EvalError> {
    if !n.is_multiple_of(2) {
        return Err(EvalError::InvalidParams(format!("n must be even, got {n}")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<&Triple> =
        g.triples().iter().filter(|t| !t.relation.inverted && t.relation.relation != Relation::Random).collect();
    let mut used: HashSet<Key> = HashSet::new();
    let acceptable = |a: &Concept, b: &Concept, used: &HashSet<Key>| {
        a != b && !g.has_any_relation(a.as_str(), b.as_str()) && !used.contains(&key(a, b))
    };

    let mut opposites: Vec<RandomPair> = Vec::new();
    let mut seen = HashSet::new();
    for t in &base {
        if acceptable(&t.tail, &t.head, &used) && seen.insert(key(&t.tail, &t.head)) {
            opposites.push(RandomPair {
                pair: ConceptPair::new(t.tail.clone(), t.head.clone()).expect("graphs hold no self-loops"),
                kind: RandomKind::Opposite,
                source_relation: t.relation.relation,
            });
        }
    }
    if opposites.len() < half {
        return Err(EvalError::TooFewCandidates { kind: "opposite", needed: half, available: opposites.len() });
    }
    opposites.shuffle(&mut rng);
    opposites.truncate(half);
    used.extend(opposites.iter().map(|p| key(&p.pair.c_s, &p.pair.c_t)));

    let pools = Pools::new(&base);
    let mut corrupt: Vec<RandomPair> = Vec::with_capacity(half);
    let make = |a: &Concept, b: &Concept, r: Relation| RandomPair {
        pair: ConceptPair::new(a.clone(), b.clone()).expect("checked distinct"),
        kind: RandomKind::Corrupt,
        source_relation: r,
    };
    let max_attempts = 50 * half + 1000;
    for _ in 0..max_attempts {
        if corrupt.len() == half {
            break;
        }
        let t = base[rng.gen_range(0..base.len())];
        let r = t.relation.relation;
        let (a, b) = if rng.gen_bool(0.5) {
            let pool = &pools.heads[&r];
            (pool[rng.gen_range(0..pool.len())], &t.tail)
        } else {
            let pool = &pools.tails[&r];
            (&t.head, pool[rng.gen_range(0..pool.len())])
        };
        if acceptable(a, b, &used) {
            used.insert(key(a, b));
            corrupt.push(make(a, b, r));
        }
    }
    if corrupt.len() < half {
        // Sampling stalled on a dense graph; fall back to the full candidate list.
        let mut rest: Vec<RandomPair> = Vec::new();
        let mut seen = HashSet::new();
        for t in &base {
            let r = t.relation.relation;
            let swaps =
                pools.heads[&r].iter().map(|h| (*h, &t.tail)).chain(pools.tails[&r].iter().map(|tl| (&t.head, *tl)));
            for (a, b) in swaps {
                if acceptable(a, b, &used) && seen.insert(key(a, b)) {
                    rest.push(make(a, b, r));
                }
            }
        }
        let needed = half - corrupt.len();
        if rest.len() < needed {
            return Err(EvalError::TooFewCandidates {
                kind: "corrupt",
                needed: half,
                available: corrupt.len() + rest.len(),
            });
        }
        rest.shuffle(&mut rng);
        corrupt.extend(rest.into_iter().take(needed));
    }

    opposites.extend(corrupt);
    Ok(opposites)
}
