//! Invariants of gazetteer extraction and pairing.

use std::collections::BTreeSet;

use connect_core::extract::{pair_concepts, ConceptExtractor};
use connect_core::kg::Concept;
use proptest::prelude::*;

const WORDS: &[&str] = &["oven", "baking", "bread", "car", "engine", "waste", "recycle", "green", "tea", "cup"];

fn vocab() -> BTreeSet<Concept> {
    let mut v: BTreeSet<Concept> = WORDS.iter().map(|w| Concept::new(w).unwrap()).collect();
    for phrase in ["green tea", "tea cup", "car engine", "bread oven"] {
        v.insert(Concept::new(phrase).unwrap());
    }
    v
}

fn sentence() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec![
        "the", "oven", "baking", "bread", "car", "engine", "waste", "recycle", "green", "tea", "cup", "is", "hot",
        "cups", "ovens",
    ]);
    prop::collection::vec(word, 0..12).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn mentions_are_in_vocab_disjoint_and_ordered(s in sentence()) {
        let v = vocab();
        let ex = ConceptExtractor::new(&v).unwrap();
        let mentions = ex.extract(&s);
        let chars: Vec<char> = s.chars().collect();
        let mut last_end = 0;
        for m in &mentions {
            prop_assert!(v.contains(&m.node));
            let (from, to) = m.span.unwrap();
            prop_assert!(from >= last_end && from < to && to <= chars.len());
            prop_assert_eq!(chars[from..to].iter().collect::<String>(), m.surface.clone());
            last_end = to;
        }
        // Deterministic.
        prop_assert_eq!(ex.extract(&s), mentions);
    }

    #[test]
    fn pairs_are_distinct_cross_products(a in sentence(), b in sentence()) {
        let v = vocab();
        let ex = ConceptExtractor::new(&v).unwrap();
        let (m1, m2) = (ex.extract(&a), ex.extract(&b));
        let pairs = pair_concepts(&m1, &m2);
        let unique: BTreeSet<_> = pairs.iter().cloned().collect();
        prop_assert_eq!(unique.len(), pairs.len());
        for p in &pairs {
            prop_assert!(p.c_s != p.c_t);
            prop_assert!(m1.iter().any(|m| m.node == p.c_s));
            prop_assert!(m2.iter().any(|m| m.node == p.c_t));
        }
        let expected: BTreeSet<_> = m1.iter().flat_map(|x| m2.iter().filter(move |y| y.node != x.node).map(move |y| (x.node.clone(), y.node.clone()))).collect();
        prop_assert_eq!(pairs.iter().map(|p| (p.c_s.clone(), p.c_t.clone())).collect::<BTreeSet<_>>(), expected);
    }
}
