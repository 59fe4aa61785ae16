use std::collections::HashMap;
use std::sync::Mutex;

use super::{BackendError, GeneratedTarget, RelationClassifier, RelationDistribution, TargetGenerator};
use crate::extract::ConceptPair;
use crate::kg::{Concept, Relation, RelationType};

type GenKey = (String, RelationType, usize);

/// Per-run memo table in front of a backend. Only successful answers are cached.
#[derive(Debug, Default)]
pub struct Memoized<B> {
    inner: B,
    classified: Mutex<HashMap<ConceptPair, RelationDistribution>>,
    generated: Mutex<HashMap<GenKey, Vec<GeneratedTarget>>>,
}

impl<B> Memoized<B> {
    pub fn new(inner: B) -> Self {
        Memoized { inner, classified: Mutex::default(), generated: Mutex::default() }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: RelationClassifier> RelationClassifier for Memoized<B> {
    fn classify(&self, pair: &ConceptPair) -> Result<RelationDistribution, BackendError> {
        if let Some(hit) = self.classified.lock().expect("memo poisoned").get(pair) {
            return Ok(hit.clone());
        }
        let fresh = self.inner.classify(pair)?;
        self.classified.lock().expect("memo poisoned").insert(pair.clone(), fresh.clone());
        Ok(fresh)
    }
}

impl<B: TargetGenerator> TargetGenerator for Memoized<B> {
    fn relations(&self) -> Vec<Relation> {
        self.inner.relations()
    }

    fn generate(
        &self,
        source: &Concept,
        relation: RelationType,
        beam: usize,
    ) -> Result<Vec<GeneratedTarget>, BackendError> {
        let key = (source.as_str().to_string(), relation, beam);
        if let Some(hit) = self.generated.lock().expect("memo poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let fresh = self.inner.generate(source, relation, beam)?;
        self.generated.lock().expect("memo poisoned").insert(key, fresh.clone());
        Ok(fresh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl TargetGenerator for Counting {
        fn relations(&self) -> Vec<Relation> {
            vec![Relation::IsA]
        }

        fn generate(&self, _: &Concept, _: RelationType, _: usize) -> Result<Vec<GeneratedTarget>, BackendError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(vec![])
        }
    }

    #[test]
    fn repeated_queries_hit_the_table() {
        let m = Memoized::new(Counting(AtomicUsize::new(0)));
        let c = Concept::new("dog").unwrap();
        let isa = RelationType::base(Relation::IsA);
        for _ in 0..3 {
            m.generate(&c, isa, 10).unwrap();
        }
        m.generate(&c, isa, 5).unwrap();
        assert_eq!(m.inner().0.load(Ordering::SeqCst), 2);
    }
}
