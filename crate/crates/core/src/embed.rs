//! Static word embeddings: loading, phrase encoding by stopword-filtered
//! averaging, and cosine similarity.

use std::collections::HashMap;
use std::io::BufRead;

use crate::kg::Concept;
use crate::text::{self, Stopwords};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Word vectors stored contiguously as f32; arithmetic is done in f64.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f32>,
    stopwords: Stopwords,
}

/// The encoding of a phrase and the fraction of its content words that had a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector {
    pub vector: Vec<f64>,
    pub coverage: f64,
}

impl PhraseVector {
    pub fn is_zero(&self) -> bool {
        self.vector.iter().all(|x| *x == 0.0)
    }
}

impl EmbeddingStore {
    /// Reads the word2vec text format: a `count dim` header, then `word v1 … v_dim`.
    /// Repeated words keep their last vector.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, EmbedError> {
        let mut lines = reader.lines().enumerate();
        let (count, dim) = loop {
            match lines.next() {
                None => return Err(EmbedError::Format { line: 1, reason: "missing `count dim` header".into() }),
                Some((idx, line)) => {
                    let line = line.map_err(|source| EmbedError::Io { line: idx + 1, source })?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    let parsed = match parts.as_slice() {
                        [c, d] => c.parse::<usize>().ok().zip(d.parse::<usize>().ok()),
                        _ => None,
                    };
                    match parsed {
                        Some((c, d)) if d > 0 => break (c, d),
                        _ => {
                            return Err(EmbedError::Format {
                                line: idx + 1,
                                reason: format!("expected `count dim` header, got {line:?}"),
                            })
                        }
                    }
                }
            }
        };

        let mut store = EmbeddingStore {
            dim,
            index: HashMap::with_capacity(count),
            data: Vec::with_capacity(count.saturating_mul(dim)),
            stopwords: Stopwords::default(),
        };
        let mut rows = 0;
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.map_err(|source| EmbedError::Io { line: line_no, source })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-empty line has a first field");
            let values: Vec<f32> = parts
                .map(|v| v.parse::<f32>())
                .collect::<Result<_, _>>()
                .map_err(|e| EmbedError::Format { line: line_no, reason: e.to_string() })?;
            if values.len() != dim {
                return Err(EmbedError::Format {
                    line: line_no,
                    reason: format!("expected {dim} values for {word:?}, found {}", values.len()),
                });
            }
            rows += 1;
            match store.index.get(word) {
                Some(&slot) => store.data[slot * dim..(slot + 1) * dim].copy_from_slice(&values),
                None => {
                    store.index.insert(word.to_string(), store.index.len());
                    store.data.extend_from_slice(&values);
                }
            }
        }
        if rows != count {
            return Err(EmbedError::Format {
                line: 1,
                reason: format!("header announces {count} vectors but {rows} were read"),
            });
        }
        Ok(store)
    }

    /// Builds a store directly from word vectors.
    pub fn from_vectors<I, S>(dim: usize, vectors: I) -> Result<Self, EmbedError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut store =
            EmbeddingStore { dim, index: HashMap::new(), data: Vec::new(), stopwords: Stopwords::default() };
        for (word, v) in vectors {
            if v.len() != dim {
                return Err(EmbedError::DimensionMismatch { left: dim, right: v.len() });
            }
            let v32: Vec<f32> = v.iter().map(|x| *x as f32).collect();
            let word = word.into();
            match store.index.get(&word) {
                Some(&slot) => store.data[slot * dim..(slot + 1) * dim].copy_from_slice(&v32),
                None => {
                    store.index.insert(word, store.index.len());
                    store.data.extend_from_slice(&v32);
                }
            }
        }
        Ok(store)
    }

    pub fn with_stopwords(mut self, stopwords: Stopwords) -> Self {
        self.stopwords = stopwords;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn stopwords(&self) -> &Stopwords {
        &self.stopwords
    }

    pub fn word_vector(&self, word: &str) -> Option<Vec<f64>> {
        self.index
            .get(word)
            .map(|&slot| self.data[slot * self.dim..(slot + 1) * self.dim].iter().map(|x| *x as f64).collect())
    }

    /// Mean of the in-vocabulary, non-stopword token vectors.
    pub fn encode_phrase(&self, phrase: &Concept) -> PhraseVector {
        self.encode_tokens(phrase.tokens())
    }

    /// Tokenizes free text, then encodes it like a phrase.
    pub fn encode_text(&self, text: &str) -> PhraseVector {
        let words = text::words(text);
        self.encode_tokens(words.iter().map(String::as_str))
    }

    fn encode_tokens<'a>(&self, tokens: impl Iterator<Item = &'a str>) -> PhraseVector {
        let mut sum = vec![0.0f64; self.dim];
        let mut content = 0usize;
        let mut found = 0usize;
        for tok in tokens {
            if self.stopwords.contains(tok) {
                continue;
            }
            content += 1;
            if let Some(&slot) = self.index.get(tok) {
                found += 1;
                for (acc, x) in sum.iter_mut().zip(&self.data[slot * self.dim..(slot + 1) * self.dim]) {
                    *acc += *x as f64;
                }
            }
        }
        if found == 0 {
            return PhraseVector { vector: vec![0.0; self.dim], coverage: 0.0 };
        }
        let n = found as f64;
        sum.iter_mut().for_each(|x| *x /= n);
        PhraseVector { vector: sum, coverage: found as f64 / content as f64 }
    }
}

/// Cosine similarity, clamped to [-1, 1]. Zero vectors have similarity 0.
pub fn cosine(u: &PhraseVector, v: &PhraseVector) -> Result<f64, EmbedError> {
    cosine_slices(&u.vector, &v.vector)
}

pub fn cosine_slices(u: &[f64], v: &[f64]) -> Result<f64, EmbedError> {
    if u.len() != v.len() {
        return Err(EmbedError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> PhraseVector {
        PhraseVector { vector: v.to_vec(), coverage: 1.0 }
    }

    fn c(s: &str) -> Concept {
        Concept::new(s).unwrap()
    }

    #[test]
    fn loads_header_and_rows() {
        let store = EmbeddingStore::load("2 3\ncar 1 0 0\nengine 0 1 0.5\n".as_bytes()).unwrap();
        assert_eq!(store.dim(), 3);
        assert_eq!(store.len(), 2);
        assert_eq!(store.word_vector("engine").unwrap(), vec![0.0, 1.0, 0.5]);
    }

    #[test]
    fn short_row_is_an_error_with_line() {
        let err = EmbeddingStore::load("1 3\ncar 1 0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbedError::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_word_last_wins() {
        let store = EmbeddingStore::load("3 2\ncar 1 0\nbus 0 1\ncar 2 2\n".as_bytes()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.word_vector("car").unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn row_count_must_match_header() {
        assert!(EmbeddingStore::load("3 2\ncar 1 0\n".as_bytes()).is_err());
        assert!(EmbeddingStore::load("".as_bytes()).is_err());
    }

    #[test]
    fn phrase_encoding() {
        let store = EmbeddingStore::from_vectors(
            2,
            [("car", vec![3.0, 4.0]), ("environmental", vec![1.0, 0.0]), ("protection", vec![0.0, 1.0])],
        )
        .unwrap();
        let the_car = store.encode_phrase(&c("the car"));
        assert_eq!(the_car.vector, vec![3.0, 4.0]);
        assert_eq!(the_car.coverage, 1.0);

        let ep = store.encode_phrase(&c("environmental protection"));
        assert_eq!(ep.vector, vec![0.5, 0.5]);

        let stop = store.encode_phrase(&c("of the"));
        assert!(stop.is_zero());
        assert_eq!(stop.coverage, 0.0);

        let partial = store.encode_phrase(&c("car wash"));
        assert_eq!(partial.coverage, 0.5);
        assert_eq!(partial.vector, vec![3.0, 4.0]);
    }

    #[test]
    fn cosine_examples() {
        let v = pv(&[0.3, -2.0]);
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&pv(&[1.0, 0.0]), &pv(&[0.0, 1.0])).unwrap(), 0.0);
        let got = cosine(&pv(&[1.0, 0.0]), &pv(&[1.0, 1.0])).unwrap();
        assert!((got - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
        assert_eq!(cosine(&pv(&[0.0, 0.0]), &pv(&[1.0, 1.0])).unwrap(), 0.0);
        assert!(matches!(cosine(&pv(&[1.0]), &pv(&[1.0, 1.0])), Err(EmbedError::DimensionMismatch { .. })));
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            u in prop::collection::vec(-10.0f64..10.0, 4),
            v in prop::collection::vec(-10.0f64..10.0, 4),
            alpha in 0.01f64..100.0,
        ) {
            let (pu, pv_) = (pv(&u), pv(&v));
            prop_assert_eq!(cosine(&pu, &pv_).unwrap(), cosine(&pv_, &pu).unwrap());
            let scaled = pv(&u.iter().map(|x| x * alpha).collect::<Vec<_>>());
            prop_assert!((cosine(&scaled, &pv_).unwrap() - cosine(&pu, &pv_).unwrap()).abs() <= 1e-9);
            let s = cosine(&pu, &pv_).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
        }

        #[test]
        fn stopwords_do_not_change_encoding(
            words in prop::collection::vec(prop::sample::select(vec!["car", "engine", "old", "red"]), 1..5),
            inserts in prop::collection::vec((0usize..6, prop::sample::select(vec!["the", "of", "a", "too"])), 0..4),
        ) {
            let store = EmbeddingStore::from_vectors(
                3,
                [("car", vec![1.0, 0.2, 0.0]), ("engine", vec![0.1, 1.0, 0.3]), ("old", vec![0.5, 0.5, 0.5])],
            ).unwrap();
            let mut padded: Vec<&str> = words.clone();
            for (pos, w) in inserts {
                let pos = pos.min(padded.len());
                padded.insert(pos, w);
            }
            let plain = store.encode_phrase(&c(&words.join(" ")));
            let with_stop = store.encode_phrase(&c(&padded.join(" ")));
            prop_assert_eq!(plain.vector, with_stop.vector);
            prop_assert_eq!(plain.coverage, with_stop.coverage);
        }
    }
}
