use std::borrow::Borrow;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::KgError;

/// A graph node. Identity, ordering and hashing use the normalized form only.
#[derive(Debug, Clone)]
pub struct Concept {
    normalized: String,
    original: String,
}

impl Concept {
    /// Normalizes `text`: underscores become spaces, the result is lowercased,
    /// whitespace is collapsed and leading/trailing punctuation is stripped.
    pub fn new(text: &str) -> Result<Self, KgError> {
        let normalized = normalize_text(text);
        if normalized.is_empty() {
            return Err(KgError::EmptyConcept(text.to_string()));
        }
        Ok(Concept { normalized, original: text.to_string() })
    }

    pub fn as_str(&self) -> &str {
        &self.normalized
    }

    pub fn original(&self) -> &str {
        &self.original
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.normalized.split(' ')
    }
}

/// Shorthand for [`Concept::new`].
pub fn normalize_concept(text: &str) -> Result<Concept, KgError> {
    Concept::new(text)
}

pub(crate) fn normalize_text(text: &str) -> String {
    let lowered = text.replace('_', " ").to_lowercase();
    let mut current: String = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    // Stripping punctuation can expose whitespace and vice versa; iterate to a fixed point.
    loop {
        let next = current
            .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace() || is_unicode_punct(c))
            .to_string();
        if next == current {
            return current;
        }
        current = next;
    }
}

fn is_unicode_punct(c: char) -> bool {
    matches!(c, '“' | '”' | '‘' | '’' | '–' | '—' | '…' | '«' | '»' | '¿' | '¡')
}

impl PartialEq for Concept {
    fn eq(&self, other: &Self) -> bool {
        self.normalized == other.normalized
    }
}

impl Eq for Concept {}

impl Hash for Concept {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.normalized.hash(state);
    }
}

impl PartialOrd for Concept {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Concept {
    fn cmp(&self, other: &Self) -> Ordering {
        self.normalized.cmp(&other.normalized)
    }
}

impl Borrow<str> for Concept {
    fn borrow(&self) -> &str {
        &self.normalized
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.normalized)
    }
}

impl std::str::FromStr for Concept {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Concept::new(s)
    }
}

impl Serialize for Concept {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.normalized)
    }
}

impl<'de> Deserialize<'de> for Concept {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Concept::new(&raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_examples() {
        assert_eq!(Concept::new("Environmental  Protection ").unwrap().as_str(), "environmental protection");
        assert_eq!(Concept::new("car").unwrap().as_str(), "car");
        assert_eq!(Concept::new("engine.").unwrap().as_str(), "engine");
        assert_eq!(Concept::new("ice_cream").unwrap().as_str(), "ice cream");
        assert_eq!(Concept::new(" \"(Dog)\" ").unwrap().as_str(), "dog");
    }

    #[test]
    fn empty_after_normalization_is_error() {
        assert!(matches!(Concept::new("  ..  "), Err(KgError::EmptyConcept(_))));
        assert!(Concept::new("").is_err());
    }

    #[test]
    fn original_is_kept_but_ignored_for_equality() {
        let a = Concept::new("Car").unwrap();
        let b = Concept::new("car ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.original(), "Car");
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "[ a-zA-Z_.,;!?'\"()-]{0,24}") {
            if let Ok(c) = Concept::new(&s) {
                let again = Concept::new(c.as_str()).unwrap();
                prop_assert_eq!(again.as_str(), c.as_str());
                prop_assert!(!c.as_str().is_empty());
            }
        }
    }
}
