//! Tokenization and stopwords shared by extraction, embedding and evaluation.

use std::collections::HashSet;
use std::io::BufRead;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// A lowercased word with its character span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Character offsets, end exclusive.
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits on anything that is not alphanumeric, keeping apostrophes that sit
/// between word characters ("don't").
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len()
            && (is_word_char(chars[i])
                || (matches!(chars[i], '\'' | '’') && i + 1 < chars.len() && is_word_char(chars[i + 1]) && i > start))
        {
            i += 1;
        }
        let word: String = chars[start..i].iter().collect::<String>().replace('’', "'").to_lowercase();
        out.push(Token { text: word, start, end: i });
    }
    out
}

/// Lowercased token strings only.
pub fn words(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn empty() -> Self {
        Stopwords(HashSet::new())
    }

    /// One word per line; `#` starts a comment.
    pub fn from_reader<R: BufRead>(reader: R) -> std::io::Result<Self> {
        let mut set = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.split('#').next().unwrap_or("").trim().to_lowercase();
            if !word.is_empty() {
                set.insert(word);
            }
        }
        Ok(Stopwords(set))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Stopwords {
    /// The bundled English list.
    fn default() -> Self {
        Stopwords::from_reader(DEFAULT_STOPWORDS.as_bytes()).expect("bundled stopword list is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizes_with_char_offsets() {
        let toks = tokenize("The car, too old.");
        let words: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["the", "car", "too", "old"]);
        assert_eq!((toks[1].start, toks[1].end), (4, 7));
        assert_eq!(words_of("don't stop"), ["don't", "stop"]);
        assert_eq!(words_of("'quoted'"), ["quoted"]);
        assert_eq!(tokenize("café au lait")[1].start, 5);
    }

    fn words_of(s: &str) -> Vec<String> {
        words(s)
    }

    #[test]
    fn default_stopwords() {
        let sw = Stopwords::default();
        assert!(sw.len() > 150);
        for w in ["the", "of", "too", "was"] {
            assert!(sw.contains(w), "{w}");
        }
        for w in ["car", "old", "engine"] {
            assert!(!sw.contains(w), "{w}");
        }
    }
}
