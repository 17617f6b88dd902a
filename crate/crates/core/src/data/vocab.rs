//! Whitespace vocabulary with dense ids and reserved tokens.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Id assigned to words not present in the vocabulary.
pub const UNK_ID: usize = 0;
/// Printable form of the unknown token.
pub const UNK_TOKEN: &str = "[unk]";
/// Reserved masked-slot token. It is always present in the vocabulary but is
/// never emitted into a generated phrase.
pub const MASKED_TOKEN: &str = "[masked]";

/// Ordered token table with dense ids `0..V`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build a vocabulary from domain words. Reserved tokens occupy the first
    /// two ids; duplicates and reserved words in `words` are ignored.
    pub fn build<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut tokens = vec![UNK_TOKEN.to_string(), MASKED_TOKEN.to_string()];
        let mut index: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        for word in words {
            let word = word.as_ref();
            if !index.contains_key(word) {
                index.insert(word.to_string(), tokens.len());
                tokens.push(word.to_string());
            }
        }
        Vocabulary { tokens, index }
    }

    /// Reconstruct from an ordered token list (dataset headers).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::InvalidSpec(format!(
                    "duplicate token {tok:?} in vocabulary"
                )));
            }
        }
        if tokens.get(UNK_ID).map(String::as_str) != Some(UNK_TOKEN) {
            return Err(Error::InvalidSpec(format!(
                "vocabulary must reserve id {UNK_ID} for {UNK_TOKEN:?}"
            )));
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.tokens
    }
}

/// Whitespace-split `text` into token ids, mapping unknown words to [`UNK_ID`].
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Result<Vec<usize>> {
    let ids: Vec<usize> = text
        .split_whitespace()
        .map(|w| vocab.lookup(w).unwrap_or(UNK_ID))
        .collect();
    if ids.is_empty() {
        return Err(Error::EmptyPhrase);
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_dense_and_stable() {
        let vocab = Vocabulary::build(["pink", "polyp", "pink", "flat"]);
        assert_eq!(vocab.len(), 5); // 2 reserved + 3 distinct
        for i in 0..vocab.len() {
            let tok = vocab.token(i).unwrap();
            assert_eq!(vocab.lookup(tok), Some(i));
        }
    }

    #[test]
    fn reserved_tokens_present() {
        let vocab = Vocabulary::build(["a"]);
        assert_eq!(vocab.lookup(UNK_TOKEN), Some(UNK_ID));
        assert_eq!(vocab.lookup(MASKED_TOKEN), Some(1));
        // adding the reserved words again must not mint new ids
        let vocab2 = Vocabulary::build([MASKED_TOKEN, "a"]);
        assert_eq!(vocab2.len(), 3);
    }

    #[test]
    fn tokenize_direct_lookup() {
        let vocab = Vocabulary::build(["pink", "polyp"]);
        let pink = vocab.lookup("pink").unwrap();
        let polyp = vocab.lookup("polyp").unwrap();
        assert_eq!(tokenize("pink polyp", &vocab).unwrap(), vec![pink, polyp]);
    }

    #[test]
    fn tokenize_unknown_maps_to_unk() {
        let vocab = Vocabulary::build(["polyp"]);
        let polyp = vocab.lookup("polyp").unwrap();
        assert_eq!(
            tokenize("blue polyp", &vocab).unwrap(),
            vec![UNK_ID, polyp]
        );
    }

    #[test]
    fn tokenize_empty_is_error() {
        let vocab = Vocabulary::build(["a"]);
        assert!(matches!(tokenize("", &vocab), Err(Error::EmptyPhrase)));
        assert!(matches!(tokenize("   ", &vocab), Err(Error::EmptyPhrase)));
    }

    #[test]
    fn from_tokens_rejects_duplicates() {
        let toks = vec![
            UNK_TOKEN.to_string(),
            MASKED_TOKEN.to_string(),
            "a".to_string(),
            "a".to_string(),
        ];
        assert!(Vocabulary::from_tokens(toks).is_err());
    }
}
