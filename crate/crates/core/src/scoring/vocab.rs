use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BOS_TOKEN: &str = "<s>";
pub const UNK_TOKEN: &str = "<unk>";

/// Unit a text is split into before vocabulary lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenUnit {
    #[default]
    Char,
    Word,
}

impl TokenUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenUnit::Char => "char",
            TokenUnit::Word => "word",
        }
    }
}

/// Token ids of one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub source_sample_id: String,
}

impl TokenSequence {
    pub fn new(ids: Vec<u32>, source_sample_id: impl Into<String>) -> Self {
        TokenSequence {
            ids,
            source_sample_id: source_sample_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Ordered token inventory. Regular tokens take ids `0..n`; BOS and UNK are
/// appended as `n` and `n + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    unit: TokenUnit,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    unit: TokenUnit,
    tokens: Vec<String>,
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        Vocabulary::new(r.tokens, r.unit)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        let n = v.num_regular();
        let mut tokens = v.tokens;
        tokens.truncate(n);
        VocabRepr { unit: v.unit, tokens }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from regular tokens; the special tokens are added.
    pub fn new(tokens: Vec<String>, unit: TokenUnit) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("vocabulary needs at least one regular token"));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t == BOS_TOKEN || t == UNK_TOKEN {
                return Err(Error::invalid(format!("reserved token {t:?} in vocabulary")));
            }
            if unit == TokenUnit::Char && t.chars().count() != 1 {
                return Err(Error::invalid(format!("char vocabulary token {t:?} is not one character")));
            }
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::invalid(format!("duplicate token {t:?}")));
            }
        }
        let mut tokens = tokens;
        tokens.push(BOS_TOKEN.to_string());
        tokens.push(UNK_TOKEN.to_string());
        Ok(Vocabulary { unit, tokens, index })
    }

    /// Collects the distinct units of `texts`, sorted.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>, unit: TokenUnit) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for text in texts {
            for piece in split_units(text, unit) {
                if piece != BOS_TOKEN && piece != UNK_TOKEN {
                    seen.insert(piece.to_string());
                }
            }
        }
        if seen.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Vocabulary::new(seen.into_iter().collect(), unit)
    }

    pub fn unit(&self) -> TokenUnit {
        self.unit
    }

    /// |V|, including BOS and UNK.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn num_regular(&self) -> usize {
        self.tokens.len() - 2
    }

    pub fn bos(&self) -> u32 {
        (self.tokens.len() - 2) as u32
    }

    pub fn unk(&self) -> u32 {
        (self.tokens.len() - 1) as u32
    }

    pub fn is_special(&self, id: u32) -> bool {
        id == self.bos() || id == self.unk()
    }

    /// Id of a regular token; specials and unknown strings map to UNK.
    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or_else(|| self.unk())
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokenize(&self, text: &str, source_sample_id: &str) -> Result<TokenSequence> {
        if text.trim().is_empty() {
            return Err(Error::EmptyInput);
        }
        let ids: Vec<u32> = match self.unit {
            TokenUnit::Char => {
                let mut buf = [0u8; 4];
                text.chars().map(|c| self.id(c.encode_utf8(&mut buf))).collect()
            }
            TokenUnit::Word => text.split_whitespace().map(|w| self.id(w)).collect(),
        };
        Ok(TokenSequence::new(ids, source_sample_id))
    }

    /// Surface strings for each id, as shown in reports.
    pub fn surface(&self, id: u32) -> &str {
        match self.unit {
            TokenUnit::Char if id == self.unk() => "\u{FFFD}",
            _ => self.token(id).unwrap_or(UNK_TOKEN),
        }
    }

    pub fn detokenize(&self, ids: &[u32]) -> String {
        let sep = match self.unit {
            TokenUnit::Char => "",
            TokenUnit::Word => " ",
        };
        ids.iter()
            .filter(|&&id| id != self.bos())
            .map(|&id| self.surface(id))
            .collect::<Vec<_>>()
            .join(sep)
    }
}

pub(crate) fn split_units(text: &str, unit: TokenUnit) -> Box<dyn Iterator<Item = &str> + '_> {
    match unit {
        TokenUnit::Char => Box::new(text.char_indices().map(move |(i, c)| &text[i..i + c.len_utf8()])),
        TokenUnit::Word => Box::new(text.split_whitespace()),
    }
}

/// Convenience wrapper over [`Vocabulary::tokenize`].
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Result<TokenSequence> {
    vocab.tokenize(text, "")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Vocabulary {
        Vocabulary::new(vec!["a".into(), "b".into()], TokenUnit::Char).unwrap()
    }

    #[test]
    fn char_lookup() {
        let v = ab();
        assert_eq!(tokenize("aba", &v).unwrap().ids, vec![0, 1, 0]);
    }

    #[test]
    fn unknown_maps_to_unk() {
        let v = ab();
        assert_eq!(tokenize("axa", &v).unwrap().ids, vec![0, v.unk(), 0]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(tokenize("", &ab()), Err(Error::EmptyInput)));
        assert!(matches!(tokenize(" \n", &ab()), Err(Error::EmptyInput)));
    }

    #[test]
    fn specials_follow_regular_tokens() {
        let v = ab();
        assert_eq!(v.size(), 4);
        assert_eq!(v.bos(), 2);
        assert_eq!(v.unk(), 3);
        assert_eq!(v.id(BOS_TOKEN), v.unk());
    }

    #[test]
    fn word_unit_and_detokenize() {
        let v = Vocabulary::from_texts(["the cat sat", "the dog"], TokenUnit::Word).unwrap();
        let seq = v.tokenize("the  cat ran", "s").unwrap();
        assert_eq!(seq.ids[2], v.unk());
        assert_eq!(v.detokenize(&seq.ids), "the cat <unk>");
    }

    #[test]
    fn duplicate_tokens_rejected() {
        assert!(Vocabulary::new(vec!["a".into(), "a".into()], TokenUnit::Char).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let v = ab();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back.size(), 4);
        assert_eq!(back.id("b"), 1);
    }
}
