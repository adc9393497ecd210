use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

const SPECIAL_NAMES: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Word and character vocabularies with four shared special indices.
///
/// Words are looked up lowercased; characters keep their case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VocabRepr", try_from = "VocabRepr")]
pub struct Vocab {
    words: Vec<String>,
    chars: Vec<String>,
    word_index: HashMap<String, usize>,
    char_index: HashMap<char, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    words: Vec<String>,
    chars: Vec<String>,
}

impl From<Vocab> for VocabRepr {
    fn from(v: Vocab) -> Self {
        VocabRepr {
            words: v.words,
            chars: v.chars,
        }
    }
}

impl TryFrom<VocabRepr> for Vocab {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        let specials_ok = |v: &[String]| {
            v.len() >= SPECIAL_NAMES.len() && v.iter().zip(SPECIAL_NAMES).all(|(a, b)| a == b)
        };
        if !specials_ok(&r.words) || !specials_ok(&r.chars) {
            return Err(Error::Validation("vocabulary is missing special entries".into()));
        }
        let mut chars_parsed = Vec::new();
        for s in &r.chars[SPECIAL_NAMES.len()..] {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars_parsed.push(c),
                _ => {
                    return Err(Error::Validation(format!(
                        "character vocabulary entry {s:?} is not a single character"
                    )))
                }
            }
        }
        Ok(Vocab::from_parts(
            r.words[SPECIAL_NAMES.len()..].to_vec(),
            chars_parsed,
        ))
    }
}

impl Vocab {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const BOS: usize = 2;
    pub const EOS: usize = 3;

    /// Builds a vocabulary from ordered, duplicate-free word and char lists.
    pub fn from_parts(words: Vec<String>, chars: Vec<char>) -> Self {
        let mut all_words: Vec<String> = SPECIAL_NAMES.iter().map(|s| s.to_string()).collect();
        all_words.extend(words);
        let mut all_chars: Vec<String> = SPECIAL_NAMES.iter().map(|s| s.to_string()).collect();
        all_chars.extend(chars.iter().map(|c| c.to_string()));
        let word_index = all_words
            .iter()
            .enumerate()
            .skip(SPECIAL_NAMES.len())
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let char_index = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i + SPECIAL_NAMES.len()))
            .collect();
        Vocab {
            words: all_words,
            chars: all_chars,
            word_index,
            char_index,
        }
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    pub fn word_id(&self, surface: &str) -> usize {
        self.word_index
            .get(&surface.to_lowercase())
            .copied()
            .unwrap_or(Self::UNK)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_index.get(&c).copied().unwrap_or(Self::UNK)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    /// Id for an already-lowercased key, if present.
    pub fn lookup_lowercase(&self, key: &str) -> Option<usize> {
        self.word_index.get(key).copied()
    }
}

/// Builds word and character vocabularies from a corpus.
pub fn build_vocab(sentences: &[Sentence], min_count: usize) -> Result<Vocab> {
    if min_count == 0 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    if sentences.iter().all(|s| s.tokens.is_empty()) {
        return Err(Error::Validation(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    let mut word_freq: HashMap<String, usize> = HashMap::new();
    let mut chars = std::collections::BTreeSet::new();
    for tok in sentences.iter().flat_map(|s| &s.tokens) {
        *word_freq.entry(tok.lookup_key()).or_default() += 1;
        chars.extend(tok.chars.iter().copied());
    }
    let mut words: Vec<(String, usize)> = word_freq
        .into_iter()
        .filter(|(_, n)| *n >= min_count)
        .collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocab::from_parts(
        words.into_iter().map(|(w, _)| w).collect(),
        chars.into_iter().collect(),
    ))
}

/// Fills word and character ids. Unseen words and characters map to UNK.
pub fn encode(sentence: &Sentence, vocab: &Vocab) -> Sentence {
    let mut out = sentence.clone();
    for tok in &mut out.tokens {
        tok.word_id = vocab.word_id(&tok.surface);
        tok.char_ids = tok.chars.iter().map(|&c| vocab.char_id(c)).collect();
    }
    out
}

pub fn encode_all(sentences: &[Sentence], vocab: &Vocab) -> Vec<Sentence> {
    sentences.iter().map(|s| encode(s, vocab)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn corpus(lines: &[&str]) -> Vec<Sentence> {
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| Sentence::from_line(i.to_string(), l).unwrap())
            .collect()
    }

    #[test]
    fn min_count_one_keeps_all() {
        let v = build_vocab(&corpus(&["a b", "a"]), 1).unwrap();
        assert_eq!(v.word_count(), 6);
        assert_ne!(v.word_id("a"), Vocab::UNK);
        assert_ne!(v.word_id("b"), Vocab::UNK);
    }

    #[test]
    fn min_count_two_drops_rare() {
        let v = build_vocab(&corpus(&["a b", "a"]), 2).unwrap();
        assert_eq!(v.word_count(), 5);
        assert_eq!(v.word_id("b"), Vocab::UNK);
        let enc = encode(&corpus(&["b"])[0], &v);
        assert_eq!(enc.tokens[0].word_id, Vocab::UNK);
    }

    #[test]
    fn char_vocab() {
        let v = build_vocab(&corpus(&["ab"]), 1).unwrap();
        assert_eq!(v.char_count(), 6);
        assert_ne!(v.char_id('a'), Vocab::UNK);
        assert_ne!(v.char_id('b'), Vocab::UNK);
        assert_eq!(v.char_id('z'), Vocab::UNK);
    }

    #[test]
    fn specials_are_distinct() {
        let ids = [Vocab::PAD, Vocab::UNK, Vocab::BOS, Vocab::EOS];
        let set: std::collections::HashSet<_> = ids.iter().collect();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn unknown_word_keeps_char_ids() {
        let v = build_vocab(&corpus(&["za"]), 1).unwrap();
        let enc = encode(&corpus(&["zzz"])[0], &v);
        assert_eq!(enc.tokens[0].word_id, Vocab::UNK);
        assert_eq!(enc.tokens[0].char_ids, vec![v.char_id('z'); 3]);
    }

    #[test]
    fn lowercased_lookup_preserves_surface() {
        let v = build_vocab(&corpus(&["The cat"]), 1).unwrap();
        let enc = encode(&corpus(&["THE"])[0], &v);
        assert_eq!(enc.tokens[0].word_id, v.word_id("the"));
        assert_eq!(enc.tokens[0].surface, "THE");
        assert_eq!(enc.tokens[0].char_ids[0], v.char_id('T'));
    }

    #[test]
    fn empty_token_rejected() {
        assert!(Token::new("").is_err());
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(build_vocab(&[], 1).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let v = build_vocab(&corpus(&["a b c", "b"]), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
