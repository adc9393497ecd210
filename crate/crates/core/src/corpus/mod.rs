//! Annotated learner corpora: tokens, sentences, M2 and parallel ingestion,
//! label conversion and vocabularies.

mod labels;
mod m2;
mod parallel;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::edit_analysis::Edit;
use crate::error::{Error, Result};

pub use labels::{spans_to_token_labels, token_types};
pub use m2::{parse_m2, write_m2};
pub use parallel::{parse_parallel, parse_parallel_with};
pub use vocab::{build_vocab, encode, encode_all, Vocab};

/// Binary detection label. `Incorrect` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Correct,
    Incorrect,
}

impl Label {
    pub fn is_incorrect(self) -> bool {
        self == Label::Incorrect
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Correct => "c",
            Label::Incorrect => "i",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" | "C" | "Correct" => Ok(Label::Correct),
            "i" | "I" | "Incorrect" => Ok(Label::Incorrect),
            other => Err(Error::Validation(format!("unknown label {other:?}"))),
        }
    }
}

/// Coarse part-of-speech tags used by edit typing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pos {
    Adj,
    Adv,
    Conj,
    Contr,
    Det,
    Noun,
    Num,
    Part,
    Prep,
    Pron,
    Punct,
    Verb,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Conj => "CONJ",
            Pos::Contr => "CONTR",
            Pos::Det => "DET",
            Pos::Noun => "NOUN",
            Pos::Num => "NUM",
            Pos::Part => "PART",
            Pos::Prep => "PREP",
            Pos::Pron => "PRON",
            Pos::Punct => "PUNCT",
            Pos::Verb => "VERB",
            Pos::Other => "X",
        }
    }
}

impl FromStr for Pos {
    type Err = Error;

    /// Accepts the coarse names above plus the Universal Dependencies tags
    /// most taggers emit (`ADP`, `AUX`, `CCONJ`, `PROPN`, ...).
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "ADJ" => Pos::Adj,
            "ADV" => Pos::Adv,
            "CONJ" | "CCONJ" | "SCONJ" => Pos::Conj,
            "CONTR" => Pos::Contr,
            "DET" => Pos::Det,
            "NOUN" | "PROPN" => Pos::Noun,
            "NUM" => Pos::Num,
            "PART" | "PRT" => Pos::Part,
            "PREP" | "ADP" => Pos::Prep,
            "PRON" => Pos::Pron,
            "PUNCT" | "." => Pos::Punct,
            "VERB" | "AUX" => Pos::Verb,
            "X" | "SYM" | "INTJ" | "OTHER" | "SPACE" => Pos::Other,
            other => return Err(Error::Validation(format!("unknown POS tag {other:?}"))),
        })
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeling unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub chars: Vec<char>,
    pub pos: Option<Pos>,
    /// Word-vocabulary index; meaningful after [`encode`].
    pub word_id: usize,
    /// Character-vocabulary indices; meaningful after [`encode`].
    pub char_ids: Vec<usize>,
}

impl Token {
    pub fn new(surface: &str) -> Result<Self> {
        if surface.is_empty() {
            return Err(Error::Validation("empty token".into()));
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!(
                "token {surface:?} contains whitespace"
            )));
        }
        Ok(Token {
            surface: surface.to_string(),
            chars: surface.chars().collect(),
            pos: None,
            word_id: 0,
            char_ids: Vec::new(),
        })
    }

    pub fn with_pos(mut self, pos: Pos) -> Self {
        self.pos = Some(pos);
        self
    }

    /// The key used for word-vocabulary lookup.
    pub fn lookup_key(&self) -> String {
        self.surface.to_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub sid: String,
    pub tokens: Vec<Token>,
    pub gold_labels: Vec<Label>,
}

impl Sentence {
    /// Builds an all-`Correct` sentence from whitespace-free token strings.
    pub fn from_words<S: AsRef<str>>(sid: impl Into<String>, words: &[S]) -> Result<Self> {
        let sid = sid.into();
        if words.is_empty() {
            return Err(Error::Validation(format!("sentence {sid:?} has no tokens")));
        }
        let tokens = words
            .iter()
            .map(|w| Token::new(w.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let gold_labels = vec![Label::Correct; tokens.len()];
        Ok(Sentence {
            sid,
            tokens,
            gold_labels,
        })
    }

    /// Splits a pre-tokenized line on whitespace.
    pub fn from_line(sid: impl Into<String>, line: &str) -> Result<Self> {
        let words: Vec<&str> = line.split_whitespace().collect();
        Self::from_words(sid, &words)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    pub fn word_ids(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.word_id).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::Validation(format!(
                "sentence {:?} has no tokens",
                self.sid
            )));
        }
        if self.tokens.len() != self.gold_labels.len() {
            return Err(Error::Validation(format!(
                "sentence {:?}: {} tokens but {} labels",
                self.sid,
                self.tokens.len(),
                self.gold_labels.len()
            )));
        }
        Ok(())
    }
}

/// A sentence together with one annotator's edits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub sentence: Sentence,
    pub edits: Vec<Edit>,
    pub annotator: usize,
}

impl AnnotatedSentence {
    /// Sorts edits, checks spans and overlaps, and recomputes gold labels.
    pub fn new(mut sentence: Sentence, mut edits: Vec<Edit>, annotator: usize) -> Result<Self> {
        edits.sort_by_key(|e| (e.o_start, e.o_end));
        check_edits(sentence.len(), &edits)?;
        sentence.gold_labels = spans_to_token_labels(sentence.len(), &edits);
        Ok(AnnotatedSentence {
            sentence,
            edits,
            annotator,
        })
    }

    /// Per-token `(operation, type)` for every gold-`Incorrect` token.
    pub fn token_types(&self) -> Vec<Option<(crate::Operation, crate::ErrorType)>> {
        token_types(self.sentence.len(), &self.edits)
    }
}

/// Edits must be sorted, inside the sentence and pairwise non-overlapping.
pub(crate) fn check_edits(n_tokens: usize, edits: &[Edit]) -> Result<()> {
    for e in edits {
        if e.o_end < e.o_start {
            return Err(Error::Validation(format!(
                "edit span end {} < start {}",
                e.o_end, e.o_start
            )));
        }
        if e.o_end > n_tokens {
            return Err(Error::Validation(format!(
                "edit span {}..{} exceeds sentence length {n_tokens}",
                e.o_start, e.o_end
            )));
        }
    }
    for pair in edits.windows(2) {
        if pair[1].o_start < pair[0].o_end {
            return Err(Error::Validation(format!(
                "overlapping edits {}..{} and {}..{}",
                pair[0].o_start, pair[0].o_end, pair[1].o_start, pair[1].o_end
            )));
        }
    }
    Ok(())
}
