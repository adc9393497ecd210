//! Automatic error annotation: weighted token alignment, edit extraction,
//! and rule-based typing by edit operation and coarse POS.

mod align;
mod annotate;
mod classify;
mod tagger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::{
    align, align_edits, apply_script, script_to_edits, substitution_cost, AlignmentScript, Step,
};
pub use annotate::{annotate_corpus, annotate_pair, EditTyper, ParallelPair};
pub use classify::{char_distance, classify_operation, classify_pos_type, stem, Lexicon};
pub use tagger::{fallback_tag, tag_tokens};

/// What a correction does to the original text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operation {
    Missing,
    Replacement,
    Unnecessary,
}

impl Operation {
    pub const ALL: [Operation; 3] = [
        Operation::Missing,
        Operation::Replacement,
        Operation::Unnecessary,
    ];

    /// The M2 type prefix letter.
    pub fn letter(self) -> char {
        match self {
            Operation::Missing => 'M',
            Operation::Replacement => 'R',
            Operation::Unnecessary => 'U',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Operation::Missing => "Missing",
            Operation::Replacement => "Replacement",
            Operation::Unnecessary => "Unnecessary",
        }
    }

    fn from_letter(c: &str) -> Option<Self> {
        match c {
            "M" => Some(Operation::Missing),
            "R" => Some(Operation::Replacement),
            "U" => Some(Operation::Unnecessary),
            _ => None,
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 16 POS-based error types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    Adj,
    Adv,
    Conj,
    Contr,
    Det,
    Morph,
    Noun,
    Orth,
    Other,
    Part,
    Prep,
    Pron,
    Punct,
    Spell,
    Verb,
    Wo,
}

impl ErrorType {
    pub const ALL: [ErrorType; 16] = [
        ErrorType::Adj,
        ErrorType::Adv,
        ErrorType::Conj,
        ErrorType::Contr,
        ErrorType::Det,
        ErrorType::Morph,
        ErrorType::Noun,
        ErrorType::Orth,
        ErrorType::Other,
        ErrorType::Part,
        ErrorType::Prep,
        ErrorType::Pron,
        ErrorType::Punct,
        ErrorType::Spell,
        ErrorType::Verb,
        ErrorType::Wo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::Adj => "ADJ",
            ErrorType::Adv => "ADV",
            ErrorType::Conj => "CONJ",
            ErrorType::Contr => "CONTR",
            ErrorType::Det => "DET",
            ErrorType::Morph => "MORPH",
            ErrorType::Noun => "NOUN",
            ErrorType::Orth => "ORTH",
            ErrorType::Other => "OTHER",
            ErrorType::Part => "PART",
            ErrorType::Prep => "PREP",
            ErrorType::Pron => "PRON",
            ErrorType::Punct => "PUNCT",
            ErrorType::Spell => "SPELL",
            ErrorType::Verb => "VERB",
            ErrorType::Wo => "WO",
        }
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown error type {s:?}")))
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A span-based correction over the original token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    /// Half-open span `[o_start, o_end)` into the original tokens.
    pub o_start: usize,
    pub o_end: usize,
    pub c_tokens: Vec<String>,
    pub op: Operation,
    pub etype: ErrorType,
    /// Verbatim M2 type field when it is not exactly `<op letter>:<etype>`
    /// (e.g. `R:VERB:SVA` or another taxonomy's `ArtOrDet`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_type: Option<String>,
}

impl Edit {
    /// An edit with its operation derived from the span shape and type `OTHER`.
    pub fn untyped(o_start: usize, o_end: usize, c_tokens: Vec<String>) -> Result<Self> {
        if o_end < o_start {
            return Err(Error::Validation(format!(
                "edit span end {o_end} < start {o_start}"
            )));
        }
        let op = classify_operation(o_start, o_end, &c_tokens)?;
        Ok(Edit {
            o_start,
            o_end,
            c_tokens,
            op,
            etype: ErrorType::Other,
            source_type: None,
        })
    }

    pub fn with_type(mut self, etype: ErrorType) -> Self {
        self.etype = etype;
        self
    }

    /// The M2 type field for this edit.
    pub fn type_label(&self) -> String {
        match &self.source_type {
            Some(raw) => raw.clone(),
            None => format!("{}:{}", self.op.letter(), self.etype),
        }
    }

    /// Parses an M2 type field, keeping it verbatim unless it round-trips.
    pub(crate) fn set_type_label(&mut self, raw: &str) {
        let mut parts = raw.splitn(3, ':');
        let first = parts.next().unwrap_or("");
        let parsed = match (Operation::from_letter(first), parts.next()) {
            (Some(_), Some(t)) => t.parse::<ErrorType>().ok(),
            _ => raw.parse::<ErrorType>().ok(),
        };
        self.etype = parsed.unwrap_or(ErrorType::Other);
        self.source_type = None;
        if self.type_label() != raw {
            self.source_type = Some(raw.to_string());
        }
    }

    pub fn span_len(&self) -> usize {
        self.o_end - self.o_start
    }
}
