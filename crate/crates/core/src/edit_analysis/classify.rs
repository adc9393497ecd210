use std::collections::HashSet;

use crate::corpus::Pos;
use crate::edit_analysis::{Edit, ErrorType, Operation};
use crate::error::{Error, Result};

const SUFFIXES: [&str; 20] = [
    "ations", "ation", "ings", "ness", "ment", "ing", "ies", "ied", "ily", "ers", "est", "ful",
    "ed", "er", "es", "ly", "al", "s", "e", "y",
];

const CONTRACTIONS: [&str; 7] = ["n't", "'ll", "'ve", "'re", "'m", "'s", "'d"];

/// Operation implied by the span/replacement shape of an edit.
pub fn classify_operation(o_start: usize, o_end: usize, c_tokens: &[String]) -> Result<Operation> {
    match (o_end > o_start, c_tokens.is_empty()) {
        (false, false) => Ok(Operation::Missing),
        (true, true) => Ok(Operation::Unnecessary),
        (true, false) => Ok(Operation::Replacement),
        (false, true) => Err(Error::Validation(format!(
            "edit at {o_start}..{o_end} changes nothing"
        ))),
    }
}

/// Suffix-stripping stem of a lowercased word. The longest listed suffix is
/// removed when at least three characters remain.
pub fn stem(word: &str) -> String {
    let lower = word.to_lowercase();
    for suf in SUFFIXES {
        if let Some(base) = lower.strip_suffix(suf) {
            if base.chars().count() >= 3 {
                return base.to_string();
            }
        }
    }
    lower
}

/// Levenshtein distance over characters.
pub fn char_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Known-word list for spelling detection; entries are lowercased.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
}

impl Lexicon {
    /// One word per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Lexicon { words }
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        Lexicon {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn orth_key(tokens: &[String]) -> String {
    tokens
        .iter()
        .flat_map(|t| t.chars())
        .filter(|c| *c != '-' && !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

fn sorted_lower(tokens: &[String]) -> Vec<String> {
    let mut v: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    v.sort();
    v
}

fn is_contraction(token: &str) -> bool {
    let lower = token.to_lowercase().replace('’', "'");
    CONTRACTIONS.iter().any(|c| lower.ends_with(c))
}

fn pos_to_type(pos: Pos) -> Option<ErrorType> {
    Some(match pos {
        Pos::Adj => ErrorType::Adj,
        Pos::Adv => ErrorType::Adv,
        Pos::Conj => ErrorType::Conj,
        Pos::Det => ErrorType::Det,
        Pos::Noun => ErrorType::Noun,
        Pos::Part => ErrorType::Part,
        Pos::Prep => ErrorType::Prep,
        Pos::Pron => ErrorType::Pron,
        Pos::Punct => ErrorType::Punct,
        Pos::Verb => ErrorType::Verb,
        Pos::Contr | Pos::Num | Pos::Other => return None,
    })
}

/// Assigns a POS-based error type by an ordered rule cascade:
/// ORTH, WO, SPELL, MORPH, single shared POS, CONTR, then OTHER.
///
/// `orig_pos` tags the whole original sentence; `corr_pos` tags the edit's
/// corrected tokens. The SPELL rule is skipped when no lexicon is given.
pub fn classify_pos_type(
    edit: &Edit,
    orig: &[String],
    orig_pos: &[Pos],
    corr_pos: &[Pos],
    lexicon: Option<&Lexicon>,
) -> ErrorType {
    let o_side = &orig[edit.o_start..edit.o_end];
    let c_side = edit.c_tokens.as_slice();
    let o_pos = &orig_pos[edit.o_start..edit.o_end];

    if !o_side.is_empty() && !c_side.is_empty() && orth_key(o_side) == orth_key(c_side) {
        return ErrorType::Orth;
    }

    if o_side.len() >= 2 && o_side.len() == c_side.len() && sorted_lower(o_side) == sorted_lower(c_side)
    {
        return ErrorType::Wo;
    }

    let one_to_one = o_side.len() == 1 && c_side.len() == 1;
    if let (Some(lex), true) = (lexicon, one_to_one) {
        let (o, c) = (o_side[0].to_lowercase(), c_side[0].to_lowercase());
        if !lex.contains(&o) && o.chars().any(char::is_alphabetic) && char_distance(&o, &c) <= 2 {
            return ErrorType::Spell;
        }
    }

    if one_to_one {
        let (o, c) = (o_side[0].to_lowercase(), c_side[0].to_lowercase());
        let so = stem(&o);
        if o != c && so == stem(&c) && so.chars().count() >= 3 && o_pos[0] != corr_pos[0] {
            return ErrorType::Morph;
        }
    }

    let side_pos = match edit.op {
        Operation::Unnecessary => o_pos,
        Operation::Missing | Operation::Replacement => corr_pos,
    };
    if let Some(&first) = side_pos.first() {
        if side_pos.iter().all(|&p| p == first) {
            if let Some(t) = pos_to_type(first) {
                return t;
            }
        }
    }

    if o_side.iter().chain(c_side).any(|t| is_contraction(t)) {
        return ErrorType::Contr;
    }
    ErrorType::Other
}
