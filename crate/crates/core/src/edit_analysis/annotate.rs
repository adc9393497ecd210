use crate::corpus::{AnnotatedSentence, Pos, Sentence};
use crate::edit_analysis::{align_edits, classify_pos_type, tag_tokens, Lexicon};
use crate::error::{Error, Result};

/// One original/corrected sentence pair, optionally with POS tags.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPair {
    pub sid: String,
    pub original: Vec<String>,
    pub corrected: Vec<String>,
    pub orig_pos: Option<Vec<Pos>>,
    pub corr_pos: Option<Vec<Pos>>,
}

impl ParallelPair {
    pub fn from_lines(sid: impl Into<String>, original: &str, corrected: &str) -> Self {
        let split = |s: &str| s.split_whitespace().map(str::to_string).collect();
        ParallelPair {
            sid: sid.into(),
            original: split(original),
            corrected: split(corrected),
            orig_pos: None,
            corr_pos: None,
        }
    }
}

/// Resources used for typing edits.
#[derive(Debug, Clone, Default)]
pub struct EditTyper {
    /// Enables the SPELL rule when present.
    pub lexicon: Option<Lexicon>,
}

impl EditTyper {
    pub fn with_lexicon(lexicon: Lexicon) -> Self {
        EditTyper {
            lexicon: Some(lexicon),
        }
    }
}

fn checked_tags(tags: &Option<Vec<Pos>>, tokens: &[String], side: &str, sid: &str) -> Result<Vec<Pos>> {
    match tags {
        Some(t) if t.len() != tokens.len() => Err(Error::Validation(format!(
            "sentence {sid:?}: {} {side} POS tags for {} tokens",
            t.len(),
            tokens.len()
        ))),
        Some(t) => Ok(t.clone()),
        None => Ok(tag_tokens(tokens)),
    }
}

/// Aligns one pair and types every edit.
pub fn annotate_pair(pair: &ParallelPair, typer: &EditTyper) -> Result<AnnotatedSentence> {
    let orig_pos = checked_tags(&pair.orig_pos, &pair.original, "original", &pair.sid)?;
    let corr_pos = checked_tags(&pair.corr_pos, &pair.corrected, "corrected", &pair.sid)?;

    let mut edits = align_edits(&pair.original, &pair.corrected);
    // Between edits the sequences match one-to-one, so the corrected offset
    // of each edit follows from the length changes of the edits before it.
    let mut shift: isize = 0;
    for e in &mut edits {
        let c_start = (e.o_start as isize + shift) as usize;
        let c_pos = &corr_pos[c_start..c_start + e.c_tokens.len()];
        e.etype = classify_pos_type(e, &pair.original, &orig_pos, c_pos, typer.lexicon.as_ref());
        shift += e.c_tokens.len() as isize - e.span_len() as isize;
    }

    let mut sentence = Sentence::from_words(pair.sid.clone(), &pair.original)?;
    if pair.orig_pos.is_some() {
        for (tok, pos) in sentence.tokens.iter_mut().zip(&orig_pos) {
            tok.pos = Some(*pos);
        }
    }
    AnnotatedSentence::new(sentence, edits, 0)
}

/// Annotates every pair of a parallel corpus.
pub fn annotate_corpus(pairs: &[ParallelPair], typer: &EditTyper) -> Result<Vec<AnnotatedSentence>> {
    pairs.iter().map(|p| annotate_pair(p, typer)).collect()
}
