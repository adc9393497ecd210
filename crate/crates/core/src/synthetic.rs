//! Small generated corpora with rule-injected errors, for smoke tests and
//! overfitting checks.
//!
//! Clean sentences come from a subject / verb / object / adjunct grammar.
//! Most sentences then receive one error: an article swap (`a` and `an`),
//! a verb-form swap (`walks` to `walk`) or the deletion of an article or
//! preposition.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedSentence, Sentence};
use crate::edit_analysis::{Edit, ErrorType};
use crate::error::Result;

const SUBJECTS: [&str; 8] = [
    "the dog",
    "my sister",
    "the teacher",
    "a boy",
    "our neighbour",
    "the old man",
    "his friend",
    "a girl",
];

const VERBS: [(&str, &str); 8] = [
    ("walks", "walk"),
    ("reads", "read"),
    ("likes", "like"),
    ("wants", "want"),
    ("sees", "see"),
    ("buys", "buy"),
    ("finds", "find"),
    ("opens", "open"),
];

const OBJECTS: [&str; 8] = [
    "a book",
    "an apple",
    "a letter",
    "the door",
    "an orange",
    "the newspaper",
    "a small box",
    "an old car",
];

const ADJUNCTS: [&str; 6] = [
    "every day",
    "in the morning",
    "at school",
    "after dinner",
    "on the table",
    "with care",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectedError {
    ArticleSwap,
    VerbForm,
    Deletion,
}

fn clean_sentence(rng: &mut impl Rng) -> (Vec<String>, usize) {
    let mut words: Vec<String> = Vec::new();
    let push = |words: &mut Vec<String>, phrase: &str| {
        words.extend(phrase.split(' ').map(str::to_string));
    };
    push(&mut words, SUBJECTS.choose(rng).unwrap());
    let verb_at = words.len();
    push(&mut words, VERBS.choose(rng).unwrap().0);
    push(&mut words, OBJECTS.choose(rng).unwrap());
    if rng.gen_bool(0.7) {
        push(&mut words, ADJUNCTS.choose(rng).unwrap());
    }
    words.push(".".into());
    (words, verb_at)
}

/// Applies `kind` to a clean sentence, returning the erroneous tokens and the
/// edit that repairs them, or `None` when the sentence offers no site.
fn inject(
    clean: &[String],
    verb_at: usize,
    kind: InjectedError,
    rng: &mut impl Rng,
) -> Result<Option<(Vec<String>, Edit)>> {
    let mut orig = clean.to_vec();
    match kind {
        InjectedError::ArticleSwap => {
            let sites: Vec<usize> = (0..clean.len())
                .filter(|&i| clean[i] == "a" || clean[i] == "an")
                .collect();
            let Some(&k) = sites.choose(rng) else {
                return Ok(None);
            };
            orig[k] = if clean[k] == "a" { "an" } else { "a" }.to_string();
            let edit = Edit::untyped(k, k + 1, vec![clean[k].clone()])?.with_type(ErrorType::Det);
            Ok(Some((orig, edit)))
        }
        InjectedError::VerbForm => {
            let (_, base) = VERBS.iter().find(|(v, _)| *v == clean[verb_at]).unwrap();
            orig[verb_at] = base.to_string();
            let edit = Edit::untyped(verb_at, verb_at + 1, vec![clean[verb_at].clone()])?
                .with_type(ErrorType::Verb);
            Ok(Some((orig, edit)))
        }
        InjectedError::Deletion => {
            let deletable = ["the", "a", "an", "in", "at", "on", "with"];
            let sites: Vec<usize> = (0..clean.len())
                .filter(|&i| deletable.contains(&clean[i].as_str()))
                .collect();
            let Some(&k) = sites.choose(rng) else {
                return Ok(None);
            };
            let removed = orig.remove(k);
            let etype = if ["the", "a", "an"].contains(&removed.as_str()) {
                ErrorType::Det
            } else {
                ErrorType::Prep
            };
            let edit = Edit::untyped(k, k, vec![removed])?.with_type(etype);
            Ok(Some((orig, edit)))
        }
    }
}

/// `n` annotated sentences with sids `syn0`, `syn1`, ...; about one in six
/// is left error-free.
pub fn synthetic_corpus(n: usize, seed: u64) -> Result<Vec<AnnotatedSentence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [
        InjectedError::ArticleSwap,
        InjectedError::VerbForm,
        InjectedError::Deletion,
    ];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (clean, verb_at) = clean_sentence(&mut rng);
        let injected = if rng.gen_range(0..6) == 0 {
            None
        } else {
            inject(&clean, verb_at, *kinds.choose(&mut rng).unwrap(), &mut rng)?
        };
        let (words, edits) = match injected {
            Some((w, e)) => (w, vec![e]),
            None => (clean, vec![]),
        };
        let sentence = Sentence::from_words(format!("syn{i}"), &words)?;
        out.push(AnnotatedSentence::new(sentence, edits, 0)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    #[test]
    fn deterministic_and_labeled() {
        let a = synthetic_corpus(50, 3).unwrap();
        assert_eq!(a, synthetic_corpus(50, 3).unwrap());
        assert_eq!(a.len(), 50);
        let with_errors = a.iter().filter(|s| !s.edits.is_empty()).count();
        assert!(with_errors >= 30);
        for s in &a {
            let bad = s.sentence.gold_labels.iter().filter(|&&l| l == Label::Incorrect).count();
            assert_eq!(bad, s.edits.len());
        }
    }

    #[test]
    fn edits_repair_the_sentence() {
        for s in synthetic_corpus(40, 11).unwrap() {
            let mut words: Vec<String> = s.sentence.words().iter().map(|w| w.to_string()).collect();
            for e in s.edits.iter().rev() {
                words.splice(e.o_start..e.o_end, e.c_tokens.iter().cloned());
            }
            assert_eq!(words.last().unwrap(), ".");
            assert!(words.iter().any(|w| VERBS.iter().any(|(v, _)| v == w)));
            for pair in words.windows(2) {
                let vowel = pair[1].starts_with(['a', 'e', 'i', 'o', 'u']);
                match pair[0].as_str() {
                    "a" => assert!(!vowel, "{words:?}"),
                    "an" => assert!(vowel, "{words:?}"),
                    _ => {}
                }
            }
        }
    }
}
