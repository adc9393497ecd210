//! Shared fixtures for the benchmarks.

use ged_core::corpus::{build_vocab, encode_all};
use ged_core::embeddings::{pseudo_store, ContextualVectorStore};
use ged_core::synthetic::synthetic_corpus;
use ged_core::{AnnotatedSentence, Integration, ModelConfig, ModelParams, Sentence};

/// Encoded synthetic sentences with the raw records they came from.
pub fn corpus(n: usize, seed: u64) -> (Vec<AnnotatedSentence>, Vec<Sentence>) {
    let records = synthetic_corpus(n, seed).expect("synthetic corpus");
    let raw: Vec<Sentence> = records.iter().map(|r| r.sentence.clone()).collect();
    let vocab = build_vocab(&raw, 1).expect("vocab");
    (records, encode_all(&raw, &vocab))
}

/// Tokens of the original and corrected side of each record.
pub fn parallel_pairs(records: &[AnnotatedSentence]) -> Vec<(Vec<String>, Vec<String>)> {
    records
        .iter()
        .map(|r| {
            let orig: Vec<String> = r.sentence.words().iter().map(|w| w.to_string()).collect();
            let mut corr = orig.clone();
            for e in r.edits.iter().rev() {
                corr.splice(e.o_start..e.o_end, e.c_tokens.iter().cloned());
            }
            (orig, corr)
        })
        .collect()
}

/// A model sized like the overfitting check plus a covering pseudo store.
pub fn model(
    sentences: &[Sentence],
    mode: Integration,
    full_size: bool,
) -> (ModelParams, Option<ContextualVectorStore>) {
    let words = sentences.iter().flat_map(|s| s.word_ids()).max().unwrap_or(3) + 1;
    let chars = sentences
        .iter()
        .flat_map(|s| s.tokens.iter().flat_map(|t| t.char_ids.iter().copied()))
        .max()
        .unwrap_or(3)
        + 1;
    let (layers, dim) = (3, 16);
    let mut cfg = if full_size {
        ModelConfig::new(words, chars)
    } else {
        let mut c = ModelConfig::new(words, chars);
        c.word_dim = 50;
        c.char_dim = 25;
        c.char_hidden = 25;
        c.word_hidden = 50;
        c
    };
    cfg = cfg.with_context(mode, layers, dim);
    let params = ModelParams::init(&cfg, 1).expect("init");
    let store = (mode != Integration::None).then(|| pseudo_store(sentences, layers, dim, 1).expect("store"));
    (params, store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ged_core::edit_analysis::align_edits;

    #[test]
    fn fixtures_are_consistent() {
        let (records, sentences) = corpus(30, 2);
        assert_eq!(records.len(), sentences.len());
        for ((r, (orig, corr)), s) in records.iter().zip(parallel_pairs(&records)).zip(&sentences) {
            assert_eq!(r.edits.is_empty(), orig == corr);
            let realigned = align_edits(&orig, &corr);
            assert_eq!(realigned.is_empty(), r.edits.is_empty());
            assert!(s.word_ids().iter().all(|&id| id > 3));
        }
        let (params, store) = model(&sentences, Integration::Output, false);
        assert_eq!(params.config.context_layers, 3);
        store.unwrap().check_coverage(&sentences).unwrap();
    }
}
