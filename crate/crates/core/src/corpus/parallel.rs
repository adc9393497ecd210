use crate::corpus::AnnotatedSentence;
use crate::edit_analysis::{annotate_corpus, EditTyper, ParallelPair};
use crate::error::{Error, Result};

/// Parses aligned original/corrected text (one whitespace-tokenized
/// sentence per line) and derives typed edits by alignment. Sentence ids are
/// 0-based line indices; every record belongs to annotator 0.
pub fn parse_parallel(original: &str, corrected: &str) -> Result<Vec<AnnotatedSentence>> {
    parse_parallel_with(original, corrected, &EditTyper::default())
}

pub fn parse_parallel_with(
    original: &str,
    corrected: &str,
    typer: &EditTyper,
) -> Result<Vec<AnnotatedSentence>> {
    let orig: Vec<&str> = original.lines().collect();
    let corr: Vec<&str> = corrected.lines().collect();
    if orig.len() != corr.len() {
        return Err(Error::Validation(format!(
            "parallel files differ in length: {} original lines vs {} corrected lines",
            orig.len(),
            corr.len()
        )));
    }
    let pairs = orig
        .iter()
        .zip(&corr)
        .enumerate()
        .map(|(i, (o, c))| {
            let pair = ParallelPair::from_lines(i.to_string(), o, c);
            if pair.original.is_empty() {
                return Err(Error::parse(i + 1, "empty original sentence"));
            }
            Ok(pair)
        })
        .collect::<Result<Vec<_>>>()?;
    annotate_corpus(&pairs, typer)
}
