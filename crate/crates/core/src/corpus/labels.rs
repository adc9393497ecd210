use crate::corpus::Label;
use crate::edit_analysis::{Edit, ErrorType, Operation};

/// Index of the token a zero-width edit at `k` is charged to.
fn clamped(k: usize, n_tokens: usize) -> usize {
    k.min(n_tokens.saturating_sub(1))
}

/// Converts span edits into binary token labels.
///
/// Tokens inside any edit's original span are `Incorrect`. A zero-width
/// (missing-word) edit at position `k` marks the token at `k`, clamped to
/// the last token when the insertion point is the sentence end.
pub fn spans_to_token_labels(n_tokens: usize, edits: &[Edit]) -> Vec<Label> {
    let mut labels = vec![Label::Correct; n_tokens];
    if n_tokens == 0 {
        return labels;
    }
    for e in edits {
        if e.o_start == e.o_end {
            labels[clamped(e.o_start, n_tokens)] = Label::Incorrect;
        } else {
            for l in &mut labels[e.o_start..e.o_end.min(n_tokens)] {
                *l = Label::Incorrect;
            }
        }
    }
    labels
}

/// Assigns each `Incorrect` token the operation and type of the first edit
/// (in sorted order) that covers it. `Correct` tokens get `None`.
pub fn token_types(n_tokens: usize, edits: &[Edit]) -> Vec<Option<(Operation, ErrorType)>> {
    let mut types = vec![None; n_tokens];
    if n_tokens == 0 {
        return types;
    }
    for e in edits {
        let range = if e.o_start == e.o_end {
            let k = clamped(e.o_start, n_tokens);
            k..k + 1
        } else {
            e.o_start..e.o_end.min(n_tokens)
        };
        for slot in &mut types[range] {
            if slot.is_none() {
                *slot = Some((e.op, e.etype));
            }
        }
    }
    types
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label::{Correct as C, Incorrect as I};

    fn edit(s: usize, e: usize, c: &[&str]) -> Edit {
        Edit::untyped(s, e, c.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn span_marks_covered_tokens() {
        let labels = spans_to_token_labels(5, &[edit(1, 3, &["x"])]);
        assert_eq!(labels, vec![C, I, I, C, C]);
    }

    #[test]
    fn missing_word_at_end_is_clamped() {
        let labels = spans_to_token_labels(3, &[edit(3, 3, &["."])]);
        assert_eq!(labels, vec![C, C, I]);
    }

    #[test]
    fn missing_word_inside_marks_insertion_point() {
        let labels = spans_to_token_labels(3, &[edit(1, 1, &["am"])]);
        assert_eq!(labels, vec![C, I, C]);
    }

    #[test]
    fn no_edits_all_correct() {
        assert_eq!(spans_to_token_labels(4, &[]), vec![C; 4]);
    }

    #[test]
    fn first_covering_edit_wins() {
        let mut a = edit(2, 2, &["the"]);
        a.etype = ErrorType::Det;
        let mut b = edit(2, 3, &["dogs"]);
        b.etype = ErrorType::Noun;
        let types = token_types(3, &[a, b]);
        assert_eq!(types[2], Some((Operation::Missing, ErrorType::Det)));
        assert_eq!(types[0], None);
    }
}
