//! Weighted token alignment with adjacent transpositions.
//!
//! Costs: match 0, insert/delete 1, adjacent transposition 1, substitution
//! 0.5 for case variants or shared stems, 1 for character-similar tokens and
//! 2 for unrelated tokens. Ties in the backtrace prefer match, then
//! substitution, transposition, deletion and insertion, which places edits
//! as far left as the optimum allows.

use serde::{Deserialize, Serialize};

use crate::edit_analysis::classify::{char_distance, stem};
use crate::edit_analysis::Edit;
use crate::error::{Error, Result};

/// One primitive alignment step. `o` and `c` are the positions in the
/// original and corrected sequences where the step begins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Match { o: usize, c: usize },
    Substitute { o: usize, c: usize, token: String },
    Insert { o: usize, c: usize, token: String },
    Delete { o: usize, c: usize },
    /// Swap of the two original tokens at `o` and `o + 1`.
    Transpose { o: usize, c: usize },
}

impl Step {
    fn cost(&self, orig: &[String]) -> f64 {
        match self {
            Step::Match { .. } => 0.0,
            Step::Substitute { o, token, .. } => substitution_cost(&orig[*o], token),
            Step::Insert { .. } | Step::Delete { .. } | Step::Transpose { .. } => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScript {
    pub steps: Vec<Step>,
    pub cost: f64,
}

impl AlignmentScript {
    /// Sum of step costs recomputed from the original tokens.
    pub fn recompute_cost(&self, orig: &[String]) -> f64 {
        self.steps.iter().map(|s| s.cost(orig)).sum()
    }
}

/// Cost of replacing `a` with a different token `b`.
pub fn substitution_cost(a: &str, b: &str) -> f64 {
    if a == b {
        return 0.0;
    }
    let (la, lb) = (a.to_lowercase(), b.to_lowercase());
    if la == lb {
        return 0.5;
    }
    let (sa, sb) = (stem(&la), stem(&lb));
    if sa == sb && sa.chars().count() >= 3 {
        return 0.5;
    }
    let longest = la.chars().count().max(lb.chars().count());
    if 2 * char_distance(&la, &lb) <= longest {
        1.0
    } else {
        2.0
    }
}

fn can_transpose(orig: &[String], corr: &[String], i: usize, j: usize) -> bool {
    i >= 2
        && j >= 2
        && orig[i - 2] == corr[j - 1]
        && orig[i - 1] == corr[j - 2]
        && orig[i - 2] != orig[i - 1]
}

/// Minimum-cost alignment script turning `orig` into `corr`.
pub fn align(orig: &[String], corr: &[String]) -> AlignmentScript {
    let (n, m) = (orig.len(), corr.len());
    let mut cost = vec![vec![0.0f64; m + 1]; n + 1];
    for (i, row) in cost.iter_mut().enumerate() {
        row[0] = i as f64;
    }
    for j in 0..=m {
        cost[0][j] = j as f64;
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = if orig[i - 1] == corr[j - 1] {
                cost[i - 1][j - 1]
            } else {
                cost[i - 1][j - 1] + substitution_cost(&orig[i - 1], &corr[j - 1])
            };
            let mut best = diag
                .min(cost[i - 1][j] + 1.0)
                .min(cost[i][j - 1] + 1.0);
            if can_transpose(orig, corr, i, j) {
                best = best.min(cost[i - 2][j - 2] + 1.0);
            }
            cost[i][j] = best;
        }
    }

    let mut steps = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i][j];
        if i > 0 && j > 0 {
            if orig[i - 1] == corr[j - 1] && here == cost[i - 1][j - 1] {
                steps.push(Step::Match { o: i - 1, c: j - 1 });
                i -= 1;
                j -= 1;
                continue;
            }
            if orig[i - 1] != corr[j - 1]
                && here == cost[i - 1][j - 1] + substitution_cost(&orig[i - 1], &corr[j - 1])
            {
                steps.push(Step::Substitute {
                    o: i - 1,
                    c: j - 1,
                    token: corr[j - 1].clone(),
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if can_transpose(orig, corr, i, j) && here == cost[i - 2][j - 2] + 1.0 {
                steps.push(Step::Transpose { o: i - 2, c: j - 2 });
                i -= 2;
                j -= 2;
                continue;
            }
        }
        if i > 0 && here == cost[i - 1][j] + 1.0 {
            steps.push(Step::Delete { o: i - 1, c: j });
            i -= 1;
        } else {
            steps.push(Step::Insert {
                o: i,
                c: j - 1,
                token: corr[j - 1].clone(),
            });
            j -= 1;
        }
    }
    steps.reverse();
    AlignmentScript {
        steps,
        cost: cost[n][m],
    }
}

/// Replays a script over `orig`, producing the corrected sequence.
pub fn apply_script(orig: &[String], script: &AlignmentScript) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(orig.len());
    let mut pos = 0;
    let expect = |o: usize, pos: usize| {
        if o != pos || o >= orig.len() {
            Err(Error::Validation(format!(
                "script step at original position {o} but cursor is at {pos}"
            )))
        } else {
            Ok(())
        }
    };
    for step in &script.steps {
        match step {
            Step::Match { o, .. } => {
                expect(*o, pos)?;
                out.push(orig[pos].clone());
                pos += 1;
            }
            Step::Substitute { o, token, .. } => {
                expect(*o, pos)?;
                out.push(token.clone());
                pos += 1;
            }
            Step::Delete { o, .. } => {
                expect(*o, pos)?;
                pos += 1;
            }
            Step::Insert { o, token, .. } => {
                if *o != pos {
                    return Err(Error::Validation(format!(
                        "insertion at {o} but cursor is at {pos}"
                    )));
                }
                out.push(token.clone());
            }
            Step::Transpose { o, .. } => {
                expect(*o, pos)?;
                expect(*o + 1, pos + 1)?;
                out.push(orig[pos + 1].clone());
                out.push(orig[pos].clone());
                pos += 2;
            }
        }
    }
    if pos != orig.len() {
        return Err(Error::Validation(format!(
            "script consumed {pos} of {} original tokens",
            orig.len()
        )));
    }
    Ok(out)
}

struct Pending {
    start: usize,
    end: usize,
    tokens: Vec<String>,
    has_substitution: bool,
}

/// Groups non-match steps into edits.
///
/// Runs of insertions and deletions merge with their neighbours; each edit
/// holds at most one substitution, so adjacent substitutions stay separate
/// edits. A transposition is always an edit of its own.
pub fn script_to_edits(orig: &[String], script: &AlignmentScript) -> Vec<Edit> {
    let mut edits = Vec::new();
    let mut pending: Option<Pending> = None;

    fn flush(pending: &mut Option<Pending>, edits: &mut Vec<Edit>) {
        if let Some(p) = pending.take() {
            if let Ok(e) = Edit::untyped(p.start, p.end, p.tokens) {
                edits.push(e);
            }
        }
    }

    for step in &script.steps {
        match step {
            Step::Match { .. } => flush(&mut pending, &mut edits),
            Step::Transpose { o, .. } => {
                flush(&mut pending, &mut edits);
                pending = Some(Pending {
                    start: *o,
                    end: o + 2,
                    tokens: vec![orig[o + 1].clone(), orig[*o].clone()],
                    has_substitution: false,
                });
                flush(&mut pending, &mut edits);
            }
            Step::Substitute { o, token, .. } => {
                if pending.as_ref().is_some_and(|p| p.has_substitution) {
                    flush(&mut pending, &mut edits);
                }
                let p = pending.get_or_insert(Pending {
                    start: *o,
                    end: *o,
                    tokens: Vec::new(),
                    has_substitution: false,
                });
                p.end = o + 1;
                p.tokens.push(token.clone());
                p.has_substitution = true;
            }
            Step::Delete { o, .. } => {
                let p = pending.get_or_insert(Pending {
                    start: *o,
                    end: *o,
                    tokens: Vec::new(),
                    has_substitution: false,
                });
                p.end = o + 1;
            }
            Step::Insert { o, token, .. } => {
                let p = pending.get_or_insert(Pending {
                    start: *o,
                    end: *o,
                    tokens: Vec::new(),
                    has_substitution: false,
                });
                p.tokens.push(token.clone());
            }
        }
    }
    flush(&mut pending, &mut edits);
    edits
}

/// Aligns two token sequences and extracts untyped edits.
pub fn align_edits(orig: &[String], corr: &[String]) -> Vec<Edit> {
    script_to_edits(orig, &align(orig, corr))
}
