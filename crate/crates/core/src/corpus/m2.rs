//! The M2 interchange format.
//!
//! ```text
//! S I has a dog
//! A 1 2|||R:VERB|||have|||REQUIRED|||-NONE-|||0
//!
//! ```
//!
//! Each `A` line belongs to the annotator id in its last field. A `noop`
//! line with span `-1 -1` records an annotation set with no edits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::{AnnotatedSentence, Sentence};
use crate::edit_analysis::Edit;
use crate::error::{Error, Result};

const FIELD_SEP: &str = "|||";

struct Block {
    line: usize,
    sentence: Sentence,
    // annotator -> edits, in file order
    sets: BTreeMap<usize, Vec<(usize, Edit)>>,
}

/// Parses M2 content into one record per (sentence, annotator).
///
/// Sentence ids are the 0-based block index. A block without any `A` line
/// yields a single edit-free record for annotator 0.
pub fn parse_m2(content: &str) -> Result<Vec<AnnotatedSentence>> {
    let mut blocks: Vec<Block> = Vec::new();
    let mut current: Option<Block> = None;

    for (i, raw) in content.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("S ").or_else(|| (line == "S").then_some("")) {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            let sid = blocks.len().to_string();
            let sentence = Sentence::from_line(sid, rest)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            current = Some(Block {
                line: line_no,
                sentence,
                sets: BTreeMap::new(),
            });
        } else if let Some(rest) = line.strip_prefix("A ") {
            let block = current
                .as_mut()
                .ok_or_else(|| Error::parse(line_no, "annotation line before any S line"))?;
            let (annotator, edit) = parse_annotation(rest, line_no)?;
            let set = block.sets.entry(annotator).or_default();
            if let Some(edit) = edit {
                set.push((line_no, edit));
            }
        } else {
            return Err(Error::parse(
                line_no,
                format!("expected an S or A line, found {line:?}"),
            ));
        }
    }
    if let Some(b) = current.take() {
        blocks.push(b);
    }

    let mut out = Vec::new();
    for block in blocks {
        if block.sets.is_empty() {
            out.push(AnnotatedSentence::new(block.sentence, Vec::new(), 0)?);
            continue;
        }
        for (annotator, edits) in block.sets {
            let n = block.sentence.len();
            for (line_no, e) in &edits {
                if e.o_end > n {
                    return Err(Error::Validation(format!(
                        "line {line_no}: span {}..{} exceeds sentence length {n}",
                        e.o_start, e.o_end
                    )));
                }
            }
            let edits = edits.into_iter().map(|(_, e)| e).collect();
            let rec = AnnotatedSentence::new(block.sentence.clone(), edits, annotator)
                .map_err(|e| match e {
                    Error::Validation(msg) => {
                        Error::Validation(format!("sentence at line {}: {msg}", block.line))
                    }
                    other => other,
                })?;
            out.push(rec);
        }
    }
    Ok(out)
}

fn parse_annotation(rest: &str, line_no: usize) -> Result<(usize, Option<Edit>)> {
    let fields: Vec<&str> = rest.split(FIELD_SEP).collect();
    if fields.len() != 6 {
        return Err(Error::parse(
            line_no,
            format!("expected 6 |||-separated fields, found {}", fields.len()),
        ));
    }
    let annotator: usize = fields[5]
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad annotator id {:?}", fields[5])))?;
    let etype = fields[1].trim();
    let mut span = fields[0].split_whitespace();
    let (start, end) = match (span.next(), span.next(), span.next()) {
        (Some(s), Some(e), None) => (s, e),
        _ => return Err(Error::parse(line_no, format!("bad span {:?}", fields[0]))),
    };
    if etype.eq_ignore_ascii_case("noop") || (start == "-1" && end == "-1") {
        return Ok((annotator, None));
    }
    let start: usize = start
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad span start {start:?}")))?;
    let end: usize = end
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad span end {end:?}")))?;
    if end < start {
        return Err(Error::Validation(format!(
            "line {line_no}: span end {end} < start {start}"
        )));
    }
    let correction = fields[2].trim();
    let c_tokens: Vec<String> = if correction == "-NONE-" {
        Vec::new()
    } else {
        correction.split_whitespace().map(str::to_string).collect()
    };
    let mut edit = Edit::untyped(start, end, c_tokens)
        .map_err(|e| Error::Validation(format!("line {line_no}: {e}")))?;
    edit.set_type_label(etype);
    Ok((annotator, Some(edit)))
}

/// Serializes records back to M2. Consecutive records sharing a sentence id
/// are written as one block.
pub fn write_m2(records: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < records.len() {
        let sid = &records[i].sentence.sid;
        let mut j = i;
        while j < records.len() && &records[j].sentence.sid == sid {
            j += 1;
        }
        let _ = writeln!(out, "S {}", records[i].sentence.words().join(" "));
        for rec in &records[i..j] {
            if rec.edits.is_empty() {
                let _ = writeln!(
                    out,
                    "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||{}",
                    rec.annotator
                );
            }
            for e in &rec.edits {
                let _ = writeln!(
                    out,
                    "A {} {}|||{}|||{}|||REQUIRED|||-NONE-|||{}",
                    e.o_start,
                    e.o_end,
                    e.type_label(),
                    e.c_tokens.join(" "),
                    rec.annotator
                );
            }
        }
        out.push('\n');
        i = j;
    }
    out
}
