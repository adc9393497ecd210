//! Token-level scoring and per-type recall reports.
//!
//! `Incorrect` is the positive class. Scores are rendered as percentages
//! with two decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::edit_analysis::{ErrorType, Operation};
use crate::error::{Error, Result};

/// Detected / total counts for one error category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub detected: u64,
    pub total: u64,
}

impl Tally {
    pub fn recall(&self) -> Option<f64> {
        (self.total > 0).then(|| self.detected as f64 / self.total as f64)
    }

    fn add(&mut self, other: Tally) {
        self.detected += other.detected;
        self.total += other.total;
    }
}

/// Confusion counts plus typed tallies over gold-`Incorrect` tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub by_type: BTreeMap<ErrorType, Tally>,
    pub by_op: BTreeMap<Operation, Tally>,
}

impl EvalCounts {
    pub fn tokens(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Adds `other` into `self`; order of merging never matters.
    pub fn merge(&mut self, other: &EvalCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        for (k, v) in &other.by_type {
            self.by_type.entry(*k).or_default().add(*v);
        }
        for (k, v) in &other.by_op {
            self.by_op.entry(*k).or_default().add(*v);
        }
    }

    /// Counts one sentence into `self`.
    pub fn add_sentence(
        &mut self,
        gold: &[Label],
        pred: &[Label],
        types: Option<&[Option<(Operation, ErrorType)>]>,
    ) -> Result<()> {
        if gold.len() != pred.len() {
            return Err(Error::Shape(format!(
                "{} gold labels but {} predictions",
                gold.len(),
                pred.len()
            )));
        }
        if let Some(t) = types {
            if t.len() != gold.len() {
                return Err(Error::Shape(format!(
                    "{} gold labels but {} type slots",
                    gold.len(),
                    t.len()
                )));
            }
        }
        for (i, (&g, &p)) in gold.iter().zip(pred).enumerate() {
            match (g, p) {
                (Label::Incorrect, Label::Incorrect) => self.tp += 1,
                (Label::Correct, Label::Incorrect) => self.fp += 1,
                (Label::Incorrect, Label::Correct) => self.fn_ += 1,
                (Label::Correct, Label::Correct) => self.tn += 1,
            }
            if g != Label::Incorrect {
                continue;
            }
            if let Some(Some((op, et))) = types.map(|t| t[i]) {
                let hit = u64::from(p == Label::Incorrect);
                let t = self.by_type.entry(et).or_default();
                t.detected += hit;
                t.total += 1;
                let o = self.by_op.entry(op).or_default();
                o.detected += hit;
                o.total += 1;
            }
        }
        Ok(())
    }
}

/// Confusion counts (and typed tallies when `types` is given) for one sentence.
pub fn accumulate(
    gold: &[Label],
    pred: &[Label],
    types: Option<&[Option<(Operation, ErrorType)>]>,
) -> Result<EvalCounts> {
    let mut c = EvalCounts::default();
    c.add_sentence(gold, pred, types)?;
    Ok(c)
}

/// Micro-average: tallies are summed before any division.
pub fn aggregate(counts: &[EvalCounts]) -> EvalCounts {
    let mut out = EvalCounts::default();
    for c in counts {
        out.merge(c);
    }
    out
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// F-beta from precision and recall in any common unit; 0/0 gives 0.
pub fn f_beta_from_pr(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    ratio((1.0 + b2) * precision * recall, b2 * precision + recall)
}

pub fn f_beta(counts: &EvalCounts, beta: f64) -> Prf {
    let tp = counts.tp as f64;
    let precision = ratio(tp, tp + counts.fp as f64);
    let recall = ratio(tp, tp + counts.fn_ as f64);
    Prf {
        precision,
        recall,
        f: f_beta_from_pr(precision, recall, beta),
    }
}

/// One row of a typed recall table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedRow {
    pub name: String,
    pub detected: u64,
    pub total: u64,
    pub recall: Option<f64>,
    /// Share of all typed gold errors falling in this row.
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedRecallReport {
    /// The 16 POS-based types, taxonomy order.
    pub types: Vec<TypedRow>,
    /// Missing, Replacement, Unnecessary.
    pub operations: Vec<TypedRow>,
}

impl TypedRecallReport {
    pub fn overall(&self) -> Tally {
        let mut t = Tally::default();
        for r in &self.types {
            t.add(Tally {
                detected: r.detected,
                total: r.total,
            });
        }
        t
    }

    pub fn row(&self, name: &str) -> Option<&TypedRow> {
        self.types.iter().chain(&self.operations).find(|r| r.name == name)
    }
}

fn rows<K: Ord + Copy>(
    keys: &[K],
    map: &BTreeMap<K, Tally>,
    name: impl Fn(K) -> String,
) -> Vec<TypedRow> {
    let all: u64 = map.values().map(|t| t.total).sum();
    keys.iter()
        .map(|&k| {
            let t = map.get(&k).copied().unwrap_or_default();
            TypedRow {
                name: name(k),
                detected: t.detected,
                total: t.total,
                recall: t.recall(),
                frequency: ratio(t.total as f64, all as f64),
            }
        })
        .collect()
}

pub fn recall_by_type(counts: &EvalCounts) -> TypedRecallReport {
    TypedRecallReport {
        types: rows(&ErrorType::ALL, &counts.by_type, |e| e.as_str().to_string()),
        operations: rows(&Operation::ALL, &counts.by_op, |o| o.name().to_string()),
    }
}

/// Per-row mean of per-dataset recalls, over datasets where the row is defined.
/// Counts and frequencies are the micro-averaged ones.
pub fn recall_by_type_macro(datasets: &[EvalCounts]) -> TypedRecallReport {
    let mut report = recall_by_type(&aggregate(datasets));
    let per: Vec<TypedRecallReport> = datasets.iter().map(recall_by_type).collect();
    let mean = |pick: &dyn Fn(&TypedRecallReport) -> Option<f64>| {
        let vals: Vec<f64> = per.iter().filter_map(pick).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    for (i, row) in report.types.iter_mut().enumerate() {
        row.recall = mean(&|r| r.types[i].recall);
    }
    for (i, row) in report.operations.iter_mut().enumerate() {
        row.recall = mean(&|r| r.operations[i].recall);
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Tsv,
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "table" => Ok(ReportFormat::Table),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map(pct).unwrap_or_else(|| "-".to_string())
}

fn render_grid(rows: &[Vec<String>], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            for r in rows {
                out.push_str(&r.join("\t"));
                out.push('\n');
            }
        }
        ReportFormat::Table => {
            let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
            let widths: Vec<usize> = (0..cols)
                .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
                .collect();
            for (i, r) in rows.iter().enumerate() {
                let cells: Vec<String> = r
                    .iter()
                    .enumerate()
                    .map(|(c, s)| {
                        if c == 0 {
                            format!("{s:<w$}", w = widths[c])
                        } else {
                            format!("{s:>w$}", w = widths[c])
                        }
                    })
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  ").trim_end());
                if i == 0 {
                    let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
                    let _ = writeln!(out, "{}", "-".repeat(total));
                }
            }
        }
    }
    out
}

/// `dataset P R F0.5` rows.
pub fn render_scores(results: &[(String, Prf)], format: ReportFormat) -> String {
    let mut rows = vec![vec!["dataset".into(), "P".into(), "R".into(), "F0.5".into()]];
    for (name, s) in results {
        rows.push(vec![name.clone(), pct(s.precision), pct(s.recall), pct(s.f)]);
    }
    render_grid(&rows, format)
}

/// `type detected total recall frequency` rows: 16 types then 3 operations.
pub fn render_typed(report: &TypedRecallReport, format: ReportFormat) -> String {
    let mut rows = vec![vec![
        "type".into(),
        "detected".into(),
        "total".into(),
        "recall".into(),
        "frequency".into(),
    ]];
    for r in report.types.iter().chain(&report.operations) {
        rows.push(vec![
            r.name.clone(),
            r.detected.to_string(),
            r.total.to_string(),
            opt_pct(r.recall),
            pct(r.frequency),
        ]);
    }
    render_grid(&rows, format)
}

/// Score table followed by the typed table, separated by a blank line.
pub fn render_report(
    results: &[(String, Prf)],
    typed: Option<&TypedRecallReport>,
    format: ReportFormat,
) -> String {
    let mut out = render_scores(results, format);
    if let Some(t) = typed {
        out.push('\n');
        out.push_str(&render_typed(t, format));
    }
    out
}

/// Recall of several models side by side: `type total frequency <name>...`.
///
/// Counts and frequencies come from the first report; every report must
/// cover the same gold data.
pub fn render_typed_comparison(models: &[(String, TypedRecallReport)], format: ReportFormat) -> Result<String> {
    let Some((_, first)) = models.first() else {
        return Err(Error::Validation("no reports to compare".into()));
    };
    let key = |r: &TypedRecallReport| -> Vec<u64> { r.types.iter().chain(&r.operations).map(|t| t.total).collect() };
    if let Some((name, _)) = models.iter().find(|(_, r)| key(r) != key(first)) {
        return Err(Error::Validation(format!(
            "report {name:?} was computed on different gold data"
        )));
    }
    let mut header = vec!["type".to_string(), "total".into(), "frequency".into()];
    header.extend(models.iter().map(|(n, _)| n.clone()));
    let mut rows = vec![header];
    let n = first.types.len() + first.operations.len();
    for i in 0..n {
        let pick = |r: &TypedRecallReport| r.types.iter().chain(&r.operations).nth(i).cloned().unwrap();
        let base = pick(first);
        let mut row = vec![base.name.clone(), base.total.to_string(), pct(base.frequency)];
        row.extend(models.iter().map(|(_, r)| opt_pct(pick(r).recall)));
        rows.push(row);
    }
    Ok(render_grid(&rows, format))
}

fn parse_pct(field: &str, line: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .map(|v| v / 100.0)
        .map_err(|_| Error::parse(line, format!("bad number {field:?}")))
}

fn data_lines<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h.split('\t').next() == Some(header) => {}
        _ => return Err(Error::parse(1, format!("expected a {header:?} header"))),
    }
    Ok(lines
        .take_while(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i, l.split('\t').collect()))
        .collect())
}

/// Reads back the TSV written by [`render_scores`].
pub fn parse_scores_tsv(text: &str) -> Result<Vec<(String, Prf)>> {
    data_lines(text, "dataset")?
        .into_iter()
        .map(|(i, f)| {
            if f.len() != 4 {
                return Err(Error::parse(i, format!("expected 4 fields, got {}", f.len())));
            }
            Ok((
                f[0].to_string(),
                Prf {
                    precision: parse_pct(f[1], i)?,
                    recall: parse_pct(f[2], i)?,
                    f: parse_pct(f[3], i)?,
                },
            ))
        })
        .collect()
}

/// Reads back the TSV written by [`render_typed`] as plain rows.
pub fn parse_typed_tsv(text: &str) -> Result<Vec<TypedRow>> {
    data_lines(text, "type")?
        .into_iter()
        .map(|(i, f)| {
            if f.len() != 5 {
                return Err(Error::parse(i, format!("expected 5 fields, got {}", f.len())));
            }
            let count = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::parse(i, format!("bad count {s:?}")))
            };
            Ok(TypedRow {
                name: f[0].to_string(),
                detected: count(f[1])?,
                total: count(f[2])?,
                recall: if f[3] == "-" { None } else { Some(parse_pct(f[3], i)?) },
                frequency: parse_pct(f[4], i)?,
            })
        })
        .collect()
}
