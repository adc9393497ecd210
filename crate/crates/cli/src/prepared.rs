use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ged_core::corpus::{build_vocab, encode, parse_m2};
use ged_core::edit_analysis::{annotate_corpus, EditTyper, Lexicon, ParallelPair};
use ged_core::{AnnotatedSentence, Pos, Sentence, Vocab};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Source};
use crate::error::{read_text, write_file, CliError, CliResult};

pub const VOCAB_FILE: &str = "vocab.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_pos_lines(path: &Path, expected: usize) -> CliResult<Vec<Vec<Pos>>> {
    let text = read_text(path)?;
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != expected {
        return Err(CliError::input(format!(
            "{}: {} lines, expected {expected}",
            path.display(),
            lines.len()
        )));
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| t.parse::<Pos>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Reads one source into annotated records; sentence ids get a `name:` prefix.
pub fn load_source(name: &str, source: &Source, typer: &EditTyper) -> CliResult<Vec<AnnotatedSentence>> {
    let mut records = match source {
        Source::M2(path) => parse_m2(&read_text(path)?).map_err(|e| CliError::in_file(path, e))?,
        Source::Parallel {
            original,
            corrected,
            original_pos,
            corrected_pos,
        } => {
            let orig = read_text(original)?;
            let corr = read_text(corrected)?;
            let (o_lines, c_lines): (Vec<&str>, Vec<&str>) = (orig.lines().collect(), corr.lines().collect());
            if o_lines.len() != c_lines.len() {
                return Err(CliError::input(format!(
                    "{}: {} lines but {} has {}",
                    original.display(),
                    o_lines.len(),
                    corrected.display(),
                    c_lines.len()
                )));
            }
            let o_pos = original_pos.as_deref().map(|p| parse_pos_lines(p, o_lines.len())).transpose()?;
            let c_pos = corrected_pos.as_deref().map(|p| parse_pos_lines(p, c_lines.len())).transpose()?;
            let mut pairs = Vec::with_capacity(o_lines.len());
            for (i, (o, c)) in o_lines.iter().zip(&c_lines).enumerate() {
                let mut pair = ParallelPair::from_lines(i.to_string(), o, c);
                if pair.original.is_empty() {
                    return Err(CliError::input(format!(
                        "{}:{}: empty original sentence",
                        original.display(),
                        i + 1
                    )));
                }
                pair.orig_pos = o_pos.as_ref().map(|p| p[i].clone());
                pair.corr_pos = c_pos.as_ref().map(|p| p[i].clone());
                pairs.push(pair);
            }
            annotate_corpus(&pairs, typer).map_err(|e| CliError::in_file(original, e))?
        }
    };
    for r in &mut records {
        r.sentence.sid = format!("{name}:{}", r.sentence.sid);
    }
    Ok(records)
}

/// One sentence per id, in first-seen order.
pub fn unique_sentences(records: &[AnnotatedSentence]) -> Vec<Sentence> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.sentence.sid.clone()))
        .map(|r| r.sentence.clone())
        .collect()
}

fn check_name(name: &str) -> CliResult<()> {
    let ok = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        && !name.starts_with('.')
        && !["vocab", "manifest"].contains(&name);
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!("invalid dataset name {name:?}")))
    }
}

/// Parses every configured corpus and writes `vocab.json`, one JSONL file
/// per dataset and `manifest.json` into the prepared directory. Nothing is
/// written unless every input parses.
pub fn prepare(cfg: &RunConfig) -> CliResult<PathBuf> {
    let datasets = cfg.datasets();
    if !datasets.iter().any(|(n, _)| n == "train") {
        return Err(CliError::config("no training corpus configured ([data] train)"));
    }
    for (name, _) in &datasets {
        check_name(name)?;
    }
    let mut inputs: Vec<&Path> = datasets.iter().flat_map(|(_, s)| s.paths()).collect();
    inputs.extend(cfg.data.lexicon.as_deref());
    for p in &inputs {
        if !p.is_file() {
            return Err(CliError::input(format!("{}: no such file", p.display())));
        }
    }

    let typer = match &cfg.data.lexicon {
        Some(p) => EditTyper::with_lexicon(Lexicon::from_text(&read_text(p)?)),
        None => EditTyper::default(),
    };
    let mut loaded = Vec::new();
    for (name, source) in &datasets {
        loaded.push((name.clone(), load_source(name, source, &typer)?));
    }
    let train_sentences = unique_sentences(&loaded[0].1);
    let vocab = build_vocab(&train_sentences, cfg.data.min_count.unwrap_or(1))?;

    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    files.insert(VOCAB_FILE.into(), to_json(&vocab)?.into_bytes());
    let mut counts = BTreeMap::new();
    for (name, records) in &loaded {
        let mut out = String::new();
        for r in records {
            let mut r = r.clone();
            r.sentence = encode(&r.sentence, &vocab);
            out.push_str(&serde_json::to_string(&r).map_err(|e| CliError::input(e.to_string()))?);
            out.push('\n');
        }
        counts.insert(name.clone(), records.len());
        files.insert(format!("{name}.jsonl"), out.into_bytes());
    }

    let mut input_digests = BTreeMap::new();
    for p in &inputs {
        let bytes = std::fs::read(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        input_digests.insert(p.display().to_string(), sha256_hex(&bytes));
    }
    let output_digests: BTreeMap<&String, String> = files.iter().map(|(k, v)| (k, sha256_hex(v))).collect();
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = serde_json::json!({
        "created_unix": created,
        "inputs": input_digests,
        "outputs": output_digests,
        "records": counts,
    });
    files.insert(MANIFEST_FILE.into(), to_json(&manifest)?.into_bytes());

    let dir = &cfg.prepared;
    let staging = staging_dir(dir);
    let result = (|| {
        if staging.exists() {
            remove_dir(&staging)?;
        }
        for (name, bytes) in &files {
            write_file(&staging.join(name), bytes)?;
        }
        if dir.exists() {
            remove_dir(dir)?;
        }
        std::fs::rename(&staging, dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
    })();
    if result.is_err() && staging.exists() {
        let _ = std::fs::remove_dir_all(&staging);
    }
    result.map(|_| dir.clone())
}

fn staging_dir(dir: &Path) -> PathBuf {
    let mut name = dir.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "prepared".into());
    name.push(".partial");
    dir.with_file_name(name)
}

fn remove_dir(dir: &Path) -> CliResult<()> {
    std::fs::remove_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> CliResult<String> {
    serde_json::to_string_pretty(v)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::input(e.to_string()))
}

/// A prepared directory opened for reading.
pub struct Prepared {
    pub dir: PathBuf,
    pub vocab: Vocab,
}

impl Prepared {
    pub fn open(dir: &Path) -> CliResult<Self> {
        let path = dir.join(VOCAB_FILE);
        let vocab: Vocab = serde_json::from_str(&read_text(&path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(Prepared {
            dir: dir.to_path_buf(),
            vocab,
        })
    }

    pub fn records(&self, name: &str) -> CliResult<Vec<AnnotatedSentence>> {
        let path = self.dir.join(format!("{name}.jsonl"));
        read_text(&path)?
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), i + 1)))
            })
            .collect()
    }

    /// Input digests recorded at prepare time.
    pub fn input_digests(&self) -> CliResult<BTreeMap<String, String>> {
        let path = self.dir.join(MANIFEST_FILE);
        let v: serde_json::Value = serde_json::from_str(&read_text(&path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Ok(v.get("inputs")
            .and_then(|m| m.as_object())
            .map(|m| {
                m.iter()
                    .filter_map(|(k, v)| Some((k.clone(), v.as_str()?.to_string())))
                    .collect()
            })
            .unwrap_or_default())
    }
}

/// Sentences annotated by `annotator`, one per id.
pub fn select_annotator(records: &[AnnotatedSentence], annotator: usize) -> Vec<Sentence> {
    let picked: Vec<AnnotatedSentence> = records.iter().filter(|r| r.annotator == annotator).cloned().collect();
    unique_sentences(&picked)
}
