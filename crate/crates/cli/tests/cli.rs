use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ged_core::corpus::write_m2;
use ged_core::evaluation::{f_beta, parse_scores_tsv, parse_typed_tsv, EvalCounts};
use ged_core::synthetic::synthetic_corpus;
use ged_core::{AnnotatedSentence, Label};
use tempfile::TempDir;

fn ged(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ged"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = ged(dir, args);
    assert!(
        out.status.success(),
        "ged {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const SMALL_MODEL: &str = r#"
[model]
word_dim = 8
char_dim = 4
char_hidden = 4
word_hidden = 8
hidden_dim = 6
lm_hidden = 6

[train]
max_epochs = 3
batch_size = 8
seed = 5
"#;

struct Workspace {
    tmp: TempDir,
}

impl Workspace {
    /// Synthetic train/dev/test M2 files and a config pointing at them.
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let ws = Workspace { tmp };
        ws.write("train.m2", &write_m2(&synthetic_corpus(40, 1).unwrap()));
        ws.write("dev.m2", &write_m2(&synthetic_corpus(12, 2).unwrap()));
        ws.write("test.m2", &write_m2(&synthetic_corpus(12, 3).unwrap()));
        ws.config("");
        ws
    }

    fn dir(&self) -> &Path {
        self.tmp.path()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        fs::write(self.path(name), text).unwrap();
    }

    fn config(&self, extra: &str) {
        self.write(
            "run.toml",
            &format!(
                "{extra}\n[data]\ntrain = \"train.m2\"\ndev = \"dev.m2\"\ntest = {{ test = \"test.m2\" }}\n{SMALL_MODEL}"
            ),
        );
    }

    fn ged(&self, args: &[&str]) -> Output {
        let mut full = vec!["--config", "run.toml"];
        full.extend_from_slice(args);
        ged(self.dir(), &full)
    }

    fn ok(&self, args: &[&str]) -> String {
        let mut full = vec!["--config", "run.toml"];
        full.extend_from_slice(args);
        ok(self.dir(), &full)
    }

    fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.path(name)).unwrap()
    }
}

#[test]
fn prepare_writes_artifacts_deterministically() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    for f in ["vocab.json", "train.jsonl", "dev.jsonl", "test.jsonl", "manifest.json"] {
        assert!(ws.path("prepared").join(f).is_file(), "{f}");
    }
    let snapshot: Vec<Vec<u8>> = ["vocab.json", "train.jsonl", "test.jsonl"]
        .iter()
        .map(|f| ws.read(&format!("prepared/{f}")))
        .collect();
    let manifest: serde_json::Value = serde_json::from_slice(&ws.read("prepared/manifest.json")).unwrap();
    assert_eq!(manifest["records"]["train"], 40);
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 3);

    ws.ok(&["prepare"]);
    for (f, before) in ["vocab.json", "train.jsonl", "test.jsonl"].iter().zip(&snapshot) {
        assert_eq!(&ws.read(&format!("prepared/{f}")), before, "{f}");
    }
    let again: serde_json::Value = serde_json::from_slice(&ws.read("prepared/manifest.json")).unwrap();
    assert_eq!(again["outputs"], manifest["outputs"]);

    let first = String::from_utf8(ws.read("prepared/train.jsonl")).unwrap();
    let rec: AnnotatedSentence = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(rec.sentence.sid, "train:0");
    assert!(rec.sentence.tokens.iter().all(|t| t.word_id != 0));
}

#[test]
fn prepare_accepts_parallel_text() {
    let ws = Workspace::new();
    ws.write("orig.txt", "He have a apple .\nThe cat sat .\n");
    ws.write("corr.txt", "He has an apple .\nThe cat sat .\n");
    ws.write(
        "par.toml",
        "[data]\ntrain = { original = \"orig.txt\", corrected = \"corr.txt\" }\n",
    );
    ok(ws.dir(), &["--config", "par.toml", "prepare"]);
    let text = String::from_utf8(ws.read("prepared/train.jsonl")).unwrap();
    let recs: Vec<AnnotatedSentence> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 2);
    let labels: Vec<Label> = recs[0].sentence.gold_labels.clone();
    use Label::{Correct as C, Incorrect as I};
    assert_eq!(labels, vec![C, I, I, C, C]);
    let types: Vec<String> = recs[0].edits.iter().map(|e| e.type_label()).collect();
    assert_eq!(types, vec!["R:VERB", "R:DET"]);
    assert!(recs[1].edits.is_empty());
}

#[test]
fn prepare_missing_file_leaves_nothing() {
    let ws = Workspace::new();
    fs::remove_file(ws.path("test.m2")).unwrap();
    let out = ws.ged(&["prepare"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("test.m2"));
    assert!(!ws.path("prepared").exists());
    assert!(!ws.path("prepared.partial").exists());
}

#[test]
fn prepare_reports_file_and_line() {
    let ws = Workspace::new();
    ws.write("dev.m2", "S a b c\nA 0 9|||R:NOUN|||x|||REQUIRED|||-NONE-|||0\n");
    let out = ws.ged(&["prepare"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("dev.m2:2:"), "{err}");
    assert!(!ws.path("prepared").exists());
}

#[test]
fn train_without_context_is_reproducible() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.ok(&["train"]);
    let ck = ws.read("model.ckpt");
    let history = String::from_utf8(ws.read("model.history.tsv")).unwrap();
    assert_eq!(history.lines().count(), 4);
    assert!(history.starts_with("epoch\ttrain_loss\tdev_P\tdev_R\tdev_F05\n"));
    ws.ok(&["train"]);
    assert_eq!(ws.read("model.ckpt"), ck);
    assert_eq!(String::from_utf8(ws.read("model.history.tsv")).unwrap(), history);

    let seeded = ws.ged(&["--seed", "6", "train"]);
    assert!(seeded.status.success());
    assert_ne!(ws.read("model.ckpt"), ck);
}

#[test]
fn train_with_context_needs_a_store() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    let out = ws.ged(&["--integration", "input", "train"]);
    assert_eq!(code(&out), 3);
    assert!(!ws.path("model.ckpt").exists());

    ws.ok(&["pseudo-store", "ctx.store", "--layers", "2", "--dim", "4"]);
    ws.ok(&["--integration", "input", "--store", "ctx.store", "train"]);
    assert!(ws.path("model.ckpt").is_file());

    let out = ws.ged(&["evaluate"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    ws.ok(&["--store", "ctx.store", "evaluate"]);
    let out = ws.ged(&["--store", "ctx.store", "--integration", "output", "evaluate"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn coverage_gap_stops_before_training() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.ok(&["pseudo-store", "ctx.store", "--layers", "1", "--dim", "4"]);
    ws.write("train.m2", &write_m2(&synthetic_corpus(41, 1).unwrap()));
    ws.ok(&["prepare"]);
    let out = ws.ged(&["--integration", "output", "--store", "ctx.store", "train"]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train:40"), "{err}");
    assert!(!err.contains("epoch"), "{err}");
    assert!(!ws.path("model.ckpt").exists());
}

fn gold_predictions(records: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for r in records.iter().filter(|r| r.annotator == 0) {
        out.push_str(&format!("# {}\n", r.sentence.sid));
        for (t, l) in r.sentence.tokens.iter().zip(&r.sentence.gold_labels) {
            out.push_str(&format!("{}\t{}\n", t.surface, l.as_str()));
        }
        out.push('\n');
    }
    out
}

fn prepared_records(ws: &Workspace, name: &str) -> Vec<AnnotatedSentence> {
    String::from_utf8(ws.read(&format!("prepared/{name}.jsonl")))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn perfect_predictions_score_one_hundred() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.write("gold.tsv", &gold_predictions(&prepared_records(&ws, "test")));
    let report = ws.ok(&["evaluate", "--predictions", "gold.tsv"]);
    let scores = parse_scores_tsv(&report).unwrap();
    assert_eq!(scores.len(), 1);
    assert!(report.lines().nth(1).unwrap().ends_with("test\t100.00\t100.00\t100.00"), "{report}");
    let typed_part = report.split("\n\n").nth(1).unwrap();
    for row in parse_typed_tsv(typed_part).unwrap() {
        assert_eq!(row.detected, row.total, "{}", row.name);
    }
}

#[test]
fn two_annotation_sets_give_two_rows() {
    let ws = Workspace::new();
    let base = synthetic_corpus(10, 3).unwrap();
    let mut both = Vec::new();
    for r in &base {
        both.push(r.clone());
        let mut second = r.clone();
        second.annotator = 1;
        second.edits.clear();
        second.sentence.gold_labels = vec![Label::Correct; r.sentence.len()];
        both.push(second);
    }
    ws.write("test.m2", &write_m2(&both));
    ws.ok(&["prepare"]);
    let records = prepared_records(&ws, "test");
    ws.write("gold.tsv", &gold_predictions(&records));
    let report = ws.ok(&["evaluate", "--predictions", "gold.tsv"]);
    let scores = parse_scores_tsv(&report).unwrap();
    let names: Vec<&str> = scores.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["test-1", "test-2"]);
    assert!(report.lines().nth(1).unwrap().ends_with("100.00\t100.00\t100.00"));

    // the second set has no errors, so every predicted error is a false positive
    let mut counts = EvalCounts::default();
    for r in records.iter().filter(|r| r.annotator == 1) {
        let pred = &records.iter().find(|g| g.annotator == 0 && g.sentence.sid == r.sentence.sid).unwrap().sentence.gold_labels;
        counts.add_sentence(&r.sentence.gold_labels, pred, Some(&r.token_types())).unwrap();
    }
    let expected = f_beta(&counts, 0.5);
    let line = report.lines().nth(2).unwrap();
    assert_eq!(
        line,
        format!(
            "test-2\t{:.2}\t{:.2}\t{:.2}",
            100.0 * expected.precision,
            100.0 * expected.recall,
            100.0 * expected.f
        )
    );

    let only = ws.ok(&["--annotator", "1", "evaluate", "--predictions", "gold.tsv"]);
    assert_eq!(parse_scores_tsv(&only).unwrap()[0].0, "test");
}

#[test]
fn evaluate_matches_library_scores() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.ok(&["train"]);
    let preds = ws.ok(&["predict", "--dataset", "test"]);
    ws.write("pred.tsv", &preds);
    let from_model = ws.ok(&["evaluate"]);
    let from_file = ws.ok(&["evaluate", "--predictions", "pred.tsv"]);
    assert_eq!(from_model, from_file);

    let records = prepared_records(&ws, "test");
    let mut counts = EvalCounts::default();
    let mut blocks = preds.split("\n\n").filter(|b| !b.trim().is_empty());
    for r in &records {
        let block = blocks.next().unwrap();
        let mut lines = block.lines();
        assert_eq!(lines.next().unwrap(), format!("# {}", r.sentence.sid));
        let pred: Vec<Label> = lines.map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
        counts.add_sentence(&r.sentence.gold_labels, &pred, None).unwrap();
    }
    let s = f_beta(&counts, 0.5);
    let row = from_model.lines().nth(1).unwrap();
    assert_eq!(
        row,
        format!("test\t{:.2}\t{:.2}\t{:.2}", 100.0 * s.precision, 100.0 * s.recall, 100.0 * s.f)
    );

    let table = ws.ok(&["--format", "table", "evaluate"]);
    assert!(table.lines().nth(1).unwrap().chars().all(|c| c == '-'));
}

#[test]
fn vocabulary_mismatch_is_exit_four() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.ok(&["train"]);
    ws.write("train.m2", &write_m2(&synthetic_corpus(40, 9).unwrap()));
    ws.ok(&["prepare"]);
    let out = ws.ged(&["evaluate"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));

    ws.write("model.ckpt", "not a checkpoint");
    assert_eq!(code(&ws.ged(&["evaluate"])), 4);
}

#[test]
fn predict_labels_text_files() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.ok(&["train"]);
    ws.write("in.txt", "the dog see a cat\n\nshe walks home\n");
    let out = ws.ok(&["predict", "in.txt"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "# in:0");
    assert!(lines[1].starts_with("the\t"));
    assert_eq!(lines.iter().filter(|l| l.starts_with('#')).count(), 2);
    for l in lines.iter().filter(|l| l.contains('\t')) {
        let f: Vec<&str> = l.split('\t').collect();
        let p: f64 = f[2].parse().unwrap();
        assert_eq!(f[1] == "i", p > 0.5, "{l}");
    }
    assert_eq!(ws.ok(&["predict", "in.txt"]), out);
}

#[test]
fn analyze_compares_integration_modes() {
    let ws = Workspace::new();
    ws.ok(&["prepare"]);
    ws.ok(&["pseudo-store", "ctx.store", "--layers", "2", "--dim", "4"]);
    for mode in ["input", "output"] {
        ws.config(&format!("checkpoint = \"{mode}.ckpt\"\nstore = \"ctx.store\""));
        ws.ok(&["--integration", mode, "train"]);
    }
    let report = ws.ok(&[
        "analyze",
        "--checkpoint",
        "input.ckpt",
        "--checkpoint",
        "output.ckpt",
    ]);
    let (scores, typed) = report.split_once("\n\n").unwrap();
    let names: Vec<String> = parse_scores_tsv(scores).unwrap().into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["input/test", "output/test"]);
    let header = typed.lines().next().unwrap();
    assert_eq!(header, "type\ttotal\tfrequency\tinput\toutput");
    assert_eq!(typed.lines().count(), 1 + 16 + 3);

    let macro_report = ws.ok(&["analyze", "--macro", "--checkpoint", "input.ckpt"]);
    assert!(macro_report.contains("\n\ntype\t"));
}

#[test]
fn bad_config_is_exit_three() {
    let ws = Workspace::new();
    ws.write("run.toml", "[train]\npatience = \"seven\"\n");
    assert_eq!(code(&ws.ged(&["prepare"])), 3);
    ws.write("run.toml", "[data]\ndev = \"dev.m2\"\n");
    assert_eq!(code(&ws.ged(&["prepare"])), 3);
    let out = ged(ws.dir(), &["--config", "absent.toml", "prepare"]);
    assert_eq!(code(&out), 2);
}
