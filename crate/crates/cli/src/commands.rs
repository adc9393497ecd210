use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ged_core::corpus::encode;
use ged_core::embeddings::{load_static_vectors, pseudo_store, ContextualVectorStore};
use ged_core::evaluation::{
    aggregate, f_beta, recall_by_type, recall_by_type_macro, render_report, render_scores,
    render_typed_comparison, EvalCounts, TypedRecallReport,
};
use ged_core::model::{labels_from_distribution, predict_probabilities};
use ged_core::training::{load_checkpoint, save_checkpoint, train_with_callback, Checkpoint};
use ged_core::{AnnotatedSentence, Integration, Label, ModelConfig, ModelParams, Sentence};

use crate::config::{Overrides, RunConfig};
use crate::error::{read_text, write_file, CliError, CliResult};
use crate::prepared::{select_annotator, sha256_hex, unique_sentences, Prepared};

fn open_store(cfg: &RunConfig, path: Option<&Path>) -> CliResult<ContextualVectorStore> {
    let path = path.ok_or_else(|| CliError::config("contextual integration requires a store (--store or `store`)"))?;
    if !path.is_file() {
        return Err(CliError::input(format!("{}: no such file", path.display())));
    }
    let store = ContextualVectorStore::read(path).map_err(|e| CliError::in_file(path, e))?;
    if let Some(kind) = cfg.provider {
        if store.kind() != kind {
            return Err(CliError::config(format!(
                "{}: store holds {} vectors but the config expects {}",
                path.display(),
                store.kind().as_str(),
                kind.as_str()
            )));
        }
    }
    Ok(store)
}

pub fn train(cfg: &RunConfig) -> CliResult<()> {
    let tc = &cfg.train;
    tc.validate()?;
    let prepared = Prepared::open(&cfg.prepared)?;
    let train_set = select_annotator(&prepared.records("train")?, tc.annotator);
    let dev_set = select_annotator(&prepared.records("dev")?, tc.annotator);
    if train_set.is_empty() {
        return Err(CliError::config(format!(
            "annotator {} has no training sentences",
            tc.annotator
        )));
    }
    let store = match tc.integration {
        Integration::None => None,
        _ => Some(open_store(cfg, cfg.store.as_deref())?),
    };
    if let Some(s) = &store {
        s.check_coverage(&train_set)?;
        s.check_coverage(&dev_set)?;
    }

    let vocab = &prepared.vocab;
    let mut mcfg = ModelConfig::new(vocab.word_count(), vocab.char_count());
    cfg.model.apply(&mut mcfg);
    if let Some(s) = &store {
        mcfg = mcfg.with_context(tc.integration, s.layers(), s.dim());
    }
    let mut params = ModelParams::init(&mcfg, tc.seed)?;
    if let Some(p) = &cfg.data.vectors {
        let table = load_static_vectors(&read_text(p)?, vocab, mcfg.word_dim, tc.seed)
            .map_err(|e| CliError::in_file(p, e))?;
        params.word_embed = table.matrix;
    }

    eprintln!(
        "training on {} sentences, {} dev, integration {}, {} parameters",
        train_set.len(),
        dev_set.len(),
        tc.integration,
        params.parameter_count()
    );
    let (best, history) = train_with_callback(params, &train_set, &dev_set, store.as_ref(), tc, |e| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  dev P {:.2} R {:.2} F0.5 {:.2}  {:.1}s",
            e.epoch,
            e.train_loss,
            100.0 * e.dev.precision,
            100.0 * e.dev.recall,
            100.0 * e.dev.f,
            e.seconds
        )
    })?;
    eprintln!("best epoch {}", history.best_epoch);

    let mut manifest: BTreeMap<String, String> = prepared
        .input_digests()?
        .into_iter()
        .map(|(k, v)| (format!("input:{k}"), v))
        .collect();
    manifest.insert("seed".into(), tc.seed.to_string());
    manifest.insert("best_epoch".into(), history.best_epoch.to_string());
    if let Some(p) = cfg.store.as_deref().filter(|_| store.is_some()) {
        let bytes = std::fs::read(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
        manifest.insert("store".into(), sha256_hex(&bytes));
    }
    let ck = Checkpoint {
        params: best,
        vocab: vocab.clone(),
        train: tc.clone(),
        manifest,
    };
    if let Some(dir) = cfg.checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    }
    save_checkpoint(&ck, &cfg.checkpoint).map_err(|e| CliError::in_file(&cfg.checkpoint, e))?;
    write_file(&cfg.history_path(), history.to_tsv())?;
    eprintln!("wrote {}", cfg.checkpoint.display());
    Ok(())
}

/// A checkpoint with the store its integration needs.
pub struct Model {
    pub name: String,
    pub ck: Checkpoint,
    pub store: Option<ContextualVectorStore>,
}

impl Model {
    pub fn load(
        cfg: &RunConfig,
        over: &Overrides,
        path: &Path,
        store: Option<&Path>,
    ) -> CliResult<Self> {
        if !path.is_file() {
            return Err(CliError::input(format!("{}: no such file", path.display())));
        }
        let ck = load_checkpoint(path).map_err(|e| {
            let mut err = CliError::in_file(path, e);
            err.code = CliError::MISMATCH;
            err
        })?;
        let mode = ck.params.integration();
        if let Some(asked) = over.integration.filter(|&m| m != mode) {
            return Err(CliError::mismatch(format!(
                "{}: checkpoint uses integration {mode}, not {asked}",
                path.display()
            )));
        }
        let store = match mode {
            Integration::None => None,
            _ => {
                let s = open_store(cfg, store)?;
                let c = &ck.params.config;
                if (s.layers(), s.dim()) != (c.context_layers, c.context_dim) {
                    return Err(CliError::mismatch(format!(
                        "store has {} layers of width {} but {} expects {} of width {}",
                        s.layers(),
                        s.dim(),
                        path.display(),
                        c.context_layers,
                        c.context_dim
                    )));
                }
                Some(s)
            }
        };
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Model { name, ck, store })
    }

    fn probabilities(&self, s: &Sentence) -> CliResult<(Vec<Label>, Vec<f64>)> {
        if let Some(store) = &self.store {
            store.check_coverage(std::slice::from_ref(s))?;
        }
        let probs = predict_probabilities(&self.ck.params, s, self.store.as_ref())?;
        let p: Vec<f64> = (0..probs.nrows()).map(|t| probs[[t, 1]]).collect();
        Ok((labels_from_distribution(&probs), p))
    }

    pub fn predict(&self, s: &Sentence) -> CliResult<Vec<Label>> {
        Ok(self.probabilities(s)?.0)
    }
}

/// Where `predict` reads sentences from.
pub enum PredictInput {
    Dataset(String),
    File(PathBuf),
}

pub fn predict(model: &Model, cfg: &RunConfig, input: &PredictInput) -> CliResult<String> {
    let sentences: Vec<Sentence> = match input {
        PredictInput::Dataset(name) => unique_sentences(&Prepared::open(&cfg.prepared)?.records(name)?),
        PredictInput::File(path) => {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            read_text(path)?
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    Sentence::from_line(format!("{stem}:{i}"), l)
                        .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), i + 1)))
                })
                .collect::<CliResult<_>>()?
        }
    };
    let mut out = String::new();
    for s in &sentences {
        let s = encode(s, &model.ck.vocab);
        let (labels, probs) = model.probabilities(&s)?;
        let _ = writeln!(out, "# {}", s.sid);
        for ((tok, label), p) in s.tokens.iter().zip(&labels).zip(&probs) {
            let _ = writeln!(out, "{}\t{}\t{p:.4}", tok.surface, label.as_str());
        }
        out.push('\n');
    }
    Ok(out)
}

/// Reads `predict` output back into labels per sentence id.
pub fn parse_predictions(path: &Path) -> CliResult<HashMap<String, Vec<Label>>> {
    let text = read_text(path)?;
    let mut out = HashMap::new();
    let mut current: Option<(String, Vec<Label>)> = None;
    for (i, line) in text.lines().enumerate() {
        let at = |msg: String| CliError::input(format!("{}:{}: {msg}", path.display(), i + 1));
        if let Some(sid) = line.strip_prefix("# ") {
            if let Some((k, v)) = current.replace((sid.trim().to_string(), Vec::new())) {
                out.insert(k, v);
            }
        } else if line.trim().is_empty() {
            if let Some((k, v)) = current.take() {
                out.insert(k, v);
            }
        } else {
            let (_, labels) = current.as_mut().ok_or_else(|| at("token line before any `# sid` line".into()))?;
            let field = line.split('\t').nth(1).ok_or_else(|| at("expected token<TAB>label".into()))?;
            labels.push(field.parse::<Label>().map_err(|e| at(e.to_string()))?);
        }
    }
    if let Some((k, v)) = current {
        out.insert(k, v);
    }
    Ok(out)
}

/// Where predicted labels come from.
pub enum Predictor<'a> {
    Model(&'a Model),
    File(&'a HashMap<String, Vec<Label>>),
}

impl Predictor<'_> {
    fn labels(&self, s: &Sentence) -> CliResult<Vec<Label>> {
        match self {
            Predictor::Model(m) => m.predict(s),
            Predictor::File(map) => {
                let labels = map
                    .get(&s.sid)
                    .cloned()
                    .ok_or_else(|| CliError::input(format!("no predictions for sentence {:?}", s.sid)))?;
                if labels.len() != s.len() {
                    return Err(CliError::input(format!(
                        "sentence {:?}: {} predictions for {} tokens",
                        s.sid,
                        labels.len(),
                        s.len()
                    )));
                }
                Ok(labels)
            }
        }
    }
}

/// Counts per report row: one row per dataset, or per dataset and annotator
/// when a dataset carries several annotation sets.
pub fn score_rows(
    predictor: &Predictor,
    prepared: &Prepared,
    datasets: &[String],
    annotator: Option<usize>,
) -> CliResult<Vec<(String, EvalCounts)>> {
    let mut rows = Vec::new();
    for name in datasets {
        let records = prepared.records(name)?;
        let mut by_annotator: BTreeMap<usize, Vec<&AnnotatedSentence>> = BTreeMap::new();
        for r in records.iter().filter(|r| annotator.map_or(true, |a| r.annotator == a)) {
            by_annotator.entry(r.annotator).or_default().push(r);
        }
        if by_annotator.is_empty() {
            return Err(CliError::config(format!("dataset {name:?} has no records for the selected annotator")));
        }
        let mut cache: HashMap<&str, Vec<Label>> = HashMap::new();
        let several = by_annotator.len() > 1;
        for (a, recs) in &by_annotator {
            let mut counts = EvalCounts::default();
            for r in recs {
                let s = &r.sentence;
                if !cache.contains_key(s.sid.as_str()) {
                    cache.insert(&s.sid, predictor.labels(s)?);
                }
                counts.add_sentence(&s.gold_labels, &cache[s.sid.as_str()], Some(&r.token_types()))?;
            }
            let row = if several { format!("{name}-{}", a + 1) } else { name.clone() };
            rows.push((row, counts));
        }
    }
    Ok(rows)
}

pub fn check_vocab(model: &Model, prepared: &Prepared) -> CliResult<()> {
    if model.ck.vocab != prepared.vocab {
        return Err(CliError::mismatch(format!(
            "checkpoint {} was trained with a different vocabulary than {}",
            model.name,
            prepared.dir.display()
        )));
    }
    Ok(())
}

pub fn typed_report(rows: &[(String, EvalCounts)], macro_avg: bool) -> TypedRecallReport {
    let counts: Vec<EvalCounts> = rows.iter().map(|(_, c)| c.clone()).collect();
    if macro_avg {
        recall_by_type_macro(&counts)
    } else {
        recall_by_type(&aggregate(&counts))
    }
}

pub fn evaluate_report(
    cfg: &RunConfig,
    predictor: &Predictor,
    prepared: &Prepared,
    datasets: &[String],
    annotator: Option<usize>,
    macro_avg: bool,
) -> CliResult<String> {
    let rows = score_rows(predictor, prepared, datasets, annotator)?;
    let scores: Vec<(String, _)> = rows.iter().map(|(n, c)| (n.clone(), f_beta(c, 0.5))).collect();
    Ok(render_report(&scores, Some(&typed_report(&rows, macro_avg)), cfg.format))
}

/// Scores for every model and a side-by-side typed recall table.
pub fn analyze_report(
    cfg: &RunConfig,
    models: &[Model],
    prepared: &Prepared,
    datasets: &[String],
    annotator: Option<usize>,
    macro_avg: bool,
) -> CliResult<String> {
    let mut scores = Vec::new();
    let mut typed = Vec::new();
    for m in models {
        check_vocab(m, prepared)?;
        let rows = score_rows(&Predictor::Model(m), prepared, datasets, annotator)?;
        scores.extend(rows.iter().map(|(n, c)| (format!("{}/{n}", m.name), f_beta(c, 0.5))));
        typed.push((m.name.clone(), typed_report(&rows, macro_avg)));
    }
    let mut out = render_scores(&scores, cfg.format);
    out.push('\n');
    out.push_str(&render_typed_comparison(&typed, cfg.format)?);
    Ok(out)
}

/// Writes a pseudo store covering every prepared dataset.
pub fn write_pseudo_store(cfg: &RunConfig, out: &Path, layers: usize, dim: usize) -> CliResult<()> {
    let prepared = Prepared::open(&cfg.prepared)?;
    let mut sentences = Vec::new();
    for (name, _) in cfg.datasets() {
        sentences.extend(unique_sentences(&prepared.records(&name)?));
    }
    let store = pseudo_store(&sentences, layers, dim, cfg.train.seed)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    }
    store.write(out).map_err(|e| CliError::in_file(out, e))
}
