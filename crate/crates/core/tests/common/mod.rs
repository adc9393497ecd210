//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use ged_core::corpus::{build_vocab, encode};
use ged_core::edit_analysis::{substitution_cost, Edit};
use ged_core::embeddings::{pseudo_store, ContextualVectorStore};
use ged_core::model::{forward_batch, loss_parts, LossParts};
use ged_core::{Integration, Label, ModelConfig, ModelParams, Sentence, Vocab};

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

// ---------------------------------------------------------------- alignment

/// Minimum alignment cost by enumerating every step sequence, pruned only
/// by the best complete path found so far.
pub fn exhaustive_min_cost(orig: &[String], corr: &[String]) -> f64 {
    fn go(o: &[String], c: &[String], i: usize, j: usize, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == o.len() && j == c.len() {
            *best = acc;
            return;
        }
        if i < o.len() && j < c.len() {
            let step = if o[i] == c[j] { 0.0 } else { substitution_cost(&o[i], &c[j]) };
            go(o, c, i + 1, j + 1, acc + step, best);
        }
        if i + 1 < o.len()
            && j + 1 < c.len()
            && o[i] != o[i + 1]
            && o[i] == c[j + 1]
            && o[i + 1] == c[j]
        {
            go(o, c, i + 2, j + 2, acc + 1.0, best);
        }
        if i < o.len() {
            go(o, c, i + 1, j, acc + 1.0, best);
        }
        if j < c.len() {
            go(o, c, i, j + 1, acc + 1.0, best);
        }
    }
    let mut best = f64::INFINITY;
    go(orig, corr, 0, 0, 0.0, &mut best);
    best
}

/// Applies edits right to left.
pub fn apply_edits(orig: &[String], edits: &[Edit]) -> Vec<String> {
    let mut out = orig.to_vec();
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| std::cmp::Reverse((e.o_start, e.o_end)));
    for e in sorted {
        out.splice(e.o_start..e.o_end, e.c_tokens.iter().cloned());
    }
    out
}

// ---------------------------------------------------------------- optimizer

/// Scalar AdaDelta written directly from the update equations.
pub fn adadelta_reference(grads: &[f64], x0: f64, lr: f64, rho: f64, eps: f64) -> Vec<f64> {
    let (mut x, mut acc_g, mut acc_dx) = (x0, 0.0f64, 0.0f64);
    let mut xs = Vec::with_capacity(grads.len());
    for &g in grads {
        acc_g = rho * acc_g + (1.0 - rho) * g.powi(2);
        let rms_dx = (acc_dx + eps).sqrt();
        let rms_g = (acc_g + eps).sqrt();
        let dx = -(rms_dx / rms_g) * g;
        acc_dx = rho * acc_dx + (1.0 - rho) * dx.powi(2);
        x += lr * dx;
        xs.push(x);
    }
    xs
}

// ---------------------------------------------------------------- metrics

/// Published `(P, R, F0.5)` triples; P and R are the inputs.
pub const PUBLISHED_TRIPLES: [(&str, f64, f64, f64); 36] = [
    ("prior-semisup CoNLL-1", 17.68, 19.07, 17.86),
    ("prior-semisup CoNLL-2", 27.6, 21.18, 25.88),
    ("prior-semisup FCE", 58.88, 28.92, 48.48),
    ("prior-auxlm CoNLL-1", 23.28, 18.01, 21.87),
    ("prior-auxlm CoNLL-2", 35.28, 19.42, 30.13),
    ("prior-auxlm FCE", 60.67, 28.08, 49.11),
    ("Baseline CoNLL-1", 20.82, 16.31, 19.73),
    ("Baseline CoNLL-2", 31.91, 17.81, 27.55),
    ("Baseline FCE", 46.55, 30.58, 42.15),
    ("Flair CoNLL-1", 29.53, 17.11, 25.79),
    ("Flair CoNLL-2", 44.12, 18.22, 34.35),
    ("Flair FCE", 58.36, 31.72, 49.97),
    ("ELMo CoNLL-1", 30.83, 23.90, 29.14),
    ("ELMo CoNLL-2", 46.66, 25.77, 40.15),
    ("ELMo FCE", 58.50, 38.01, 52.81),
    ("BERT-base CoNLL-1", 37.62, 29.65, 35.70),
    ("BERT-base CoNLL-2", 53.52, 30.05, 46.29),
    ("BERT-base FCE", 64.96, 38.89, 57.28),
    ("BERT-large CoNLL-1", 38.04, 33.12, 36.94),
    ("BERT-large CoNLL-2", 51.40, 31.89, 45.80),
    ("BERT-large FCE", 64.51, 38.79, 56.96),
    ("Baseline JFLEG", 72.84, 22.83, 50.65),
    ("Baseline ST-dev", 31.31, 21.18, 28.58),
    ("Baseline ST-test", 40.05, 34.99, 38.93),
    ("Flair JFLEG", 75.65, 25.26, 54.08),
    ("Flair ST-dev", 41.80, 24.10, 36.45),
    ("Flair ST-test", 53.40, 39.84, 50.00),
    ("ELMo JFLEG", 74.95, 31.21, 58.54),
    ("ELMo ST-dev", 47.90, 30.41, 42.96),
    ("ELMo ST-test", 58.72, 47.79, 56.15),
    ("BERT-base JFLEG", 79.51, 32.94, 61.98),
    ("BERT-base ST-dev", 53.31, 35.65, 48.50),
    ("BERT-base ST-test", 66.47, 54.11, 63.57),
    ("BERT-large JFLEG", 76.47, 34.52, 61.52),
    ("BERT-large ST-dev", 51.54, 36.90, 47.75),
    ("BERT-large ST-test", 63.35, 54.10, 61.26),
];

// ---------------------------------------------------------------- network

/// Five short sentences whose 16 distinct words give a 20-entry vocabulary.
pub fn tiny_corpus() -> (Vec<Sentence>, Vocab) {
    let lines = [
        ("t0", "the cat sat", vec![]),
        ("t1", "a dog ran home", vec![3]),
        ("t2", "she like apples", vec![1]),
        ("t3", "we goes to school", vec![1, 2]),
        ("t4", "he eat the apples", vec![1]),
    ];
    let raw: Vec<Sentence> = lines
        .iter()
        .map(|(sid, l, bad)| {
            let mut s = Sentence::from_line(*sid, l).unwrap();
            for &b in bad {
                s.gold_labels[b] = Label::Incorrect;
            }
            s
        })
        .collect();
    let vocab = build_vocab(&raw, 1).unwrap();
    assert_eq!(vocab.word_count(), 20);
    (raw.iter().map(|s| encode(s, &vocab)).collect(), vocab)
}

pub fn tiny_setup(
    mode: Integration,
    layers: usize,
    seed: u64,
) -> (ModelParams, Vec<Sentence>, Option<ContextualVectorStore>) {
    let (corpus, vocab) = tiny_corpus();
    let cfg = ModelConfig::tiny(vocab.word_count(), vocab.char_count()).with_context(mode, layers, 3);
    let mut params = ModelParams::init(&cfg, seed).unwrap();
    if let Some(m) = params.mix.as_mut() {
        // move away from the symmetric starting point
        for (k, s) in m.scalars.iter_mut().enumerate() {
            *s = 0.3 * k as f64 - 0.2;
        }
        m.scale = 1.3;
    }
    let store = (mode != Integration::None).then(|| pseudo_store(&corpus, layers, 3, seed).unwrap());
    (params, corpus, store)
}

/// Token-mean batch loss with dropout masks drawn from `seed`.
pub fn batch_loss_only(
    params: &ModelParams,
    batch: &[&Sentence],
    store: Option<&ContextualVectorStore>,
    gamma: f64,
    seed: u64,
) -> f64 {
    let acts = forward_batch(params, batch, store, true, seed).unwrap();
    let mut parts = LossParts::default();
    for (a, s) in acts.iter().zip(batch) {
        parts.add(&loss_parts(a, &s.gold_labels).unwrap());
    }
    parts.total(gamma)
}

/// Relative error with a small absolute floor in the denominator.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

pub struct GradReport {
    pub worst: f64,
    pub worst_at: String,
    pub checked: usize,
}

/// Compares analytic gradients with central differences (step 1e-5) on
/// every entry of every parameter array.
pub fn finite_difference_check(
    params: &ModelParams,
    analytic: &ModelParams,
    batch: &[&Sentence],
    store: Option<&ContextualVectorStore>,
    gamma: f64,
    seed: u64,
) -> GradReport {
    let h = 1e-5;
    let mut probe = params.clone();
    let grads: Vec<(String, Vec<f64>)> = analytic
        .arrays()
        .into_iter()
        .map(|(n, a)| (n, a.to_vec()))
        .collect();
    let mut report = GradReport {
        worst: 0.0,
        worst_at: String::new(),
        checked: 0,
    };
    for (k, (name, g)) in grads.iter().enumerate() {
        for idx in 0..g.len() {
            let orig = probe.arrays()[k].1[idx];
            set_entry(&mut probe, k, idx, orig + h);
            let up = batch_loss_only(&probe, batch, store, gamma, seed);
            set_entry(&mut probe, k, idx, orig - h);
            let down = batch_loss_only(&probe, batch, store, gamma, seed);
            set_entry(&mut probe, k, idx, orig);
            let numeric = (up - down) / (2.0 * h);
            let e = rel_err(g[idx], numeric);
            report.checked += 1;
            if e > report.worst {
                report.worst = e;
                report.worst_at = format!("{name}[{idx}] analytic {} numeric {numeric}", g[idx]);
            }
        }
    }
    report
}

fn set_entry(p: &mut ModelParams, k: usize, idx: usize, v: f64) {
    p.arrays_mut()[k].1[idx] = v;
}
