//! Sentence-level forward and backward passes.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, Sentence, Vocab};
use crate::embeddings::{mix_layers, mix_layers_backward, ContextualVectorStore};
use crate::error::{Error, Result};
use crate::model::lstm::{lstm_backward, lstm_forward, LstmTrace};
use crate::model::{Integration, ModelParams};

/// Character bi-LSTM activations for one token.
#[derive(Debug, Clone)]
pub struct CharActivations {
    pub char_ids: Vec<usize>,
    /// Embedded characters after input dropout, `(k × char_dim)`.
    pub inputs: Array2<f64>,
    pub fwd: LstmTrace,
    /// Trace of the backward LSTM over the reversed characters.
    pub bwd: LstmTrace,
    pub input_mask: Option<Array2<f64>>,
    pub output_mask: Option<Array1<f64>>,
}

/// Everything the backward pass needs from one sentence.
#[derive(Debug, Clone)]
pub struct ForwardActivations {
    pub sid: String,
    pub word_ids: Vec<usize>,
    pub chars: Vec<CharActivations>,
    /// Word embedding ++ char summary [++ context], before dropout.
    pub input_embed: Array2<f64>,
    /// Per-token contextual vectors, when integration is on.
    pub context_vec: Option<Array2<f64>>,
    /// Raw store layers per token, kept when they are mixed.
    pub context_layers: Option<Vec<Vec<Vec<f64>>>>,
    pub input_mask: Option<Array2<f64>>,
    pub fwd: LstmTrace,
    /// Backward LSTM trace in reversed time order.
    pub bwd: LstmTrace,
    /// `[h_fwd, h_bwd]` per token, before dropout.
    pub word_hidden: Array2<f64>,
    pub output_mask: Option<Array2<f64>>,
    /// Dropped-out hidden states ++ [context].
    pub lstm_output: Array2<f64>,
    pub hidden: Array2<f64>,
    pub label_distribution: Array2<f64>,
    pub label_log_probs: Array2<f64>,
    pub lm_fwd_hidden: Array2<f64>,
    pub lm_bwd_hidden: Array2<f64>,
    pub lm_fwd_logits: Array2<f64>,
    pub lm_bwd_logits: Array2<f64>,
    pub lm_fwd_log_probs: Array2<f64>,
    pub lm_bwd_log_probs: Array2<f64>,
}

impl ForwardActivations {
    pub fn len(&self) -> usize {
        self.word_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word_ids.is_empty()
    }

    /// Next-word targets, EOS after the last token.
    pub fn lm_fwd_targets(&self) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .map(|t| if t + 1 < n { self.word_ids[t + 1] } else { Vocab::EOS })
            .collect()
    }

    /// Previous-word targets, BOS before the first token.
    pub fn lm_bwd_targets(&self) -> Vec<usize> {
        (0..self.len())
            .map(|t| if t > 0 { self.word_ids[t - 1] } else { Vocab::BOS })
            .collect()
    }
}

/// Summed negative log-likelihoods of one or more sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub detect: f64,
    pub lm_fwd: f64,
    pub lm_bwd: f64,
    pub tokens: usize,
}

impl LossParts {
    pub fn add(&mut self, other: &LossParts) {
        self.detect += other.detect;
        self.lm_fwd += other.lm_fwd;
        self.lm_bwd += other.lm_bwd;
        self.tokens += other.tokens;
    }

    /// Token-mean combined loss.
    pub fn total(&self, gamma: f64) -> f64 {
        if self.tokens == 0 {
            return 0.0;
        }
        (self.detect + gamma * (self.lm_fwd + self.lm_bwd)) / self.tokens as f64
    }
}

fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

fn affine(x: ArrayView2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut y = x.dot(&w.t());
    y += b;
    y
}

fn dropout_mask(rows: usize, cols: usize, keep: f64, rng: &mut impl Rng) -> Array2<f64> {
    let scale = 1.0 / keep;
    Array2::from_shape_fn((rows, cols), |_| if rng.gen::<f64>() < keep { scale } else { 0.0 })
}

fn reversed(a: ArrayView2<f64>) -> Array2<f64> {
    a.slice(s![..;-1, ..]).to_owned()
}

fn check_sentence(params: &ModelParams, sentence: &Sentence) -> Result<()> {
    if sentence.is_empty() {
        return Err(Error::Validation(format!(
            "sentence {:?} has no tokens",
            sentence.sid
        )));
    }
    let c = &params.config;
    for (i, tok) in sentence.tokens.iter().enumerate() {
        if tok.word_id >= c.word_vocab {
            return Err(Error::Shape(format!(
                "sentence {:?} token {i}: word id {} outside vocabulary of {}",
                sentence.sid, tok.word_id, c.word_vocab
            )));
        }
        if tok.char_ids.is_empty() {
            return Err(Error::Validation(format!(
                "sentence {:?} token {i} is not encoded",
                sentence.sid
            )));
        }
        if let Some(&bad) = tok.char_ids.iter().find(|&&id| id >= c.char_vocab) {
            return Err(Error::Shape(format!(
                "sentence {:?} token {i}: char id {bad} outside vocabulary of {}",
                sentence.sid, c.char_vocab
            )));
        }
    }
    Ok(())
}

type Context = (Array2<f64>, Option<Vec<Vec<Vec<f64>>>>);

fn fetch_context(
    params: &ModelParams,
    sentence: &Sentence,
    store: Option<&ContextualVectorStore>,
) -> Result<Option<Context>> {
    let c = &params.config;
    if c.integration == Integration::None {
        return Ok(None);
    }
    let store = store.ok_or_else(|| {
        Error::Config(format!(
            "integration {} needs a contextual vector store",
            c.integration
        ))
    })?;
    if store.layers() != c.context_layers || store.dim() != c.context_dim {
        return Err(Error::Shape(format!(
            "store holds {}x{} vectors, model expects {}x{}",
            store.layers(),
            store.dim(),
            c.context_layers,
            c.context_dim
        )));
    }
    let n = sentence.len();
    let mut ctx = Array2::zeros((n, c.context_dim));
    let mut kept = Vec::new();
    for t in 0..n {
        let layers = store.layers_f64(&sentence.sid, t)?;
        let row = match &params.mix {
            Some(mix) => {
                let refs: Vec<&[f64]> = layers.iter().map(Vec::as_slice).collect();
                mix_layers(&refs, mix)?
            }
            None => layers[0].clone(),
        };
        ctx.row_mut(t).assign(&Array1::from(row));
        if params.mix.is_some() {
            kept.push(layers);
        }
    }
    Ok(Some((ctx, params.mix.is_some().then_some(kept))))
}

fn char_forward(
    params: &ModelParams,
    char_ids: &[usize],
    rng: Option<&mut ChaCha8Rng>,
) -> (CharActivations, Array1<f64>) {
    let c = &params.config;
    let mut inputs = params.char_embed.select(Axis(0), char_ids);
    let (mut input_mask, mut output_mask) = (None, None);
    let mut rng = rng;
    if let Some(r) = rng.as_deref_mut() {
        let m = dropout_mask(inputs.nrows(), inputs.ncols(), c.keep_prob, r);
        inputs *= &m;
        input_mask = Some(m);
    }
    let fwd = lstm_forward(&params.char_fwd, inputs.view());
    let bwd = lstm_forward(&params.char_bwd, reversed(inputs.view()).view());
    let last = inputs.nrows() - 1;
    let mut rep = concatenate![Axis(0), fwd.h.row(last), bwd.h.row(last)];
    if let Some(r) = rng {
        let m = dropout_mask(1, rep.len(), c.keep_prob, r).row(0).to_owned();
        rep *= &m;
        output_mask = Some(m);
    }
    (
        CharActivations {
            char_ids: char_ids.to_vec(),
            inputs,
            fwd,
            bwd,
            input_mask,
            output_mask,
        },
        rep,
    )
}

fn forward_sentence(
    params: &ModelParams,
    sentence: &Sentence,
    store: Option<&ContextualVectorStore>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardActivations> {
    check_sentence(params, sentence)?;
    let c = &params.config;
    let n = sentence.len();
    let word_ids = sentence.word_ids();
    let context = fetch_context(params, sentence, store)?;

    let mut chars = Vec::with_capacity(n);
    let mut char_rep = Array2::zeros((n, 2 * c.char_hidden));
    for (t, tok) in sentence.tokens.iter().enumerate() {
        let char_rng = if c.char_dropout { rng.as_deref_mut() } else { None };
        let (acts, rep) = char_forward(params, &tok.char_ids, char_rng);
        char_rep.row_mut(t).assign(&rep);
        chars.push(acts);
    }

    let words = params.word_embed.select(Axis(0), &word_ids);
    let input_embed = match (&context, c.integration) {
        (Some((ctx, _)), Integration::Input) => concatenate![Axis(1), words, char_rep, *ctx],
        _ => concatenate![Axis(1), words, char_rep],
    };
    let mut x = input_embed.clone();
    let input_mask = rng.as_deref_mut().map(|r| {
        let m = dropout_mask(n, x.ncols(), c.keep_prob, r);
        x *= &m;
        m
    });

    let fwd = lstm_forward(&params.word_fwd, x.view());
    let bwd = lstm_forward(&params.word_bwd, reversed(x.view()).view());
    let word_hidden = concatenate![Axis(1), fwd.h, reversed(bwd.h.view())];
    let mut h = word_hidden.clone();
    let output_mask = rng.as_deref_mut().map(|r| {
        let m = dropout_mask(n, h.ncols(), c.keep_prob, r);
        h *= &m;
        m
    });

    let lstm_output = match (&context, c.integration) {
        (Some((ctx, _)), Integration::Output) => concatenate![Axis(1), h, *ctx],
        _ => h.clone(),
    };
    let hidden = affine(lstm_output.view(), &params.hidden.w, &params.hidden.b).mapv(f64::tanh);
    let det_logits = affine(hidden.view(), &params.detect.w, &params.detect.b);
    let label_log_probs = log_softmax_rows(&det_logits);
    let label_distribution = label_log_probs.mapv(f64::exp);

    let hw = c.word_hidden;
    let lm_fwd_hidden = affine(
        h.slice(s![.., ..hw]),
        &params.lm_fwd_proj.w,
        &params.lm_fwd_proj.b,
    )
    .mapv(f64::tanh);
    let lm_bwd_hidden = affine(
        h.slice(s![.., hw..]),
        &params.lm_bwd_proj.w,
        &params.lm_bwd_proj.b,
    )
    .mapv(f64::tanh);
    let lm_fwd_logits = affine(lm_fwd_hidden.view(), &params.lm_fwd_head.w, &params.lm_fwd_head.b);
    let lm_bwd_logits = affine(lm_bwd_hidden.view(), &params.lm_bwd_head.w, &params.lm_bwd_head.b);
    let lm_fwd_log_probs = log_softmax_rows(&lm_fwd_logits);
    let lm_bwd_log_probs = log_softmax_rows(&lm_bwd_logits);

    let (context_vec, context_layers) = match context {
        Some((ctx, layers)) => (Some(ctx), layers),
        None => (None, None),
    };
    Ok(ForwardActivations {
        sid: sentence.sid.clone(),
        word_ids,
        chars,
        input_embed,
        context_vec,
        context_layers,
        input_mask,
        fwd,
        bwd,
        word_hidden,
        output_mask,
        lstm_output,
        hidden,
        label_distribution,
        label_log_probs,
        lm_fwd_hidden,
        lm_bwd_hidden,
        lm_fwd_logits,
        lm_bwd_logits,
        lm_fwd_log_probs,
        lm_bwd_log_probs,
    })
}

/// Runs one sentence. With `rng` set, dropout masks are drawn from it.
pub fn forward(
    params: &ModelParams,
    sentence: &Sentence,
    store: Option<&ContextualVectorStore>,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<ForwardActivations> {
    forward_sentence(params, sentence, store, rng)
}

/// Runs a batch; in training mode all masks come from one stream seeded by `seed`.
pub fn forward_batch(
    params: &ModelParams,
    batch: &[&Sentence],
    store: Option<&ContextualVectorStore>,
    training: bool,
    seed: u64,
) -> Result<Vec<ForwardActivations>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    batch
        .iter()
        .map(|s| forward_sentence(params, s, store, training.then_some(&mut rng)))
        .collect()
}

fn check_gold(acts: &ForwardActivations, gold: &[Label]) -> Result<()> {
    if gold.len() != acts.len() {
        return Err(Error::Shape(format!(
            "sentence {:?}: {} labels for {} tokens",
            acts.sid,
            gold.len(),
            acts.len()
        )));
    }
    Ok(())
}

fn class(label: Label) -> usize {
    match label {
        Label::Correct => 0,
        Label::Incorrect => 1,
    }
}

/// Summed negative log-likelihoods of one sentence.
pub fn loss_parts(acts: &ForwardActivations, gold: &[Label]) -> Result<LossParts> {
    check_gold(acts, gold)?;
    let mut parts = LossParts {
        tokens: acts.len(),
        ..LossParts::default()
    };
    for (t, &g) in gold.iter().enumerate() {
        parts.detect -= acts.label_log_probs[[t, class(g)]];
    }
    for (t, y) in acts.lm_fwd_targets().into_iter().enumerate() {
        parts.lm_fwd -= acts.lm_fwd_log_probs[[t, y]];
    }
    for (t, y) in acts.lm_bwd_targets().into_iter().enumerate() {
        parts.lm_bwd -= acts.lm_bwd_log_probs[[t, y]];
    }
    Ok(parts)
}

/// `L_detect + gamma (L_fw + L_bw)`, each a token mean.
pub fn compute_loss(acts: &ForwardActivations, gold: &[Label], gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Config(format!("gamma {gamma} must be non-negative")));
    }
    Ok(loss_parts(acts, gold)?.total(gamma))
}

fn softmax_minus_onehot(log_probs: &Array2<f64>, targets: &[usize], weight: f64) -> Array2<f64> {
    let mut d = log_probs.mapv(f64::exp);
    for (t, &y) in targets.iter().enumerate() {
        d[[t, y]] -= 1.0;
    }
    d *= weight;
    d
}

fn tanh_backward(d: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    d * &y.mapv(|v| 1.0 - v * v)
}

/// Adds the gradients of `weight * (summed sentence loss)` to `grads`.
pub fn accumulate_gradients(
    params: &ModelParams,
    acts: &ForwardActivations,
    gold: &[Label],
    gamma: f64,
    weight: f64,
    grads: &mut ModelParams,
) -> Result<()> {
    check_gold(acts, gold)?;
    if grads.config != params.config || acts.lstm_output.ncols() != params.hidden.w.ncols() {
        return Err(Error::Shape("activations, parameters and gradients disagree".into()));
    }
    let c = &params.config;
    let n = acts.len();
    let hw = c.word_hidden;

    let targets: Vec<usize> = gold.iter().map(|&g| class(g)).collect();
    let d_det = softmax_minus_onehot(&acts.label_log_probs, &targets, weight);
    grads.detect.w += &d_det.t().dot(&acts.hidden);
    grads.detect.b += &d_det.sum_axis(Axis(0));
    let d_hidden = tanh_backward(&d_det.dot(&params.detect.w), &acts.hidden);
    grads.hidden.w += &d_hidden.t().dot(&acts.lstm_output);
    grads.hidden.b += &d_hidden.sum_axis(Axis(0));
    let d_out = d_hidden.dot(&params.hidden.w);

    let mut d_h = d_out.slice(s![.., ..2 * hw]).to_owned();
    let mut d_ctx = (c.integration == Integration::Output)
        .then(|| d_out.slice(s![.., 2 * hw..]).to_owned());

    if gamma != 0.0 {
        let h = match &acts.output_mask {
            Some(m) => &acts.word_hidden * m,
            None => acts.word_hidden.clone(),
        };
        let heads = [
            (
                &acts.lm_fwd_log_probs,
                acts.lm_fwd_targets(),
                &acts.lm_fwd_hidden,
                &params.lm_fwd_head,
                &params.lm_fwd_proj,
                0,
            ),
            (
                &acts.lm_bwd_log_probs,
                acts.lm_bwd_targets(),
                &acts.lm_bwd_hidden,
                &params.lm_bwd_head,
                &params.lm_bwd_proj,
                hw,
            ),
        ];
        for (i, (log_probs, tgt, z, head, proj, off)) in heads.into_iter().enumerate() {
            let d_logits = softmax_minus_onehot(log_probs, &tgt, weight * gamma);
            let (g_head, g_proj) = if i == 0 {
                (&mut grads.lm_fwd_head, &mut grads.lm_fwd_proj)
            } else {
                (&mut grads.lm_bwd_head, &mut grads.lm_bwd_proj)
            };
            g_head.w += &d_logits.t().dot(z);
            g_head.b += &d_logits.sum_axis(Axis(0));
            let d_z = tanh_backward(&d_logits.dot(&head.w), z);
            g_proj.w += &d_z.t().dot(&h.slice(s![.., off..off + hw]));
            g_proj.b += &d_z.sum_axis(Axis(0));
            let mut part = d_h.slice_mut(s![.., off..off + hw]);
            part += &d_z.dot(&proj.w);
        }
    }

    if let Some(m) = &acts.output_mask {
        d_h *= m;
    }
    let x = match &acts.input_mask {
        Some(m) => &acts.input_embed * m,
        None => acts.input_embed.clone(),
    };
    let mut d_x = lstm_backward(
        &params.word_fwd,
        x.view(),
        &acts.fwd,
        d_h.slice(s![.., ..hw]),
        &mut grads.word_fwd,
    );
    let d_x_rev = lstm_backward(
        &params.word_bwd,
        reversed(x.view()).view(),
        &acts.bwd,
        reversed(d_h.slice(s![.., hw..])).view(),
        &mut grads.word_bwd,
    );
    d_x += &reversed(d_x_rev.view());
    if let Some(m) = &acts.input_mask {
        d_x *= m;
    }

    let wd = c.word_dim;
    let ch = c.char_hidden;
    for (t, &id) in acts.word_ids.iter().enumerate() {
        if id != Vocab::PAD {
            let mut row = grads.word_embed.row_mut(id);
            row += &d_x.slice(s![t, ..wd]);
        }
    }
    if c.integration == Integration::Input {
        d_ctx = Some(d_x.slice(s![.., wd + 2 * ch..]).to_owned());
    }

    for (t, ca) in acts.chars.iter().enumerate() {
        let mut d_rep = d_x.slice(s![t, wd..wd + 2 * ch]).to_owned();
        if let Some(m) = &ca.output_mask {
            d_rep *= m;
        }
        let k = ca.char_ids.len();
        let mut d_hf = Array2::zeros((k, ch));
        d_hf.row_mut(k - 1).assign(&d_rep.slice(s![..ch]));
        let mut d_hb = Array2::zeros((k, ch));
        d_hb.row_mut(k - 1).assign(&d_rep.slice(s![ch..]));
        let mut d_in =
            lstm_backward(&params.char_fwd, ca.inputs.view(), &ca.fwd, d_hf.view(), &mut grads.char_fwd);
        let d_in_rev = lstm_backward(
            &params.char_bwd,
            reversed(ca.inputs.view()).view(),
            &ca.bwd,
            d_hb.view(),
            &mut grads.char_bwd,
        );
        d_in += &reversed(d_in_rev.view());
        if let Some(m) = &ca.input_mask {
            d_in *= m;
        }
        for (j, &cid) in ca.char_ids.iter().enumerate() {
            if cid != Vocab::PAD {
                let mut row = grads.char_embed.row_mut(cid);
                row += &d_in.row(j);
            }
        }
    }

    if let (Some(d_ctx), Some(layers), Some(mix)) = (&d_ctx, &acts.context_layers, &params.mix) {
        let g = grads
            .mix
            .as_mut()
            .ok_or_else(|| Error::Shape("gradient structure lacks mixing parameters".into()))?;
        for t in 0..n {
            let refs: Vec<&[f64]> = layers[t].iter().map(Vec::as_slice).collect();
            let d_row = d_ctx.row(t).to_vec();
            mix_layers_backward(&refs, mix, &d_row, &mut g.scalars, &mut g.scale)?;
        }
    }
    Ok(())
}

/// Exact gradients of [`compute_loss`] for one sentence.
pub fn backward(
    params: &ModelParams,
    acts: &ForwardActivations,
    gold: &[Label],
    gamma: f64,
) -> Result<ModelParams> {
    let mut grads = params.zeros_like();
    accumulate_gradients(params, acts, gold, gamma, 1.0 / acts.len() as f64, &mut grads)?;
    Ok(grads)
}

/// Token-mean loss over a batch and its gradients, dropout on.
pub fn batch_loss_and_gradients(
    params: &ModelParams,
    batch: &[&Sentence],
    store: Option<&ContextualVectorStore>,
    gamma: f64,
    seed: u64,
) -> Result<(f64, ModelParams)> {
    let acts = forward_batch(params, batch, store, true, seed)?;
    let mut parts = LossParts::default();
    for (a, s) in acts.iter().zip(batch) {
        parts.add(&loss_parts(a, &s.gold_labels)?);
    }
    let mut grads = params.zeros_like();
    if parts.tokens == 0 {
        return Ok((0.0, grads));
    }
    let weight = 1.0 / parts.tokens as f64;
    for (a, s) in acts.iter().zip(batch) {
        accumulate_gradients(params, a, &s.gold_labels, gamma, weight, &mut grads)?;
    }
    Ok((parts.total(gamma), grads))
}

/// Per-token `(P(Correct), P(Incorrect))`, no dropout.
pub fn predict_probabilities(
    params: &ModelParams,
    sentence: &Sentence,
    store: Option<&ContextualVectorStore>,
) -> Result<Array2<f64>> {
    Ok(forward_sentence(params, sentence, store, None)?.label_distribution)
}

/// `Incorrect` iff its probability exceeds one half.
pub fn predict(
    params: &ModelParams,
    sentence: &Sentence,
    store: Option<&ContextualVectorStore>,
) -> Result<Vec<Label>> {
    let probs = predict_probabilities(params, sentence, store)?;
    Ok(labels_from_distribution(&probs))
}

pub fn labels_from_distribution(probs: &Array2<f64>) -> Vec<Label> {
    probs
        .rows()
        .into_iter()
        .map(|r| if r[1] > 0.5 { Label::Incorrect } else { Label::Correct })
        .collect()
}
