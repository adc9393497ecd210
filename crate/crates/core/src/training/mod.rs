//! AdaDelta optimization with early stopping on development F0.5.

mod adadelta;
mod batch;
mod checkpoint;

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Sentence};
use crate::embeddings::ContextualVectorStore;
use crate::error::{Error, Result};
use crate::evaluation::{f_beta, EvalCounts, Prf};
use crate::model::{predict, Integration, ModelParams};

pub use adadelta::{adadelta_scalar, adadelta_step, AdaDeltaState};
pub use batch::{batch_loss, make_batches, Batch};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the two language-model losses.
    pub gamma: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub integration: Integration,
    pub annotator: usize,
    /// Stop as soon as development F0.5 reaches this value.
    pub target_dev_f: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.1,
            batch_size: 32,
            learning_rate: 1.0,
            patience: 7,
            rho: 0.95,
            epsilon: 1e-6,
            max_epochs: 100,
            seed: 0,
            integration: Integration::None,
            annotator: 0,
            target_dev_f: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return fail(format!("rho {} outside (0, 1)", self.rho));
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon {} must be positive", self.epsilon));
        }
        if !(self.gamma >= 0.0) {
            return fail(format!("gamma {} must be non-negative", self.gamma));
        }
        if !(self.learning_rate > 0.0) {
            return fail(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience counter: strict improvement resets it, anything else counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: Option<f64>,
    pub best_epoch: usize,
    pub bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: None,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, score: f64) -> StopDecision {
        if self.best.map_or(true, |b| score > b) {
            self.best = Some(score);
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            return StopDecision::Improved;
        }
        self.bad_epochs += 1;
        if self.bad_epochs >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev: Prf,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\ttrain_loss\tdev_P\tdev_R\tdev_F05\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.4}\t{:.4}\t{:.4}",
                e.epoch, e.train_loss, e.dev.precision, e.dev.recall, e.dev.f
            );
        }
        out
    }
}

/// Predicted labels for every sentence, dropout off.
pub fn predict_corpus(
    params: &ModelParams,
    sentences: &[Sentence],
    store: Option<&ContextualVectorStore>,
) -> Result<Vec<Vec<Label>>> {
    sentences.iter().map(|s| predict(params, s, store)).collect()
}

/// Confusion counts of the model against each sentence's gold labels.
pub fn evaluate_model(
    params: &ModelParams,
    sentences: &[Sentence],
    store: Option<&ContextualVectorStore>,
) -> Result<EvalCounts> {
    let mut counts = EvalCounts::default();
    for s in sentences {
        counts.add_sentence(&s.gold_labels, &predict(params, s, store)?, None)?;
    }
    Ok(counts)
}

fn check_inputs(
    params: &ModelParams,
    train: &[Sentence],
    dev: &[Sentence],
    store: Option<&ContextualVectorStore>,
    cfg: &TrainConfig,
) -> Result<()> {
    cfg.validate()?;
    if cfg.integration != params.integration() {
        return Err(Error::Config(format!(
            "training configured for integration {} but the model uses {}",
            cfg.integration,
            params.integration()
        )));
    }
    if train.is_empty() {
        return Err(Error::Validation("training corpus is empty".into()));
    }
    for s in train.iter().chain(dev) {
        s.validate()?;
    }
    if params.integration() != Integration::None {
        let store = store.ok_or_else(|| {
            Error::Config("contextual integration requires a vector store".into())
        })?;
        store.check_coverage(train)?;
        store.check_coverage(dev)?;
    }
    Ok(())
}

/// Trains from `params` and returns the best-epoch parameters.
pub fn train(
    params: ModelParams,
    train_set: &[Sentence],
    dev_set: &[Sentence],
    store: Option<&ContextualVectorStore>,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainHistory)> {
    train_with_callback(params, train_set, dev_set, store, cfg, |_| {})
}

/// [`train`] with a hook called after every epoch.
pub fn train_with_callback(
    mut params: ModelParams,
    train_set: &[Sentence],
    dev_set: &[Sentence],
    store: Option<&ContextualVectorStore>,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, TrainHistory)> {
    check_inputs(&params, train_set, dev_set, store, cfg)?;
    let store = store.filter(|_| params.integration() != Integration::None);
    let mut state = AdaDeltaState::new(&params);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut history = TrainHistory::default();
    let mut best = params.clone();

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        let epoch_seed = cfg.seed.wrapping_add(epoch as u64);
        let batches = make_batches(train_set, cfg.batch_size, epoch_seed)?;
        let mut dropout_seeds = ChaCha8Rng::seed_from_u64(epoch_seed.rotate_left(32) ^ 0x6472_6f70);
        let (mut loss_sum, mut tokens) = (0.0, 0usize);
        for b in &batches {
            let (loss, grads) = batch_loss(&params, b, train_set, store, cfg.gamma, dropout_seeds.gen())?;
            adadelta_step(&mut state, &grads, &mut params, cfg.learning_rate, cfg.rho, cfg.epsilon)?;
            loss_sum += loss * b.tokens() as f64;
            tokens += b.tokens();
        }
        let dev = f_beta(&evaluate_model(&params, dev_set, store)?, 0.5);
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / tokens as f64,
            dev,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        history.epochs.push(record);
        let decision = stopper.update(epoch, dev.f);
        if decision == StopDecision::Improved {
            best = params.clone();
            history.best_epoch = epoch;
        }
        let reached = cfg.target_dev_f.is_some_and(|t| dev.f >= t);
        if decision == StopDecision::Stop || reached {
            break;
        }
    }
    Ok((best, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(trace: &[f64], patience: usize) -> (usize, usize) {
        let mut es = EarlyStopping::new(patience);
        for (i, &f) in trace.iter().enumerate() {
            if es.update(i + 1, f) == StopDecision::Stop {
                return (i + 1, es.best_epoch);
            }
        }
        (trace.len(), es.best_epoch)
    }

    #[test]
    fn stopping_trace() {
        let mut trace = vec![0.30, 0.31];
        trace.extend([0.31; 10]);
        assert_eq!(run(&trace, 7), (9, 2));
        assert_eq!(run(&[0.2, 0.3, 0.1, 0.5], 0), (3, 2));
        assert_eq!(run(&[0.2, 0.3, 0.4], 0), (3, 3));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            rho: 1.0,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn batch_sizes_and_padding() {
        let corpus: Vec<Sentence> = (0..70)
            .map(|i| Sentence::from_line(i.to_string(), &"w ".repeat(1 + i % 5)).unwrap())
            .collect();
        let b = make_batches(&corpus, 32, 4).unwrap();
        assert_eq!(b.iter().map(Batch::len).collect::<Vec<_>>(), vec![32, 32, 6]);
        assert_eq!(b, make_batches(&corpus, 32, 4).unwrap());
        let two = vec![
            Sentence::from_line("a", "x y z").unwrap(),
            Sentence::from_line("b", "x y z u v").unwrap(),
        ];
        let pb = Batch::from_indices(&two, vec![0, 1]);
        assert_eq!(pb.width(), 5);
        assert_eq!(pb.lengths(), vec![3, 5]);
    }
}
