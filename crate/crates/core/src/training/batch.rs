use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Sentence, Vocab};
use crate::embeddings::ContextualVectorStore;
use crate::error::{Error, Result};
use crate::model::{batch_loss_and_gradients, ModelParams};

/// A group of sentences padded to a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    /// Corpus positions of the rows.
    pub indices: Vec<usize>,
    /// Word ids, `PAD` beyond each sentence end.
    pub word_ids: Array2<usize>,
    /// True on real tokens.
    pub mask: Array2<bool>,
}

impl Batch {
    pub fn from_indices(corpus: &[Sentence], indices: Vec<usize>) -> Self {
        let width = indices.iter().map(|&i| corpus[i].len()).max().unwrap_or(0);
        let mut word_ids = Array2::from_elem((indices.len(), width), Vocab::PAD);
        let mut mask = Array2::from_elem((indices.len(), width), false);
        for (r, &i) in indices.iter().enumerate() {
            for (t, tok) in corpus[i].tokens.iter().enumerate() {
                word_ids[[r, t]] = tok.word_id;
                mask[[r, t]] = true;
            }
        }
        Batch {
            indices,
            word_ids,
            mask,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn width(&self) -> usize {
        self.word_ids.ncols()
    }

    /// Real-token count per row.
    pub fn lengths(&self) -> Vec<usize> {
        self.mask
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|&&m| m).count())
            .collect()
    }

    pub fn tokens(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Appends PAD-only columns up to `width`.
    pub fn pad_to(&mut self, width: usize) {
        if width <= self.width() {
            return;
        }
        let mut ids = Array2::from_elem((self.len(), width), Vocab::PAD);
        let mut mask = Array2::from_elem((self.len(), width), false);
        let w = self.width();
        ids.slice_mut(ndarray::s![.., ..w]).assign(&self.word_ids);
        mask.slice_mut(ndarray::s![.., ..w]).assign(&self.mask);
        self.word_ids = ids;
        self.mask = mask;
    }

    /// The rows' sentences, cut to the masked length and checked against the padded ids.
    pub fn sentences<'a>(&self, corpus: &'a [Sentence]) -> Result<Vec<&'a Sentence>> {
        let lengths = self.lengths();
        self.indices
            .iter()
            .enumerate()
            .map(|(r, &i)| {
                let s = corpus
                    .get(i)
                    .ok_or_else(|| Error::Shape(format!("batch row {r} points past the corpus")))?;
                let n = lengths[r];
                let consistent = s.len() == n
                    && (0..n).all(|t| self.word_ids[[r, t]] == s.tokens[t].word_id && self.mask[[r, t]])
                    && (n..self.width()).all(|t| self.word_ids[[r, t]] == Vocab::PAD);
                if !consistent {
                    return Err(Error::Shape(format!(
                        "batch row {r} does not match sentence {:?}",
                        s.sid
                    )));
                }
                Ok(s)
            })
            .collect()
    }
}

/// Shuffles with `seed` and cuts into batches of `batch_size` (last one smaller).
pub fn make_batches(corpus: &[Sentence], batch_size: usize, seed: u64) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Validation("cannot batch an empty corpus".into()));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(order
        .chunks(batch_size)
        .map(|c| Batch::from_indices(corpus, c.to_vec()))
        .collect())
}

/// Token-mean loss of a padded batch and its gradients; padding is ignored.
pub fn batch_loss(
    params: &ModelParams,
    batch: &Batch,
    corpus: &[Sentence],
    store: Option<&ContextualVectorStore>,
    gamma: f64,
    seed: u64,
) -> Result<(f64, ModelParams)> {
    let sentences = batch.sentences(corpus)?;
    batch_loss_and_gradients(params, &sentences, store, gamma, seed)
}
