//! Token representations: trainable tables, word-vector text files, the
//! on-disk contextual vector store, layer mixing and a pseudo-contextual
//! provider for tests.

mod mix;
mod pseudo;
mod store;

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub use mix::{mix_layers, mix_layers_backward, LayerMixParams};
pub use pseudo::{pseudo_context, pseudo_store};
pub use store::{get_context_vector, ContextualVectorStore, StoreBuilder};

/// Where contextual vectors came from. Fixes the expected `(layers, dim)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProviderKind {
    BertBase,
    BertLarge,
    Elmo,
    Flair,
    Pseudo,
}

impl ProviderKind {
    /// `(layers, dim)` for the pretrained providers; `None` for `Pseudo`.
    pub fn expected_shape(self) -> Option<(usize, usize)> {
        match self {
            ProviderKind::BertBase => Some((1, 3072)),
            ProviderKind::BertLarge => Some((1, 4096)),
            ProviderKind::Elmo => Some((3, 1024)),
            ProviderKind::Flair => Some((1, 4096)),
            ProviderKind::Pseudo => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::BertBase => "BERT_base",
            ProviderKind::BertLarge => "BERT_large",
            ProviderKind::Elmo => "ELMo",
            ProviderKind::Flair => "Flair",
            ProviderKind::Pseudo => "Pseudo",
        }
    }
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "BERT_base" => Ok(ProviderKind::BertBase),
            "BERT_large" => Ok(ProviderKind::BertLarge),
            "ELMo" => Ok(ProviderKind::Elmo),
            "Flair" => Ok(ProviderKind::Flair),
            "Pseudo" => Ok(ProviderKind::Pseudo),
            other => Err(Error::Config(format!("unknown provider kind {other:?}"))),
        }
    }
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A `(rows × dim)` lookup table. The PAD row stays zero and never
/// receives gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: Array2<f64>,
    pub trainable: bool,
    pub pad_row: Option<usize>,
}

impl EmbeddingTable {
    pub fn uniform(rows: usize, dim: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut matrix = Array2::from_shape_fn((rows, dim), |_| rng.gen_range(-scale..=scale));
        if rows > Vocab::PAD {
            matrix.row_mut(Vocab::PAD).fill(0.0);
        }
        EmbeddingTable {
            matrix,
            trainable: true,
            pad_row: Some(Vocab::PAD),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Initializes a word table from a whitespace-delimited vector file.
///
/// An optional `<count> <dim>` header is accepted. Vocabulary words absent
/// from the file are drawn uniformly from `[-0.1, 0.1]` with `seed`; the
/// PAD row is zero. When a file lists several casings of a word, the
/// lowercase entry wins, otherwise the first one seen.
pub fn load_static_vectors(text: &str, vocab: &Vocab, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::uniform(vocab.word_count(), dim, 0.1, &mut rng);
    let mut filled = vec![false; vocab.word_count()];
    let mut exact = vec![false; vocab.word_count()];

    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if first {
            first = false;
            let header = (values.len() == 1 && word.parse::<usize>().is_ok())
                .then(|| values[0].parse::<usize>().ok())
                .flatten();
            if let Some(header_dim) = header {
                if header_dim != dim {
                    return Err(Error::format(
                        Some(line_no),
                        format!("header declares dim {header_dim}, expected {dim}"),
                    ));
                }
                continue;
            }
        }
        if values.len() != dim {
            return Err(Error::format(
                Some(line_no),
                format!("expected {dim} values for {word:?}, found {}", values.len()),
            ));
        }
        let key = word.to_lowercase();
        let Some(id) = vocab.lookup_lowercase(&key) else { continue };
        let is_exact = key == word;
        if filled[id] && (exact[id] || !is_exact) {
            continue;
        }
        let mut row = Vec::with_capacity(dim);
        for v in values {
            let x: f64 = v
                .parse()
                .map_err(|_| Error::format(Some(line_no), format!("bad number {v:?}")))?;
            row.push(x);
        }
        table
            .matrix
            .row_mut(id)
            .assign(&ndarray::Array1::from(row));
        filled[id] = true;
        exact[id] = is_exact;
    }
    table.matrix.row_mut(Vocab::PAD).fill(0.0);
    Ok(table)
}
