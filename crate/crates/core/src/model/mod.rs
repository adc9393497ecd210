//! The multi-task bi-LSTM sequence labeler.
//!
//! Per token the word embedding is concatenated with a character bi-LSTM
//! summary (and optionally a contextual vector) and fed to a word-level
//! bi-LSTM. Its output (optionally extended with the contextual vector)
//! goes through a tanh hidden layer and a 2-way softmax. Forward and
//! backward language-model heads predict the next and previous word from
//! the two LSTM directions.

mod lstm;
mod network;
mod params;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lstm::{lstm_backward, lstm_cell_forward, lstm_forward, LstmParams, LstmTrace};
pub use network::{
    accumulate_gradients, backward, batch_loss_and_gradients, compute_loss, forward,
    forward_batch, labels_from_distribution, loss_parts, predict, predict_probabilities,
    CharActivations, ForwardActivations, LossParts,
};
pub use params::{Dense, ModelParams};

/// Where contextual vectors join the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integration {
    None,
    /// Concatenated to the word-LSTM input.
    Input,
    /// Concatenated to the word-LSTM output.
    Output,
}

impl Integration {
    pub const ALL: [Integration; 3] = [Integration::None, Integration::Input, Integration::Output];

    pub fn as_str(self) -> &'static str {
        match self {
            Integration::None => "none",
            Integration::Input => "input",
            Integration::Output => "output",
        }
    }
}

impl FromStr for Integration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Integration::None),
            "input" => Ok(Integration::Input),
            "output" => Ok(Integration::Output),
            other => Err(Error::Config(format!("unknown integration mode {other:?}"))),
        }
    }
}

impl fmt::Display for Integration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Network dimensions and regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub word_vocab: usize,
    pub char_vocab: usize,
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub word_hidden: usize,
    /// Width of the tanh layer in front of the detection softmax.
    pub hidden_dim: usize,
    /// Width of the tanh projections in front of the LM softmaxes.
    pub lm_hidden: usize,
    pub integration: Integration,
    pub context_dim: usize,
    pub context_layers: usize,
    /// Dropout keep probability on word-LSTM inputs and outputs.
    pub keep_prob: f64,
    /// Also apply dropout to character-LSTM inputs and outputs.
    pub char_dropout: bool,
}

impl ModelConfig {
    /// Full-size defaults: 300/100 embeddings, 300/100 LSTMs, 50-d heads.
    pub fn new(word_vocab: usize, char_vocab: usize) -> Self {
        ModelConfig {
            word_vocab,
            char_vocab,
            word_dim: 300,
            char_dim: 100,
            char_hidden: 100,
            word_hidden: 300,
            hidden_dim: 50,
            lm_hidden: 50,
            integration: Integration::None,
            context_dim: 0,
            context_layers: 0,
            keep_prob: 0.5,
            char_dropout: false,
        }
    }

    /// A very small network for tests and gradient checks.
    pub fn tiny(word_vocab: usize, char_vocab: usize) -> Self {
        ModelConfig {
            word_dim: 8,
            char_dim: 4,
            char_hidden: 4,
            word_hidden: 8,
            hidden_dim: 6,
            lm_hidden: 6,
            ..Self::new(word_vocab, char_vocab)
        }
    }

    pub fn with_context(mut self, integration: Integration, layers: usize, dim: usize) -> Self {
        self.integration = integration;
        if integration == Integration::None {
            self.context_layers = 0;
            self.context_dim = 0;
        } else {
            self.context_layers = layers;
            self.context_dim = dim;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.word_vocab,
            self.char_vocab,
            self.word_dim,
            self.char_dim,
            self.char_hidden,
            self.word_hidden,
            self.hidden_dim,
            self.lm_hidden,
        ];
        if dims.contains(&0) {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if self.word_vocab < 4 || self.char_vocab < 4 {
            return Err(Error::Config("vocabularies must contain the four specials".into()));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!(
                "keep probability {} outside (0, 1]",
                self.keep_prob
            )));
        }
        if self.integration != Integration::None && (self.context_dim == 0 || self.context_layers == 0)
        {
            return Err(Error::Config(format!(
                "integration {} needs a context dimension and layer count",
                self.integration
            )));
        }
        Ok(())
    }

    fn context_width(&self, at: Integration) -> usize {
        if self.integration == at {
            self.context_dim
        } else {
            0
        }
    }

    pub fn word_input_dim(&self) -> usize {
        self.word_dim + 2 * self.char_hidden + self.context_width(Integration::Input)
    }

    pub fn output_dim(&self) -> usize {
        2 * self.word_hidden + self.context_width(Integration::Output)
    }

    pub fn uses_context(&self) -> bool {
        self.integration != Integration::None
    }

    pub fn uses_mix(&self) -> bool {
        self.uses_context() && self.context_layers > 1
    }
}
