use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocab;
use crate::embeddings::{EmbeddingTable, LayerMixParams};
use crate::error::{Error, Result};
use crate::model::lstm::LstmParams;
use crate::model::{Integration, ModelConfig};

/// Affine map `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (input + output) as f64).sqrt();
        Dense {
            w: Array2::from_shape_fn((output, input), |_| rng.gen_range(-limit..=limit)),
            b: Array1::zeros(output),
        }
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Array2::zeros((output, input)),
            b: Array1::zeros(output),
        }
    }
}

/// Every trainable array of the labeler. Gradients and optimizer state
/// reuse this structure.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub word_embed: Array2<f64>,
    pub char_embed: Array2<f64>,
    pub char_fwd: LstmParams,
    pub char_bwd: LstmParams,
    pub word_fwd: LstmParams,
    pub word_bwd: LstmParams,
    /// Detection hidden layer over the (possibly context-extended) LSTM output.
    pub hidden: Dense,
    pub detect: Dense,
    pub lm_fwd_proj: Dense,
    pub lm_bwd_proj: Dense,
    pub lm_fwd_head: Dense,
    pub lm_bwd_head: Dense,
    /// Present when contextual vectors have more than one layer.
    pub mix: Option<LayerMixParams>,
}

impl ModelParams {
    /// Random initialization from `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = config;
        let word_embed = EmbeddingTable::uniform(c.word_vocab, c.word_dim, 0.1, &mut rng).matrix;
        let char_embed = EmbeddingTable::uniform(c.char_vocab, c.char_dim, 0.1, &mut rng).matrix;
        Ok(ModelParams {
            config: c.clone(),
            word_embed,
            char_embed,
            char_fwd: LstmParams::init(c.char_dim, c.char_hidden, &mut rng),
            char_bwd: LstmParams::init(c.char_dim, c.char_hidden, &mut rng),
            word_fwd: LstmParams::init(c.word_input_dim(), c.word_hidden, &mut rng),
            word_bwd: LstmParams::init(c.word_input_dim(), c.word_hidden, &mut rng),
            hidden: Dense::init(c.output_dim(), c.hidden_dim, &mut rng),
            detect: Dense::init(c.hidden_dim, 2, &mut rng),
            lm_fwd_proj: Dense::init(c.word_hidden, c.lm_hidden, &mut rng),
            lm_bwd_proj: Dense::init(c.word_hidden, c.lm_hidden, &mut rng),
            lm_fwd_head: Dense::init(c.lm_hidden, c.word_vocab, &mut rng),
            lm_bwd_head: Dense::init(c.lm_hidden, c.word_vocab, &mut rng),
            mix: c.uses_mix().then(|| LayerMixParams::new(c.context_layers)),
        })
    }

    /// Same shapes, all zeros (mix scalars and scale included).
    pub fn zeros_like(&self) -> Self {
        let c = &self.config;
        ModelParams {
            config: c.clone(),
            word_embed: Array2::zeros(self.word_embed.raw_dim()),
            char_embed: Array2::zeros(self.char_embed.raw_dim()),
            char_fwd: LstmParams::zeros(c.char_dim, c.char_hidden),
            char_bwd: LstmParams::zeros(c.char_dim, c.char_hidden),
            word_fwd: LstmParams::zeros(c.word_input_dim(), c.word_hidden),
            word_bwd: LstmParams::zeros(c.word_input_dim(), c.word_hidden),
            hidden: Dense::zeros(c.output_dim(), c.hidden_dim),
            detect: Dense::zeros(c.hidden_dim, 2),
            lm_fwd_proj: Dense::zeros(c.word_hidden, c.lm_hidden),
            lm_bwd_proj: Dense::zeros(c.word_hidden, c.lm_hidden),
            lm_fwd_head: Dense::zeros(c.lm_hidden, c.word_vocab),
            lm_bwd_head: Dense::zeros(c.lm_hidden, c.word_vocab),
            mix: self.mix.as_ref().map(|m| LayerMixParams {
                scalars: vec![0.0; m.layers()],
                scale: 0.0,
            }),
        }
    }

    /// Replaces the word table, e.g. with pretrained vectors.
    pub fn set_word_embeddings(&mut self, table: EmbeddingTable) -> Result<()> {
        if table.matrix.raw_dim() != self.word_embed.raw_dim() {
            return Err(Error::Shape(format!(
                "word table is {:?}, model expects {:?}",
                table.matrix.shape(),
                self.word_embed.shape()
            )));
        }
        self.word_embed = table.matrix;
        self.word_embed.row_mut(Vocab::PAD).fill(0.0);
        Ok(())
    }

    /// Named views of every trainable array in a fixed order.
    pub fn arrays(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        out.push(("word_embed".into(), slice(&self.word_embed)));
        out.push(("char_embed".into(), slice(&self.char_embed)));
        for (name, l) in self.lstms() {
            out.push((format!("{name}.w"), slice(&l.w)));
            out.push((format!("{name}.u"), slice(&l.u)));
            out.push((format!("{name}.b"), l.b.as_slice().expect("contiguous")));
        }
        for (name, d) in self.denses() {
            out.push((format!("{name}.w"), slice(&d.w)));
            out.push((format!("{name}.b"), d.b.as_slice().expect("contiguous")));
        }
        if let Some(m) = &self.mix {
            out.push(("mix.scalars".into(), m.scalars.as_slice()));
            out.push(("mix.scale".into(), std::slice::from_ref(&m.scale)));
        }
        out
    }

    /// Mutable counterpart of [`ModelParams::arrays`], same order.
    pub fn arrays_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        out.push(("word_embed".into(), slice_mut(&mut self.word_embed)));
        out.push(("char_embed".into(), slice_mut(&mut self.char_embed)));
        let lstms: [(&str, &mut LstmParams); 4] = [
            ("char_fwd", &mut self.char_fwd),
            ("char_bwd", &mut self.char_bwd),
            ("word_fwd", &mut self.word_fwd),
            ("word_bwd", &mut self.word_bwd),
        ];
        for (name, l) in lstms {
            out.push((format!("{name}.w"), slice_mut(&mut l.w)));
            out.push((format!("{name}.u"), slice_mut(&mut l.u)));
            out.push((format!("{name}.b"), l.b.as_slice_mut().expect("contiguous")));
        }
        let denses: [(&str, &mut Dense); 6] = [
            ("hidden", &mut self.hidden),
            ("detect", &mut self.detect),
            ("lm_fwd_proj", &mut self.lm_fwd_proj),
            ("lm_bwd_proj", &mut self.lm_bwd_proj),
            ("lm_fwd_head", &mut self.lm_fwd_head),
            ("lm_bwd_head", &mut self.lm_bwd_head),
        ];
        for (name, d) in denses {
            out.push((format!("{name}.w"), slice_mut(&mut d.w)));
            out.push((format!("{name}.b"), d.b.as_slice_mut().expect("contiguous")));
        }
        if let Some(m) = &mut self.mix {
            out.push(("mix.scalars".into(), m.scalars.as_mut_slice()));
            out.push(("mix.scale".into(), std::slice::from_mut(&mut m.scale)));
        }
        out
    }

    /// Shape of each array in [`ModelParams::arrays`] order.
    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = vec![
            ("word_embed".to_string(), self.word_embed.shape().to_vec()),
            ("char_embed".to_string(), self.char_embed.shape().to_vec()),
        ];
        for (name, l) in self.lstms() {
            out.push((format!("{name}.w"), l.w.shape().to_vec()));
            out.push((format!("{name}.u"), l.u.shape().to_vec()));
            out.push((format!("{name}.b"), l.b.shape().to_vec()));
        }
        for (name, d) in self.denses() {
            out.push((format!("{name}.w"), d.w.shape().to_vec()));
            out.push((format!("{name}.b"), d.b.shape().to_vec()));
        }
        if let Some(m) = &self.mix {
            out.push(("mix.scalars".into(), vec![m.layers()]));
            out.push(("mix.scale".into(), vec![1]));
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.arrays().iter().map(|(_, a)| a.len()).sum()
    }

    fn lstms(&self) -> [(&'static str, &LstmParams); 4] {
        [
            ("char_fwd", &self.char_fwd),
            ("char_bwd", &self.char_bwd),
            ("word_fwd", &self.word_fwd),
            ("word_bwd", &self.word_bwd),
        ]
    }

    fn denses(&self) -> [(&'static str, &Dense); 6] {
        [
            ("hidden", &self.hidden),
            ("detect", &self.detect),
            ("lm_fwd_proj", &self.lm_fwd_proj),
            ("lm_bwd_proj", &self.lm_bwd_proj),
            ("lm_fwd_head", &self.lm_fwd_head),
            ("lm_bwd_head", &self.lm_bwd_head),
        ]
    }

    /// Names of the arrays belonging to the language-model heads.
    pub fn is_lm_array(name: &str) -> bool {
        name.starts_with("lm_")
    }

    pub fn integration(&self) -> Integration {
        self.config.integration
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are stored contiguously")
}

fn slice_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are stored contiguously")
}
