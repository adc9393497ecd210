//! Grammatical error detection toolkit.
//!
//! The crate covers the whole detection pipeline:
//!
//! - [`corpus`]: M2 and parallel-text ingestion, span-to-token label
//!   conversion, vocabularies.
//! - [`edit_analysis`]: weighted token alignment, edit extraction and
//!   rule-based error typing over a 16-type POS taxonomy.
//! - [`embeddings`]: trainable tables, word-vector text files, the binary
//!   contextual vector store and learned layer mixing.
//! - [`model`]: the multi-task bi-LSTM labeler with hand-written gradients.
//! - [`training`]: AdaDelta, batching, early stopping and checkpoints.
//! - [`evaluation`]: token-level P/R/F-beta and per-type recall reports.

pub mod corpus;
pub mod edit_analysis;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod synthetic;
pub mod training;

pub use corpus::{AnnotatedSentence, Label, Pos, Sentence, Token, Vocab};
pub use edit_analysis::{Edit, ErrorType, Operation};
pub use embeddings::{ContextualVectorStore, LayerMixParams, ProviderKind};
pub use error::{Error, Result};
pub use evaluation::{EvalCounts, Prf};
pub use model::{Integration, ModelConfig, ModelParams};
pub use training::TrainConfig;



