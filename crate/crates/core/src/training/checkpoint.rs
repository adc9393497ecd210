//! Binary checkpoint container.
//!
//! Layout: 8-byte magic `GEDCKPT\0`, u32 format version, u64 header length,
//! a JSON header (configs, vocabulary, manifest, array names and shapes),
//! every array as little-endian f64 in header order, then a CRC-32 of all
//! preceding bytes. All integers are little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::training::TrainConfig;

const MAGIC: &[u8; 8] = b"GEDCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub train: TrainConfig,
    /// Free-form provenance, e.g. input file digests.
    pub manifest: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    train: TrainConfig,
    vocab: Vocab,
    manifest: BTreeMap<String, String>,
    arrays: Vec<(String, Vec<usize>)>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            model: self.params.config.clone(),
            train: self.train.clone(),
            vocab: self.vocab.clone(),
            manifest: self.manifest.clone(),
            arrays: self.params.shapes(),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::Checkpoint(format!("cannot encode header: {e}")))?;
        let mut out = Vec::with_capacity(json.len() + 8 * self.params.parameter_count() + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, a) in self.params.arrays() {
            for v in a {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: String| Error::Checkpoint(msg);
        if bytes.len() < MAGIC.len() + 4 + 8 + 4 {
            return Err(bad("file too short".into()));
        }
        if &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!(
                "format version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let (body, crc) = bytes.split_at(bytes.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
            return Err(bad("checksum mismatch (truncated or corrupted file)".into()));
        }
        let header_len = u64::from_le_bytes(body[12..20].try_into().unwrap());
        let header_end = usize::try_from(header_len)
            .ok()
            .and_then(|l| l.checked_add(20))
            .filter(|&e| e <= body.len())
            .ok_or_else(|| bad("header length exceeds file".into()))?;
        let header: Header = serde_json::from_slice(&body[20..header_end])
            .map_err(|e| bad(format!("malformed header: {e}")))?;
        header
            .model
            .validate()
            .map_err(|e| bad(format!("invalid model configuration: {e}")))?;
        if header.vocab.word_count() != header.model.word_vocab
            || header.vocab.char_count() != header.model.char_vocab
        {
            return Err(bad("vocabulary size disagrees with the model configuration".into()));
        }
        let mut params = ModelParams::init(&header.model, 0)?.zeros_like();
        let expected = params.shapes();
        if expected != header.arrays {
            let diff = expected
                .iter()
                .zip(&header.arrays)
                .find(|(a, b)| a != b)
                .map(|(a, b)| format!("expected {} {:?}, found {} {:?}", a.0, a.1, b.0, b.1))
                .unwrap_or_else(|| {
                    format!("expected {} arrays, found {}", expected.len(), header.arrays.len())
                });
            return Err(bad(format!("array layout mismatch: {diff}")));
        }
        let data = &body[header_end..];
        if data.len() != 8 * params.parameter_count() {
            return Err(bad(format!(
                "expected {} parameter bytes, found {}",
                8 * params.parameter_count(),
                data.len()
            )));
        }
        let mut chunks = data.chunks_exact(8);
        for (_, a) in params.arrays_mut() {
            for v in a.iter_mut() {
                *v = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
            }
        }
        Ok(Checkpoint {
            params,
            vocab: header.vocab,
            train: header.train,
            manifest: header.manifest,
        })
    }
}

/// Writes atomically via a sibling temporary file.
pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = checkpoint.to_bytes()?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
