//! Binary store of frozen per-token contextual vectors.
//!
//! Layout:
//!
//! ```text
//! CTXSTORE 1 <L> <d> <provider_kind>\n
//! repeated, sorted by (sid, token index):
//!     u32 sid byte length | sid (UTF-8) | u32 token index | L*d f32
//! u32 record count
//! u32 CRC-32 (IEEE) of the record bytes
//! ```
//!
//! All integers and floats are little-endian.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::corpus::Sentence;
use crate::embeddings::{mix_layers, LayerMixParams, ProviderKind};
use crate::error::{Error, Result};

const MAGIC: &str = "CTXSTORE";
const VERSION: u32 = 1;

/// Immutable map from `(sid, token index)` to `L` layers of `d` floats.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualVectorStore {
    kind: ProviderKind,
    layers: usize,
    dim: usize,
    entries: BTreeMap<(String, u32), Vec<f32>>,
}

/// Collects entries before freezing them into a store.
#[derive(Debug)]
pub struct StoreBuilder {
    store: ContextualVectorStore,
}

impl StoreBuilder {
    pub fn new(kind: ProviderKind, layers: usize, dim: usize) -> Result<Self> {
        if layers == 0 || dim == 0 {
            return Err(Error::Config("store layers and dim must be at least 1".into()));
        }
        if let Some((l, d)) = kind.expected_shape() {
            if (l, d) != (layers, dim) {
                return Err(Error::Config(format!(
                    "{kind} vectors are {l}x{d}, not {layers}x{dim}"
                )));
            }
        }
        Ok(StoreBuilder {
            store: ContextualVectorStore {
                kind,
                layers,
                dim,
                entries: BTreeMap::new(),
            },
        })
    }

    /// Adds one token's layers, flattened layer-major (`L * d` values).
    pub fn insert(&mut self, sid: &str, idx: usize, values: Vec<f32>) -> Result<()> {
        let expected = self.store.layers * self.store.dim;
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "entry ({sid:?}, {idx}) has {} values, expected {expected}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "entry ({sid:?}, {idx}) value {bad} is not finite"
            )));
        }
        let idx = u32::try_from(idx).map_err(|_| Error::Shape("token index overflow".into()))?;
        self.store.entries.insert((sid.to_string(), idx), values);
        Ok(())
    }

    pub fn build(self) -> ContextualVectorStore {
        self.store
    }
}

impl ContextualVectorStore {
    pub fn kind(&self) -> ProviderKind {
        self.kind
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All `L * d` values of an entry, layer-major.
    pub fn get(&self, sid: &str, idx: usize) -> Result<&[f32]> {
        u32::try_from(idx)
            .ok()
            .and_then(|i| self.entries.get(&(sid.to_string(), i)))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Lookup {
                sid: sid.to_string(),
                idx,
            })
    }

    /// The entry's layers widened to f64.
    pub fn layers_f64(&self, sid: &str, idx: usize) -> Result<Vec<Vec<f64>>> {
        let flat = self.get(sid, idx)?;
        Ok(flat
            .chunks(self.dim)
            .map(|c| c.iter().map(|&v| f64::from(v)).collect())
            .collect())
    }

    /// Every `(sid, idx)` of `sentences` absent from the store.
    pub fn missing(&self, sentences: &[Sentence]) -> Vec<(String, usize)> {
        sentences
            .iter()
            .flat_map(|s| (0..s.len()).map(move |i| (s.sid.clone(), i)))
            .filter(|(sid, i)| self.get(sid, *i).is_err())
            .collect()
    }

    /// Fails on the first token of `sentences` without a stored vector.
    pub fn check_coverage(&self, sentences: &[Sentence]) -> Result<()> {
        match self.missing(sentences).into_iter().next() {
            Some((sid, idx)) => Err(Error::Lookup { sid, idx }),
            None => Ok(()),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize, &[f32])> {
        self.entries
            .iter()
            .map(|((sid, idx), v)| (sid.as_str(), *idx as usize, v.as_slice()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!(
            "{MAGIC} {VERSION} {} {} {}\n",
            self.layers, self.dim, self.kind
        )
        .into_bytes();
        let mut payload = Vec::new();
        for ((sid, idx), values) in &self.entries {
            payload.extend_from_slice(&(sid.len() as u32).to_le_bytes());
            payload.extend_from_slice(sid.as_bytes());
            payload.extend_from_slice(&idx.to_le_bytes());
            for v in values {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&payload);
        out.extend_from_slice(&payload);
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format(None, "missing store header line"))?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| Error::format(None, "store header is not UTF-8"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 5 || fields[0] != MAGIC {
            return Err(Error::format(None, format!("bad store header {header:?}")));
        }
        if fields[1] != VERSION.to_string() {
            return Err(Error::format(
                None,
                format!("unsupported store version {}", fields[1]),
            ));
        }
        let layers: usize = fields[2]
            .parse()
            .map_err(|_| Error::format(None, "bad layer count"))?;
        let dim: usize = fields[3]
            .parse()
            .map_err(|_| Error::format(None, "bad dimension"))?;
        let kind: ProviderKind = fields[4].parse()?;
        let mut builder = StoreBuilder::new(kind, layers, dim)?;

        let body = &bytes[nl + 1..];
        if body.len() < 8 {
            return Err(Error::format(None, "store is truncated"));
        }
        let (payload, trailer) = body.split_at(body.len() - 8);
        let count = u32::from_le_bytes(trailer[..4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(trailer[4..].try_into().unwrap());
        if crc32fast::hash(payload) != crc {
            return Err(Error::format(None, "store checksum mismatch"));
        }

        let mut cur = payload;
        let take = |cur: &mut &[u8], n: usize| -> Result<Vec<u8>> {
            if cur.len() < n {
                return Err(Error::format(None, "store record is truncated"));
            }
            let (head, tail) = cur.split_at(n);
            *cur = tail;
            Ok(head.to_vec())
        };
        let width = layers * dim;
        let mut last: Option<(String, u32)> = None;
        let mut seen = 0usize;
        while !cur.is_empty() {
            let sid_len = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
            let sid = String::from_utf8(take(&mut cur, sid_len)?)
                .map_err(|_| Error::format(None, "sid is not UTF-8"))?;
            let idx = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap());
            let raw = take(&mut cur, width * 4)?;
            let values: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let key = (sid, idx);
            if last.as_ref().is_some_and(|prev| *prev >= key) {
                return Err(Error::format(
                    None,
                    format!("records not sorted at ({:?}, {})", key.0, key.1),
                ));
            }
            builder.insert(&key.0, key.1 as usize, values)?;
            last = Some(key);
            seen += 1;
        }
        if seen != count {
            return Err(Error::format(
                None,
                format!("store declares {count} records but holds {seen}"),
            ));
        }
        Ok(builder.build())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Writes via a temporary file and rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

/// The contextual vector for one token: the stored vector when `L = 1`,
/// otherwise the learned mix of its layers.
pub fn get_context_vector(
    store: &ContextualVectorStore,
    mix: Option<&LayerMixParams>,
    sid: &str,
    idx: usize,
) -> Result<Vec<f64>> {
    let layers = store.layers_f64(sid, idx)?;
    if layers.len() == 1 {
        return Ok(layers.into_iter().next().unwrap());
    }
    let mix = mix.ok_or_else(|| {
        Error::Config(format!(
            "store has {} layers but no layer mixing parameters were given",
            layers.len()
        ))
    })?;
    let refs: Vec<&[f64]> = layers.iter().map(Vec::as_slice).collect();
    mix_layers(&refs, mix)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_store(layers: usize) -> ContextualVectorStore {
        let mut b = StoreBuilder::new(ProviderKind::Pseudo, layers, 2).unwrap();
        for (sid, n) in [("s1", 2), ("s0", 3)] {
            for i in 0..n {
                let v: Vec<f32> = (0..layers * 2).map(|k| (i * 10 + k) as f32 + 0.5).collect();
                b.insert(sid, i, v).unwrap();
            }
        }
        b.build()
    }

    #[test]
    fn round_trip_bytes() {
        let s = small_store(3);
        let bytes = s.to_bytes();
        assert!(bytes.starts_with(b"CTXSTORE 1 3 2 Pseudo\n"));
        let back = ContextualVectorStore::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn single_layer_passthrough() {
        let s = small_store(1);
        let v = get_context_vector(&s, None, "s0", 1).unwrap();
        assert_eq!(v, vec![10.5, 11.5]);
    }

    #[test]
    fn three_layers_uniform_mix() {
        let s = small_store(3);
        let v = get_context_vector(&s, Some(&LayerMixParams::new(3)), "s0", 0).unwrap();
        // layers (0.5, 1.5), (2.5, 3.5), (4.5, 5.5)
        assert!((v[0] - 2.5).abs() < 1e-12 && (v[1] - 3.5).abs() < 1e-12);
        assert!(get_context_vector(&s, None, "s0", 0).is_err());
    }

    #[test]
    fn missing_key() {
        let s = small_store(1);
        let err = get_context_vector(&s, None, "s9", 4).unwrap_err();
        assert!(matches!(err, Error::Lookup { ref sid, idx: 4 } if sid == "s9"));
    }

    #[test]
    fn corrupt_and_truncated() {
        let bytes = small_store(1).to_bytes();
        let mut bad = bytes.clone();
        let n = bad.len();
        bad[n - 20] ^= 0xff;
        assert!(ContextualVectorStore::from_bytes(&bad).is_err());
        assert!(ContextualVectorStore::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn provider_dims_enforced() {
        assert!(StoreBuilder::new(ProviderKind::Elmo, 3, 1024).is_ok());
        assert!(StoreBuilder::new(ProviderKind::Elmo, 1, 1024).is_err());
        let mut b = StoreBuilder::new(ProviderKind::Pseudo, 1, 2).unwrap();
        assert!(b.insert("a", 0, vec![1.0]).is_err());
        assert!(b.insert("a", 0, vec![f32::NAN, 1.0]).is_err());
    }

    #[test]
    fn coverage() {
        let s = small_store(1);
        let sents = vec![
            Sentence::from_line("s0", "a b c").unwrap(),
            Sentence::from_line("s1", "a b c").unwrap(),
        ];
        assert_eq!(s.missing(&sents), vec![("s1".to_string(), 2)]);
        assert!(s.check_coverage(&sents[..1]).is_ok());
    }
}
