//! Deterministic stand-in for a pretrained contextual encoder.
//!
//! Each value is drawn from a ChaCha stream seeded by a hash of
//! `(surface, position, layer, seed)`, so the same token at a different
//! position gets a different vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Sentence;
use crate::embeddings::{ContextualVectorStore, ProviderKind, StoreBuilder};
use crate::error::{Error, Result};

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn entry_seed(surface: &str, position: usize, layer: usize, seed: u64) -> u64 {
    let mut h = fnv1a(surface.as_bytes(), 0xcbf2_9ce4_8422_2325);
    for part in [position as u64, layer as u64, seed] {
        h = fnv1a(&part.to_le_bytes(), h);
    }
    h
}

/// Store entries `(sid, token index, L*d values)` for one sentence.
pub fn pseudo_context(
    sentence: &Sentence,
    layers: usize,
    dim: usize,
    seed: u64,
) -> Result<Vec<(String, usize, Vec<f32>)>> {
    if layers == 0 || dim == 0 {
        return Err(Error::Config("pseudo context needs layers and dim >= 1".into()));
    }
    Ok(sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(pos, tok)| {
            let mut values = Vec::with_capacity(layers * dim);
            for layer in 0..layers {
                let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(&tok.surface, pos, layer, seed));
                values.extend((0..dim).map(|_| rng.gen_range(-1.0f32..=1.0)));
            }
            (sentence.sid.clone(), pos, values)
        })
        .collect())
}

/// A `Pseudo` store covering every token of `sentences`.
pub fn pseudo_store(
    sentences: &[Sentence],
    layers: usize,
    dim: usize,
    seed: u64,
) -> Result<ContextualVectorStore> {
    let mut builder = StoreBuilder::new(ProviderKind::Pseudo, layers, dim)?;
    for s in sentences {
        for (sid, idx, values) in pseudo_context(s, layers, dim, seed)? {
            builder.insert(&sid, idx, values)?;
        }
    }
    Ok(builder.build())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let s = Sentence::from_line("a", "the cat sat").unwrap();
        assert_eq!(
            pseudo_context(&s, 2, 5, 9).unwrap(),
            pseudo_context(&s, 2, 5, 9).unwrap()
        );
    }

    #[test]
    fn depends_on_position_and_layer() {
        let s = Sentence::from_line("a", "dog dog").unwrap();
        let e = pseudo_context(&s, 2, 4, 1).unwrap();
        assert_ne!(e[0].2, e[1].2);
        assert_ne!(e[0].2[..4], e[0].2[4..]);
        assert!(e.iter().flat_map(|x| &x.2).all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn seeds_never_collide_on_a_corpus() {
        // 64 tokens, every vector under seed 1 compared with every vector under seed 2
        let words: Vec<String> = (0..64).map(|i| format!("w{}", i % 9)).collect();
        let s = Sentence::from_words("x", &words).unwrap();
        let a = pseudo_context(&s, 1, 8, 1).unwrap();
        let b = pseudo_context(&s, 1, 8, 2).unwrap();
        for x in &a {
            for y in &b {
                assert_ne!(x.2, y.2);
            }
        }
    }
}
