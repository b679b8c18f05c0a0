//! Deterministic stand-in for a contextual encoder.
//!
//! Each token's vector is drawn from a generator seeded by a hash of the
//! lowercased token text, so identical tokens share a vector across contexts
//! and runs. Row 0 is the mean of the token rows. Output goes through the
//! same `PDEMB1` writer and alignment sidecar as real exports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::EmbeddingSequence;
use crate::error::{Error, Result};
use crate::segmentation::{tokenize_and_align, Context, TokenAlignment};

/// Rows per context including row 0, matching the usual encoder limit.
pub const DEFAULT_MAX_ROWS: usize = 128;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FakeEncoder {
    pub dim: usize,
    pub seed: u64,
    pub max_rows: usize,
}

impl FakeEncoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        Ok(FakeEncoder {
            dim,
            seed,
            max_rows: DEFAULT_MAX_ROWS,
        })
    }

    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(token.to_lowercase().as_bytes()) ^ self.seed);
        (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Embeds one context. Tokens beyond `max_rows - 1` are dropped with a
    /// warning; the alignment is truncated to match.
    pub fn encode(&self, context: &Context) -> Result<(EmbeddingSequence, TokenAlignment)> {
        let full = tokenize_and_align(context);
        let cap = self.max_rows.saturating_sub(1);
        let alignment = if full.n_tokens() > cap {
            log::warn!("{}: {} tokens truncated to {cap}", context.context_id, full.n_tokens());
            full.truncated(cap)
        } else {
            full
        };
        let chars: Vec<char> = context.text.chars().collect();
        let token_rows: Vec<Vec<f64>> = alignment
            .token_spans
            .iter()
            .map(|&(s, e)| self.token_vector(&chars[s..e].iter().collect::<String>()))
            .collect();
        let mut row0 = vec![0.0; self.dim];
        for r in &token_rows {
            for (a, b) in row0.iter_mut().zip(r) {
                *a += b;
            }
        }
        if !token_rows.is_empty() {
            let n = token_rows.len() as f64;
            row0.iter_mut().for_each(|v| *v /= n);
        }
        let mut rows = Vec::with_capacity(token_rows.len() + 1);
        rows.push(row0);
        rows.extend(token_rows);
        Ok((
            EmbeddingSequence::new(context.context_id.clone(), self.dim, rows)?,
            alignment,
        ))
    }

    pub fn encode_all(&self, contexts: &[Context]) -> Result<(Vec<EmbeddingSequence>, Vec<TokenAlignment>)> {
        let mut seqs = Vec::with_capacity(contexts.len());
        let mut aligns = Vec::with_capacity(contexts.len());
        for c in contexts {
            let (s, a) = self.encode(c)?;
            seqs.push(s);
            aligns.push(a);
        }
        Ok((seqs, aligns))
    }
}
