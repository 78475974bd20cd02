//! Deterministic offline provider backends.
//!
//! The embedder hashes character trigrams into `dim` signed buckets and
//! L2-normalizes; the generator replays task lines it finds in the prompt;
//! the judge maps embedding cosine into `[0, 1]`. All three are pure
//! functions of their inputs and the seed.

use crate::error::{Error, Result};

use super::{EmbeddingVector, MatchJudge, TextEmbedder, TextGenerator};

/// Character n-gram width used by the feature hasher.
const NGRAM: usize = 3;

/// Seeded feature-hashing text embedder.
#[derive(Debug, Clone)]
pub struct OfflineEmbedder {
    seed: u64,
    dim: usize,
}

impl OfflineEmbedder {
    pub fn new(seed: u64, dim: usize) -> OfflineEmbedder {
        OfflineEmbedder { seed, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// FNV-1a over the gram bytes, seeded, then finalized with a splitmix64
/// avalanche. Hand-rolled so the hash is pinned across platforms and
/// toolchain versions.
fn hash_gram(seed: u64, gram: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in gram.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    h
}

impl TextEmbedder for OfflineEmbedder {
    fn embed_text(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::invalid_input("cannot embed empty text"));
        }
        let chars: Vec<char> = text.chars().collect();
        let mut buckets = vec![0.0f64; self.dim];
        let mut push = |gram: &str| {
            let h = hash_gram(self.seed, gram);
            let idx = ((h >> 1) % self.dim as u64) as usize;
            let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
            buckets[idx] += sign;
        };
        if chars.len() < NGRAM {
            push(text);
        } else {
            for window in chars.windows(NGRAM) {
                push(&window.iter().collect::<String>());
            }
        }
        // Signed hashing can cancel to the zero vector on adversarial input;
        // fall back to a single whole-text gram so the norm stays positive.
        if buckets.iter().all(|v| *v == 0.0) {
            let h = hash_gram(self.seed ^ 0x5bd1_e995, text);
            buckets[((h >> 1) % self.dim as u64) as usize] = 1.0;
        }
        EmbeddingVector::normalized(buckets)
    }
}

/// Offline stand-in for the generation backend.
///
/// It scans the prompt for task-graph lines of the form
/// `id | title | description` (the DFS rendering) and answers with one
/// `title :: description` line per task, in prompt order.
#[derive(Debug, Clone)]
pub struct OfflineGenerator {
    #[allow(dead_code)]
    seed: u64,
}

impl OfflineGenerator {
    pub fn new(seed: u64) -> OfflineGenerator {
        OfflineGenerator { seed }
    }
}

impl TextGenerator for OfflineGenerator {
    fn complete(&self, prompt: &str) -> Result<String> {
        if prompt.trim().is_empty() {
            return Err(Error::invalid_input("cannot complete empty prompt"));
        }
        let mut lines = Vec::new();
        for line in prompt.lines() {
            let trimmed = line.trim_start();
            let parts: Vec<&str> = trimmed.splitn(3, " | ").collect();
            if parts.len() == 3 {
                lines.push(format!("{} :: {}", parts[1], parts[2]));
            }
        }
        if lines.is_empty() {
            return Err(Error::MalformedResponse(
                "offline generator found no task lines in prompt".to_string(),
            ));
        }
        Ok(lines.join("\n"))
    }
}

/// Offline judge: cosine of the two embeddings mapped to `[0, 1]` via
/// `(1 + cos) / 2`, which makes thresholding uniform across judges.
#[derive(Debug, Clone)]
pub struct OfflineJudge {
    embedder: OfflineEmbedder,
}

impl OfflineJudge {
    pub fn new(embedder: OfflineEmbedder) -> OfflineJudge {
        OfflineJudge { embedder }
    }
}

impl MatchJudge for OfflineJudge {
    fn judge_match(&self, generated: &str, reference: &str) -> Result<f64> {
        if generated.trim().is_empty() || reference.trim().is_empty() {
            return Err(Error::invalid_input("judge texts must be non-empty"));
        }
        let a = self.embedder.embed_text(generated)?;
        let b = self.embedder.embed_text(reference)?;
        let score = (1.0 + a.cosine(&b)) / 2.0;
        Ok(score.clamp(0.0, 1.0))
    }
}
