//! Pluggable clients for text embedding, text generation, and match judging.
//!
//! Every backend exists in two flavors: an offline implementation that is a
//! pure function of its inputs and the configured seed, and an HTTP-backed
//! online implementation. The offline flavor makes the whole pipeline run
//! hermetically in tests; the env var `WKFORGE_OFFLINE=1` forces it globally.

mod http;
mod offline;

pub use http::{HttpProvider, HttpTransport, ReqwestTransport};
pub use offline::{OfflineEmbedder, OfflineGenerator, OfflineJudge};

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that forces offline mode regardless of configuration.
pub const OFFLINE_ENV_VAR: &str = "WKFORGE_OFFLINE";

/// Default embedding dimensionality for the offline backend.
pub const DEFAULT_EMBEDDING_DIM: usize = 256;

/// Default judge prompt. `{GENERATED}` and `{REFERENCE}` are replaced with
/// the two task texts; the judge backend must answer `1` (match) or `0`.
pub const DEFAULT_JUDGE_PROMPT: &str = "Decide whether the two task descriptions below refer to \
the same unit of work. Answer with exactly one character: 1 if they match, 0 if they do not.\n\
Task A: {GENERATED}\nTask B: {REFERENCE}";

/// A dense embedding with unit L2 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Wrap raw values and L2-normalize them.
    ///
    /// Errors if the input is empty or has zero norm.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid_input("embedding must not be empty"));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid_input("embedding has zero or non-finite norm"));
        }
        for v in &mut values {
            *v /= norm;
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Cosine similarity with `other`. Both vectors are renormalized by their
    /// actual norms so hand-built test vectors behave.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "embedding dimensions differ within one run"
        );
        let dot: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b)
            .sum();
        let denom = self.norm() * other.norm();
        if denom == 0.0 {
            return 0.0;
        }
        dot / denom
    }

    /// L2-normalized arithmetic mean of a non-empty set of vectors.
    pub fn mean_normalized(vectors: &[EmbeddingVector]) -> Result<EmbeddingVector> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::invalid_input("cannot pool an empty vector set"))?;
        let dim = first.dim();
        let mut acc = vec![0.0; dim];
        for v in vectors {
            if v.dim() != dim {
                return Err(Error::invalid_input("embedding dimensions differ in pool"));
            }
            for (a, b) in acc.iter_mut().zip(v.values.iter()) {
                *a += b;
            }
        }
        let n = vectors.len() as f64;
        for a in &mut acc {
            *a /= n;
        }
        EmbeddingVector::normalized(acc)
    }
}

/// Connection and behavior settings shared by all provider clients.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderConfig {
    /// Endpoint for online mode. The request body disambiguates the service:
    /// `{"text": ...}` asks for an embedding, `{"prompt": ...}` for text.
    pub endpoint_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Request timeout in seconds.
    pub timeout_secs: u64,
    /// Upper bound on concurrent in-flight requests.
    pub max_in_flight: usize,
    /// When true, no network call is ever made.
    pub offline_mode: bool,
    /// Seed for the deterministic offline backends.
    pub seed: u64,
    /// Embedding dimensionality.
    pub embedding_dim: usize,
    /// Judge prompt template; see [`DEFAULT_JUDGE_PROMPT`].
    pub judge_prompt: String,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint_url: String::new(),
            api_key_env: "WKFORGE_API_KEY".to_string(),
            timeout_secs: 30,
            max_in_flight: 4,
            offline_mode: true,
            seed: 0,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            judge_prompt: DEFAULT_JUDGE_PROMPT.to_string(),
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight == 0 {
            return Err(Error::invalid_input("max_in_flight must be >= 1"));
        }
        if self.embedding_dim == 0 {
            return Err(Error::invalid_input("embedding_dim must be >= 1"));
        }
        Ok(())
    }

    /// Whether this configuration resolves to offline mode, honoring the
    /// `WKFORGE_OFFLINE` override.
    pub fn effective_offline(&self) -> bool {
        self.offline_mode || offline_forced_by_env()
    }
}

/// True when `WKFORGE_OFFLINE=1` is set in the environment.
pub fn offline_forced_by_env() -> bool {
    std::env::var(OFFLINE_ENV_VAR).map(|v| v == "1").unwrap_or(false)
}

/// Text → unit-norm embedding.
pub trait TextEmbedder: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<EmbeddingVector>;
}

/// Prompt → generated text (the language-model backend boundary).
pub trait TextGenerator: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// Pair of task texts → similarity score in `[0, 1]`.
pub trait MatchJudge: Send + Sync {
    fn judge_match(&self, generated: &str, reference: &str) -> Result<f64>;
}

/// The three provider handles the pipeline needs, sharing one configuration.
#[derive(Clone)]
pub struct ProviderSet {
    pub embedder: Arc<dyn TextEmbedder>,
    pub generator: Arc<dyn TextGenerator>,
    pub judge: Arc<dyn MatchJudge>,
    /// True when the handles are the deterministic offline stubs. Some
    /// callers (e.g. intention decoding) format prompts differently for a
    /// real generation backend than for the offline walker.
    pub offline: bool,
}

impl ProviderSet {
    /// Deterministic offline providers.
    pub fn offline(seed: u64, embedding_dim: usize) -> ProviderSet {
        let embedder = OfflineEmbedder::new(seed, embedding_dim);
        ProviderSet {
            embedder: Arc::new(embedder.clone()),
            generator: Arc::new(OfflineGenerator::new(seed)),
            judge: Arc::new(OfflineJudge::new(embedder)),
            offline: true,
        }
    }

    /// Build providers from configuration, using the default HTTP transport
    /// for online mode. Offline mode never touches the transport.
    pub fn from_config(cfg: &ProviderConfig) -> Result<ProviderSet> {
        Self::from_config_with_transport(cfg, Arc::new(ReqwestTransport::new()))
    }

    /// Same as [`ProviderSet::from_config`] with an injected transport; used
    /// by tests to count or fake network traffic.
    pub fn from_config_with_transport(
        cfg: &ProviderConfig,
        transport: Arc<dyn HttpTransport>,
    ) -> Result<ProviderSet> {
        cfg.validate()?;
        if cfg.effective_offline() {
            return Ok(Self::offline(cfg.seed, cfg.embedding_dim));
        }
        let provider = Arc::new(HttpProvider::new(cfg.clone(), transport));
        Ok(ProviderSet {
            embedder: provider.clone(),
            generator: provider.clone(),
            judge: provider,
            offline: false,
        })
    }
}

/// Delay before the single retry granted to transient provider failures.
const RETRY_BACKOFF: Duration = Duration::from_millis(50);

/// Run `op`, retrying once after a backoff if it fails with
/// [`Error::ProviderUnavailable`]. Any other error surfaces immediately.
pub(crate) fn with_retry<T>(mut op: impl FnMut() -> Result<T>) -> Result<T> {
    match op() {
        Err(Error::ProviderUnavailable(_)) => {
            std::thread::sleep(RETRY_BACKOFF);
            op()
        }
        other => other,
    }
}

/// Counting semaphore bounding in-flight provider requests.
pub(crate) struct Semaphore {
    permits: std::sync::Mutex<usize>,
    cv: std::sync::Condvar,
}

impl Semaphore {
    pub fn new(permits: usize) -> Semaphore {
        Semaphore {
            permits: std::sync::Mutex::new(permits),
            cv: std::sync::Condvar::new(),
        }
    }

    pub fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.cv.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphoreGuard { sem: self }
    }
}

pub(crate) struct SemaphoreGuard<'a> {
    sem: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.sem.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.sem.cv.notify_one();
    }
}
