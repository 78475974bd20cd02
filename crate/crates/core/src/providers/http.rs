//! HTTP-backed online providers.
//!
//! The wire format is a single endpoint accepting `POST` with a JSON body:
//! `{"text": ...}` returns `{"vector": [...]}`; `{"prompt": ...}` returns
//! `{"text": ...}`. The API key is read from the environment variable named
//! by `api_key_env` and sent as a bearer token.

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::{
    with_retry, EmbeddingVector, MatchJudge, ProviderConfig, Semaphore, TextEmbedder,
    TextGenerator,
};

/// Transport boundary, injectable so tests can count or fake traffic.
pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value>;
}

/// Production transport over a blocking reqwest client.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new() -> ReqwestTransport {
        ReqwestTransport {
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl HttpTransport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value> {
        let mut req = self.client.post(url).timeout(timeout).json(body);
        if let Some(key) = api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::ProviderUnavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::ProviderUnavailable(format!("{url}: HTTP {status}")));
        }
        resp.json::<Value>()
            .map_err(|e| Error::MalformedResponse(format!("{url}: {e}")))
    }
}

/// One HTTP client serving all three provider roles.
pub struct HttpProvider {
    cfg: ProviderConfig,
    transport: Arc<dyn HttpTransport>,
    in_flight: Semaphore,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig, transport: Arc<dyn HttpTransport>) -> HttpProvider {
        let permits = cfg.max_in_flight.max(1);
        HttpProvider {
            cfg,
            transport,
            in_flight: Semaphore::new(permits),
        }
    }

    fn api_key(&self) -> Result<Option<String>> {
        if self.cfg.api_key_env.is_empty() {
            return Ok(None);
        }
        match std::env::var(&self.cfg.api_key_env) {
            Ok(key) if !key.is_empty() => Ok(Some(key)),
            _ => Err(Error::invalid_input(format!(
                "api key environment variable {} is not set",
                self.cfg.api_key_env
            ))),
        }
    }

    fn post(&self, body: Value) -> Result<Value> {
        let key = self.api_key()?;
        let timeout = Duration::from_secs(self.cfg.timeout_secs);
        with_retry(|| {
            let _permit = self.in_flight.acquire();
            self.transport
                .post_json(&self.cfg.endpoint_url, key.as_deref(), &body, timeout)
        })
    }
}

impl TextEmbedder for HttpProvider {
    fn embed_text(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::invalid_input("cannot embed empty text"));
        }
        let reply = self.post(json!({ "text": text }))?;
        let vector = reply
            .get("vector")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::MalformedResponse("reply lacks a vector field".to_string()))?;
        let values: Option<Vec<f64>> = vector.iter().map(Value::as_f64).collect();
        let values =
            values.ok_or_else(|| Error::MalformedResponse("vector holds non-numbers".to_string()))?;
        EmbeddingVector::normalized(values)
    }
}

impl TextGenerator for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String> {
        if prompt.trim().is_empty() {
            return Err(Error::invalid_input("cannot complete empty prompt"));
        }
        let reply = self.post(json!({ "prompt": prompt }))?;
        let text = reply
            .get("text")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::MalformedResponse("reply lacks a text field".to_string()))?;
        if text.is_empty() {
            return Err(Error::MalformedResponse("reply text is empty".to_string()));
        }
        Ok(text.to_string())
    }
}

impl MatchJudge for HttpProvider {
    fn judge_match(&self, generated: &str, reference: &str) -> Result<f64> {
        if generated.trim().is_empty() || reference.trim().is_empty() {
            return Err(Error::invalid_input("judge texts must be non-empty"));
        }
        let prompt = self
            .cfg
            .judge_prompt
            .replace("{GENERATED}", generated)
            .replace("{REFERENCE}", reference);
        let reply = self.complete(&prompt)?;
        parse_binary_verdict(&reply)
    }
}

/// Interpret an LLM judge reply as a binary verdict.
fn parse_binary_verdict(reply: &str) -> Result<f64> {
    let normalized = reply.trim().to_ascii_lowercase();
    if normalized.starts_with('1') || normalized.starts_with("yes") {
        Ok(1.0)
    } else if normalized.starts_with('0') || normalized.starts_with("no") {
        Ok(0.0)
    } else {
        Err(Error::MalformedResponse(format!(
            "judge reply not parsable as 0/1: {reply:?}"
        )))
    }
}

#[cfg(test)]
pub(crate) use test_support::CountingTransport;
