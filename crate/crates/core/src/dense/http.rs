//! HTTP embedding provider.
//!
//! Wire contract: `POST <url>` with JSON `{"model": ..., "inputs": [...]}`,
//! response `{"embeddings": [[...], ...]}` aligned with the inputs. Inputs
//! are sent in bounded batches; each request is retried with exponential
//! backoff on transport errors and retryable statuses (429 and 5xx).

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::EmbeddingProvider;
use crate::error::{Error, Result};

/// Connection and batching settings for [`HttpEmbedder`].
#[derive(Debug, Clone)]
pub struct HttpEmbedderConfig {
    pub url: String,
    pub model: String,
    /// Expected output dimension; responses are validated against it.
    pub dim: usize,
    /// Capacity hint forwarded as `max_input_words`.
    pub max_input_words: usize,
    /// Maximum inputs per request.
    pub batch_size: usize,
    /// Attempts per request, including the first.
    pub max_attempts: u32,
    /// Backoff before the first retry; doubles per attempt.
    pub backoff: Duration,
    pub timeout: Duration,
}

impl HttpEmbedderConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>, dim: usize) -> Self {
        HttpEmbedderConfig {
            url: url.into(),
            model: model.into(),
            dim,
            max_input_words: 32_000,
            batch_size: 8,
            max_attempts: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(120),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    inputs: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f32>>,
}

/// Blocking client for a remote embedding endpoint.
pub struct HttpEmbedder {
    config: HttpEmbedderConfig,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(config: HttpEmbedderConfig) -> Result<Self> {
        if config.url.is_empty() {
            return Err(Error::InvalidParam(
                "embedding endpoint url is empty".into(),
            ));
        }
        if config.dim == 0 {
            return Err(Error::InvalidParam("embedding dim must be >= 1".into()));
        }
        if config.batch_size == 0 {
            return Err(Error::InvalidParam("batch_size must be >= 1".into()));
        }
        if config.max_attempts == 0 {
            return Err(Error::InvalidParam("max_attempts must be >= 1".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpEmbedder { config, agent })
    }

    fn post_batch(&self, inputs: &[String]) -> Result<Vec<Vec<f32>>> {
        let request = EmbedRequest {
            model: &self.config.model,
            inputs,
        };
        let mut last_error = String::new();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff * 2u32.pow(attempt - 1));
            }
            match self.agent.post(&self.config.url).send_json(&request) {
                Ok(mut response) => {
                    let status = response.status();
                    if status.is_success() {
                        let body: EmbedResponse = response.body_mut().read_json().map_err(|e| {
                            Error::Provider(format!("unreadable response body: {e}"))
                        })?;
                        return self.validate(body, inputs.len());
                    }
                    let retryable = status.as_u16() == 429 || status.is_server_error();
                    last_error = format!("endpoint returned status {status}");
                    if !retryable {
                        return Err(Error::Provider(last_error));
                    }
                }
                Err(e) => last_error = format!("request failed: {e}"),
            }
        }
        Err(Error::Provider(format!(
            "{} after {} attempts",
            last_error, self.config.max_attempts
        )))
    }

    fn validate(&self, body: EmbedResponse, expected: usize) -> Result<Vec<Vec<f32>>> {
        if body.embeddings.len() != expected {
            return Err(Error::Provider(format!(
                "endpoint returned {} embeddings for {} inputs",
                body.embeddings.len(),
                expected
            )));
        }
        for vector in &body.embeddings {
            if vector.len() != self.config.dim {
                return Err(Error::DimMismatch {
                    expected: self.config.dim,
                    actual: vector.len(),
                    context: "endpoint response".into(),
                });
            }
        }
        Ok(body.embeddings)
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        "http"
    }

    fn model(&self) -> &str {
        &self.config.model
    }

    fn dim(&self) -> usize {
        self.config.dim
    }

    fn max_input_words(&self) -> usize {
        self.config.max_input_words
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(self.config.batch_size) {
            out.extend(self.post_batch(batch)?);
        }
        Ok(out)
    }
}
