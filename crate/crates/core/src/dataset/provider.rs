//! Embedding providers: the remote encoding service and a deterministic
//! synthetic stand-in.
//!
//! Remote protocol: `POST /encode` with body
//! `{"texts": [...], "max_seq_len": <int>}`, answered by
//! `{"embeddings": [[...], ...]}`.

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// Maps a batch of texts to one embedding per text.
pub trait EmbeddingProvider {
    fn encode(&self, texts: &[String], max_seq_len: usize) -> Result<Vec<Embedding>>;

    /// Dimension of produced embeddings.
    fn dim(&self) -> usize;

    /// Human-readable identity for diagnostics.
    fn describe(&self) -> String;
}

/// Deterministic provider: each vector is derived from a hash of
/// `(seed, text)`, so equal texts always map to equal unit vectors.
pub struct SyntheticProvider {
    seed: u64,
    dim: usize,
}

impl SyntheticProvider {
    pub fn new(seed: u64, dim: usize) -> Self {
        Self { seed, dim }
    }
}

// FNV-1a, fixed here so hashes are stable across platforms and releases.
fn fnv1a64(seed: u64, text: &str) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for byte in seed.to_le_bytes().iter().chain(text.as_bytes()) {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

impl EmbeddingProvider for SyntheticProvider {
    fn encode(&self, texts: &[String], _max_seq_len: usize) -> Result<Vec<Embedding>> {
        texts
            .iter()
            .map(|text| {
                let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(self.seed, text));
                let mut values: Vec<f64> = (0..self.dim)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    values[0] = 1.0;
                } else {
                    for v in &mut values {
                        *v /= norm;
                    }
                }
                Embedding::new(values.into_iter().map(|v| v as f32).collect())
            })
            .collect()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn describe(&self) -> String {
        format!("synthetic(seed={}, dim={})", self.seed, self.dim)
    }
}

#[derive(Deserialize)]
struct EncodeResponse {
    embeddings: Vec<Embedding>,
}

/// Client for an embedding service. Transport failures are retried a
/// configurable number of times before surfacing, with the attempt count in
/// the error.
pub struct RemoteProvider {
    agent: ureq::Agent,
    endpoint: String,
    dim: usize,
    retries: u32,
    retry_delay: Duration,
}

impl RemoteProvider {
    pub fn new(endpoint: &str, dim: usize) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(600))
            .build();
        Self {
            agent,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            dim,
            retries: 3,
            retry_delay: Duration::from_millis(100),
        }
    }

    pub fn with_retries(mut self, retries: u32, delay: Duration) -> Self {
        self.retries = retries.max(1);
        self.retry_delay = delay;
        self
    }

    fn encode_url(&self) -> String {
        format!("{}/encode", self.endpoint)
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn encode(&self, texts: &[String], max_seq_len: usize) -> Result<Vec<Embedding>> {
        let body = serde_json::json!({ "texts": texts, "max_seq_len": max_seq_len });
        let url = self.encode_url();

        let mut attempts = 0;
        let response = loop {
            attempts += 1;
            match self.agent.post(&url).send_json(body.clone()) {
                Ok(resp) => break resp,
                Err(ureq::Error::Status(status, resp)) => {
                    let message = resp
                        .into_string()
                        .unwrap_or_else(|_| format!("HTTP status {status}"));
                    return Err(Error::Provider {
                        endpoint: url,
                        attempts,
                        message,
                    });
                }
                Err(ureq::Error::Transport(t)) => {
                    if attempts >= self.retries {
                        return Err(Error::Provider {
                            endpoint: url,
                            attempts,
                            message: t.to_string(),
                        });
                    }
                    std::thread::sleep(self.retry_delay);
                }
            }
        };

        let parsed: EncodeResponse = response.into_json().map_err(|e| Error::Provider {
            endpoint: url.clone(),
            attempts,
            message: format!("invalid response: {e}"),
        })?;

        if parsed.embeddings.len() != texts.len() {
            return Err(Error::Provider {
                endpoint: url,
                attempts,
                message: format!(
                    "sent {} texts, received {} embeddings",
                    texts.len(),
                    parsed.embeddings.len()
                ),
            });
        }
        for e in &parsed.embeddings {
            if e.dim() != self.dim {
                return Err(Error::Provider {
                    endpoint: url,
                    attempts,
                    message: format!("expected dimension {}, received {}", self.dim, e.dim()),
                });
            }
        }
        Ok(parsed.embeddings)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn describe(&self) -> String {
        format!("remote({})", self.endpoint)
    }
}
