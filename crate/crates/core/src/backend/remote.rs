//! HTTP client for the remote search service (the in-repo stub or any real
//! deployment speaking the same wire protocol).
//!
//! Wire scores arrive shifted by +1.0; the client subtracts the shift, clamps
//! back into `[-1, 1]`, and re-sorts under the canonical tie-break so that
//! agreement comparisons measure scoring, not ordering conventions.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::Serialize;

use super::stub::{BulkBody, SearchBody, SearchResponse, WireDoc, WIRE_SCORE_SHIFT};
use super::{BackendKind, SearchBackend};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::index::{ResultList, SearchHit};

/// Default number of documents sent per bulk request.
pub const DEFAULT_BULK_CHUNK: usize = 1_000;

static INSTANCE_COUNTER: AtomicU64 = AtomicU64::new(0);

pub struct RemoteBackend {
    agent: ureq::Agent,
    base_url: String,
    index_name: String,
    dim: usize,
    bulk_chunk: usize,
    indexed: bool,
}

impl RemoteBackend {
    /// Client for `base_url` using a process-unique index name.
    pub fn new(base_url: &str, dim: usize) -> Result<Self> {
        let n = INSTANCE_COUNTER.fetch_add(1, Ordering::Relaxed);
        Self::with_index_name(base_url, &format!("bench-{}-{n}", std::process::id()), dim)
    }

    pub fn with_index_name(base_url: &str, index_name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("backend dimension must be at least 1".into()));
        }
        if index_name.is_empty() {
            return Err(Error::Config("index name must not be empty".into()));
        }
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(Duration::from_secs(600))
            .build();
        Ok(Self {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            index_name: index_name.to_string(),
            dim,
            bulk_chunk: DEFAULT_BULK_CHUNK,
            indexed: false,
        })
    }

    pub fn with_bulk_chunk(mut self, docs_per_request: usize) -> Self {
        self.bulk_chunk = docs_per_request.max(1);
        self
    }

    pub fn index_name(&self) -> &str {
        &self.index_name
    }

    fn url(&self, suffix: &str) -> String {
        format!("{}/index/{}{suffix}", self.base_url, self.index_name)
    }

    fn send<T: Serialize>(&self, method: &str, url: &str, body: &T) -> Result<serde_json::Value> {
        let response = self
            .agent
            .request(method, url)
            .send_json(serde_json::to_value(body).expect("serializable body"));
        match response {
            Ok(resp) => resp.into_json().map_err(|e| Error::Protocol {
                endpoint: url.to_string(),
                status: 200,
                message: format!("invalid JSON in response: {e}"),
            }),
            Err(ureq::Error::Status(status, resp)) => {
                let message = resp
                    .into_json::<serde_json::Value>()
                    .ok()
                    .and_then(|v| v.get("error").and_then(|m| m.as_str()).map(String::from))
                    .unwrap_or_else(|| format!("HTTP status {status}"));
                Err(Error::Protocol {
                    endpoint: url.to_string(),
                    status,
                    message,
                })
            }
            Err(ureq::Error::Transport(t)) => Err(Error::Connection {
                endpoint: url.to_string(),
                message: t.to_string(),
            }),
        }
    }
}

impl SearchBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn index(&mut self, records: &[(i64, Embedding)]) -> Result<()> {
        if self.indexed {
            return Err(Error::IndexSealed);
        }
        let create = self.send(
            "PUT",
            &self.url(""),
            &serde_json::json!({ "dim": self.dim }),
        )?;
        if create.get("acknowledged").and_then(|v| v.as_bool()) != Some(true) {
            return Err(Error::Protocol {
                endpoint: self.url(""),
                status: 200,
                message: "index creation was not acknowledged".into(),
            });
        }

        for chunk in records.chunks(self.bulk_chunk.max(1)) {
            let docs = chunk
                .iter()
                .map(|(id, v)| WireDoc {
                    id: *id,
                    embedding: v.clone(),
                })
                .collect();
            let reply = self.send("POST", &self.url("/bulk"), &BulkBody { docs })?;
            let indexed = reply.get("indexed").and_then(|v| v.as_u64());
            if indexed != Some(chunk.len() as u64) {
                return Err(Error::Protocol {
                    endpoint: self.url("/bulk"),
                    status: 200,
                    message: format!(
                        "service acknowledged {indexed:?} documents, sent {}",
                        chunk.len()
                    ),
                });
            }
        }
        self.indexed = true;
        Ok(())
    }

    fn query(&self, q: &Embedding, k: usize) -> Result<ResultList> {
        if !self.indexed {
            return Err(Error::IndexUnsealed);
        }
        if k == 0 {
            return Err(Error::InvalidK);
        }
        let reply = self.send(
            "POST",
            &self.url("/search"),
            &SearchBody {
                embedding: q.clone(),
                k,
            },
        )?;
        let response: SearchResponse =
            serde_json::from_value(reply).map_err(|e| Error::Protocol {
                endpoint: self.url("/search"),
                status: 200,
                message: format!("unexpected search response shape: {e}"),
            })?;

        let mut hits: Vec<SearchHit> = response
            .hits
            .into_iter()
            .map(|h| SearchHit {
                id: h.id,
                score: (h.score - WIRE_SCORE_SHIFT).clamp(-1.0, 1.0),
            })
            .collect();
        // Canonical ordering, independent of how the service sorted.
        hits.sort_unstable_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.id.cmp(&b.id))
        });
        hits.truncate(k);
        // The service clamps k to its corpus size, so the hit count is the
        // effective (clamped) request size.
        let k_requested = hits.len();
        Ok(ResultList::new(hits, k_requested))
    }
}
