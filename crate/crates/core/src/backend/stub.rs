//! In-repo stand-in for the remote search service.
//!
//! Serves the wire protocol over HTTP and answers queries through the exact
//! flat index, so tests and benchmarks can exercise the remote path without
//! an external deployment. A real service speaking the same protocol is a
//! drop-in replacement.
//!
//! # Wire protocol
//!
//! All bodies are JSON; embeddings are plain arrays of decimal numbers.
//!
//! | Request | Body | Response |
//! |---|---|---|
//! | `PUT /index/{name}` | `{"dim": <int>}` | `{"acknowledged": true}` |
//! | `POST /index/{name}/bulk` | `{"docs": [{"id": <int>, "embedding": [..]}, ..]}` | `{"indexed": <count>}` |
//! | `POST /index/{name}/search` | `{"embedding": [..], "k": <int>}` | `{"hits": [{"id": <int>, "score": <real>}, ..]}` |
//!
//! Errors come back as `{"error": "<message>"}` with a 4xx status for client
//! mistakes (malformed body, unknown index, dimension mismatch, duplicate or
//! zero-norm documents).
//!
//! Wire scores are shifted cosine values, `cosine + 1.0`, and therefore lie
//! in `[0, 2]`; clients subtract the shift to recover cosine space.

use std::collections::HashMap;
use std::io::Read;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::index::FlatIndex;

/// Shift applied to cosine scores on the wire, keeping them non-negative.
pub const WIRE_SCORE_SHIFT: f64 = 1.0;

const MAX_BODY_BYTES: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct StubConfig {
    /// Bind address; use port 0 to let the OS pick a free port.
    pub addr: String,
    /// Number of worker threads serving requests concurrently.
    pub workers: usize,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:0".into(),
            workers: 2,
        }
    }
}

#[derive(Deserialize)]
struct CreateIndexBody {
    dim: usize,
}

#[derive(Serialize, Deserialize)]
pub struct WireDoc {
    pub id: i64,
    pub embedding: Embedding,
}

#[derive(Serialize, Deserialize)]
pub struct BulkBody {
    pub docs: Vec<WireDoc>,
}

#[derive(Serialize, Deserialize)]
pub struct SearchBody {
    pub embedding: Embedding,
    pub k: usize,
}

#[derive(Serialize, Deserialize)]
pub struct WireHit {
    pub id: i64,
    pub score: f64,
}

#[derive(Serialize, Deserialize)]
pub struct SearchResponse {
    pub hits: Vec<WireHit>,
}

#[derive(Debug)]
struct StoredIndex {
    dim: usize,
    docs: Vec<(i64, Embedding)>,
    // Sealed scan structure, built lazily on first search after a bulk.
    sealed: Option<Arc<FlatIndex>>,
}

type Store = Arc<RwLock<HashMap<String, StoredIndex>>>;

/// A running stub server. Shuts down when dropped.
#[derive(Debug)]
pub struct StubHandle {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
    store: Store,
}

impl StubHandle {
    pub fn addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Number of documents currently stored in the named index, for
    /// test-side state inspection.
    pub fn doc_count(&self, index: &str) -> Option<usize> {
        self.store.read().unwrap().get(index).map(|s| s.docs.len())
    }

    pub fn shutdown(mut self) {
        self.stop_workers();
    }

    fn stop_workers(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for StubHandle {
    fn drop(&mut self) {
        self.stop_workers();
    }
}

/// Starts the stub on the configured address and returns its handle.
pub fn stub_serve(config: StubConfig) -> Result<StubHandle> {
    let server =
        tiny_http::Server::http(&config.addr).map_err(|e| Error::StubStartup(e.to_string()))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| Error::StubStartup("stub requires a TCP listen address".into()))?;

    let server = Arc::new(server);
    let store: Store = Arc::new(RwLock::new(HashMap::new()));
    let stop = Arc::new(AtomicBool::new(false));

    let workers = (0..config.workers.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let store = Arc::clone(&store);
            let stop = Arc::clone(&stop);
            std::thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    match server.recv_timeout(Duration::from_millis(25)) {
                        Ok(Some(request)) => handle_request(request, &store),
                        Ok(None) => {}
                        Err(_) => break,
                    }
                }
            })
        })
        .collect();

    Ok(StubHandle {
        addr,
        stop,
        workers,
        store,
    })
}

fn handle_request(mut request: tiny_http::Request, store: &Store) {
    let method = request.method().clone();
    let url = request.url().to_string();

    let mut body = String::new();
    let outcome = match request
        .as_reader()
        .take(MAX_BODY_BYTES as u64)
        .read_to_string(&mut body)
    {
        Ok(_) => route(&method, &url, &body, store),
        Err(_) => Err((400, "request body is not valid UTF-8".to_string())),
    };

    let (status, payload) = match outcome {
        Ok(json) => (200, json),
        Err((status, message)) => (
            status,
            serde_json::json!({ "error": message }).to_string(),
        ),
    };

    let response = tiny_http::Response::from_string(payload)
        .with_status_code(status)
        .with_header(
            tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).unwrap(),
        );
    let _ = request.respond(response);
}

type RouteResult = std::result::Result<String, (u16, String)>;

fn route(method: &tiny_http::Method, url: &str, body: &str, store: &Store) -> RouteResult {
    let path: Vec<&str> = url.trim_matches('/').split('/').collect();
    match (method, path.as_slice()) {
        (tiny_http::Method::Put, ["index", name]) => create_index(name, body, store),
        (tiny_http::Method::Post, ["index", name, "bulk"]) => bulk(name, body, store),
        (tiny_http::Method::Post, ["index", name, "search"]) => search(name, body, store),
        _ => Err((404, format!("no route for {method} {url}"))),
    }
}

fn parse_body<'a, T: Deserialize<'a>>(body: &'a str) -> std::result::Result<T, (u16, String)> {
    serde_json::from_str(body).map_err(|e| (400, format!("malformed body: {e}")))
}

fn create_index(name: &str, body: &str, store: &Store) -> RouteResult {
    let create: CreateIndexBody = parse_body(body)?;
    if create.dim == 0 {
        return Err((400, "dim must be at least 1".into()));
    }
    if name.is_empty() {
        return Err((400, "index name must not be empty".into()));
    }
    store.write().unwrap().insert(
        name.to_string(),
        StoredIndex {
            dim: create.dim,
            docs: Vec::new(),
            sealed: None,
        },
    );
    Ok(serde_json::json!({ "acknowledged": true }).to_string())
}

fn bulk(name: &str, body: &str, store: &Store) -> RouteResult {
    let bulk: BulkBody = parse_body(body)?;
    let mut guard = store.write().unwrap();
    let stored = guard
        .get_mut(name)
        .ok_or_else(|| (404, format!("unknown index '{name}'")))?;

    // Validate the whole batch before committing any of it.
    let mut incoming = std::collections::HashSet::new();
    for doc in &bulk.docs {
        if doc.embedding.dim() != stored.dim {
            return Err((
                400,
                format!(
                    "document {} has dimension {}, index expects {}",
                    doc.id,
                    doc.embedding.dim(),
                    stored.dim
                ),
            ));
        }
        if doc.embedding.is_zero() {
            return Err((400, format!("document {} has zero norm", doc.id)));
        }
        if !incoming.insert(doc.id) || stored.docs.iter().any(|(id, _)| *id == doc.id) {
            return Err((400, format!("duplicate document id {}", doc.id)));
        }
    }

    let indexed = bulk.docs.len();
    stored
        .docs
        .extend(bulk.docs.into_iter().map(|d| (d.id, d.embedding)));
    stored.sealed = None;
    Ok(serde_json::json!({ "indexed": indexed }).to_string())
}

fn sealed_index(name: &str, store: &Store) -> std::result::Result<(usize, Arc<FlatIndex>), (u16, String)> {
    {
        let guard = store.read().unwrap();
        let stored = guard
            .get(name)
            .ok_or_else(|| (404, format!("unknown index '{name}'")))?;
        if let Some(sealed) = &stored.sealed {
            return Ok((stored.dim, Arc::clone(sealed)));
        }
    }
    let mut guard = store.write().unwrap();
    let stored = guard
        .get_mut(name)
        .ok_or_else(|| (404, format!("unknown index '{name}'")))?;
    if stored.sealed.is_none() {
        let mut index = FlatIndex::with_capacity(stored.dim, stored.docs.len())
            .map_err(|e| (500, e.to_string()))?;
        for (id, v) in &stored.docs {
            index.add(*id, v).map_err(|e| (500, e.to_string()))?;
        }
        index.seal();
        stored.sealed = Some(Arc::new(index));
    }
    Ok((stored.dim, Arc::clone(stored.sealed.as_ref().unwrap())))
}

fn search(name: &str, body: &str, store: &Store) -> RouteResult {
    let search: SearchBody = parse_body(body)?;
    let (dim, index) = sealed_index(name, store)?;
    if search.k == 0 {
        return Err((400, "k must be at least 1".into()));
    }
    if search.embedding.dim() != dim {
        return Err((
            400,
            format!(
                "query has dimension {}, index expects {dim}",
                search.embedding.dim()
            ),
        ));
    }
    if search.embedding.is_zero() {
        return Err((400, "query has zero norm".into()));
    }

    let result = index
        .search_topk(&search.embedding, search.k)
        .map_err(|e| (500, e.to_string()))?;
    let hits = result
        .hits
        .into_iter()
        .map(|h| WireHit {
            id: h.id,
            score: h.score + WIRE_SCORE_SHIFT,
        })
        .collect();
    Ok(serde_json::to_string(&SearchResponse { hits }).unwrap())
}
