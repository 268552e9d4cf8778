//! A uniform search-backend contract with three implementations: the flat
//! exact index, the naive full-sort baseline, and a remote search service
//! reached over HTTP (plus the in-repo stub server that stands in for it).

mod flat;
mod naive;
mod remote;
pub mod stub;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::clock::Clock;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::index::ResultList;

pub use flat::FlatBackend;
pub use naive::NaiveBackend;
pub use remote::RemoteBackend;
pub use stub::{stub_serve, StubConfig, StubHandle};

/// The three compared approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BackendKind {
    Flat,
    Naive,
    Remote,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendKind::Flat => "flat",
            BackendKind::Naive => "naive",
            BackendKind::Remote => "remote",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(BackendKind::Flat),
            "naive" => Ok(BackendKind::Naive),
            "remote" => Ok(BackendKind::Remote),
            other => Err(Error::Config(format!(
                "unknown backend '{other}' (expected flat, naive or remote)"
            ))),
        }
    }
}

/// Wall-clock cost of one ingest and one query against a backend.
///
/// The naive backend reports a zero `index_duration` by definition: buffering
/// records is not indexing, and all of its work happens at query time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackendTimings {
    pub index_duration: Duration,
    pub query_duration: Duration,
}

/// One search backend over a fixed-dimension corpus.
///
/// Indexing is single-shot and single-writer; after `index` returns, `query`
/// is read-only and may be called repeatedly (and concurrently, for the
/// in-process backends) with identical results.
pub trait SearchBackend {
    fn kind(&self) -> BackendKind;

    /// Ingests the corpus. Ids must be distinct and dimensions uniform.
    fn index(&mut self, records: &[(i64, Embedding)]) -> Result<()>;

    /// Exact top-k by cosine, descending score, ties by ascending id.
    fn query(&self, q: &Embedding, k: usize) -> Result<ResultList>;
}

/// Runs ingest + one query, timing each phase with the supplied clock.
///
/// For the naive backend the ingest is executed but not timed (its
/// `index_duration` is reported as zero).
pub fn index_and_query(
    backend: &mut dyn SearchBackend,
    records: &[(i64, Embedding)],
    q: &Embedding,
    k: usize,
    clock: &dyn Clock,
) -> Result<(ResultList, BackendTimings)> {
    let index_duration = if backend.kind() == BackendKind::Naive {
        backend.index(records)?;
        Duration::ZERO
    } else {
        let start = clock.now();
        backend.index(records)?;
        clock.now() - start
    };

    let start = clock.now();
    let result = backend.query(q, k)?;
    let query_duration = clock.now() - start;

    Ok((
        result,
        BackendTimings {
            index_duration,
            query_duration,
        },
    ))
}
