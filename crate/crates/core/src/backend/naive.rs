//! Naive/brute-force backend.
//!
//! This backend performs no pre-processing or indexing: ingest merely buffers
//! the raw records. Every query starts from that raw buffer — it builds the
//! scan structure, scores all documents, fully sorts them, and only then
//! takes the first k. The whole cost lands on the query, which is exactly
//! what the benchmark's naive timings are meant to capture.

use super::{BackendKind, SearchBackend};
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::index::{FlatIndex, ResultList};

pub struct NaiveBackend {
    dim: usize,
    records: Vec<(i64, Embedding)>,
    buffered: bool,
}

impl NaiveBackend {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("backend dimension must be at least 1".into()));
        }
        Ok(Self {
            dim,
            records: Vec::new(),
            buffered: false,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl SearchBackend for NaiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Naive
    }

    fn index(&mut self, records: &[(i64, Embedding)]) -> Result<()> {
        if self.buffered {
            return Err(Error::IndexSealed);
        }
        // Validate eagerly so bad corpora fail at ingest like the other
        // backends, then keep only the raw copy.
        let mut probe = FlatIndex::with_capacity(self.dim, records.len())?;
        for (id, v) in records {
            probe.add(*id, v)?;
        }
        self.records = records.to_vec();
        self.buffered = true;
        Ok(())
    }

    fn query(&self, q: &Embedding, k: usize) -> Result<ResultList> {
        if !self.buffered {
            return Err(Error::IndexUnsealed);
        }
        if k == 0 {
            return Err(Error::InvalidK);
        }
        // All possible comparisons, from scratch: build the scan over the raw
        // buffer, score every document, full-sort, then cut to k.
        let mut index = FlatIndex::with_capacity(self.dim, self.records.len())?;
        for (id, v) in &self.records {
            index.add(*id, v)?;
        }
        index.seal();
        let mut all = index.brute_force_all(q)?;
        all.hits.truncate(k);
        all.k_requested = k.min(self.records.len());
        Ok(all)
    }
}
