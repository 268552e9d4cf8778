//! Flat-index backend: builds and seals a [`FlatIndex`] at ingest time, then
//! answers queries with bounded top-k selection.

use super::{BackendKind, SearchBackend};
use crate::embedding::Embedding;
use crate::error::Result;
use crate::index::{FlatIndex, ResultList};

pub struct FlatBackend {
    index: FlatIndex,
}

impl FlatBackend {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self {
            index: FlatIndex::new(dim)?,
        })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
}

impl SearchBackend for FlatBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Flat
    }

    fn index(&mut self, records: &[(i64, Embedding)]) -> Result<()> {
        if self.index.is_sealed() {
            return Err(crate::error::Error::IndexSealed);
        }
        // The record count is known up front; reserve once instead of
        // growing through reallocations.
        let mut index = FlatIndex::with_capacity(self.index.dim(), records.len())?;
        for (id, v) in records {
            index.add(*id, v)?;
        }
        index.seal();
        self.index = index;
        Ok(())
    }

    fn query(&self, q: &Embedding, k: usize) -> Result<ResultList> {
        self.index.search_topk(q, k)
    }
}
