//! Enriched-JSONL dataset pipeline: reading and writing the enriched record
//! format, batched enrichment through a pluggable embedding provider, and a
//! deterministic synthetic corpus generator for desk-scale runs.

mod enrich;
mod jsonl;
mod provider;
mod synth;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;

pub use enrich::{enrich, EnrichmentConfig};
pub use jsonl::{read_jsonl, read_raw_jsonl, write_jsonl, JsonlReader, JsonlWriter, RawJsonlReader};
pub use provider::{EmbeddingProvider, RemoteProvider, SyntheticProvider};
pub use synth::{synth_corpus, SynthCorpus};

/// One line of an enriched dataset: source texts plus their precomputed
/// embeddings. Field order matters — serialization emits keys exactly in
/// this (alphabetical) order so output files are byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedRecord {
    pub document_embeddings: Embedding,
    pub document_text: String,
    pub example_id: i64,
    pub question_embeddings: Embedding,
    pub question_text: String,
}

impl EnrichedRecord {
    /// Shared dimension of the two embeddings.
    pub fn dim(&self) -> usize {
        self.document_embeddings.dim()
    }
}

/// A not-yet-enriched source row: the retained keys of the raw corpus.
/// Unknown keys on the wire are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub example_id: i64,
    pub document_text: String,
    pub question_text: String,
}
