//! Exact dense-vector similarity search with a benchmark and
//! quality-assessment harness.
//!
//! The crate compares three ways of answering top-k cosine queries over
//! sentence embeddings:
//!
//! - **flat** — an exhaustive exact index with bounded top-k selection,
//! - **naive** — the brute-force baseline that scores and fully sorts the
//!   whole corpus at query time, and
//! - **remote** — an HTTP search service spoken to over a small JSON wire
//!   protocol, with an in-repo stub server standing in for the real thing.
//!
//! Around the backends sit an enriched-JSONL dataset pipeline with pluggable
//! embedding providers, a wall-clock benchmark harness with CSV output, and
//! two result-quality metrics: positional top-k agreement across backends and
//! expected-document recall@k.

pub mod backend;
pub mod bench;
pub mod clock;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod index;
pub mod quality;

pub use embedding::{cosine, dot, norm, Embedding};
pub use error::{Error, Result};
pub use index::{FlatIndex, ResultList, SearchHit};
