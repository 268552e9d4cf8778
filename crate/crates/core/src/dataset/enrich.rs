//! Batched enrichment: attaches document and question embeddings to raw
//! records through an embedding provider.

use super::provider::EmbeddingProvider;
use super::{EnrichedRecord, RawRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EnrichmentConfig {
    /// Records processed per provider round trip.
    pub batch_size: usize,
    /// Texts are cut to this many whitespace tokens before submission.
    pub max_seq_len: usize,
    /// Expected embedding dimension; provider output is validated against it.
    pub embedding_dim: usize,
}

impl Default for EnrichmentConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            max_seq_len: 256,
            embedding_dim: 768,
        }
    }
}

impl EnrichmentConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_seq_len == 0 {
            return Err(Error::Config("max_seq_len must be at least 1".into()));
        }
        if self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be at least 1".into()));
        }
        Ok(())
    }
}

/// First `max_tokens` whitespace tokens of `text`. Texts already within the
/// budget pass through unchanged; truncation re-joins tokens with single
/// spaces (this is a payload bound, not a tokenizer).
pub fn truncate_tokens(text: &str, max_tokens: usize) -> String {
    if text.split_whitespace().count() <= max_tokens {
        return text.to_string();
    }
    text.split_whitespace()
        .take(max_tokens)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Streams enriched batches: pulls `batch_size` raw records at a time, sends
/// both texts of the batch through the provider in one call (documents first,
/// then questions), and yields the completed batch.
///
/// Output order equals input order. A provider failure aborts the stream
/// without emitting any record from the failed batch, so everything yielded
/// so far is complete and flushable.
pub fn enrich<'a, I>(
    raw_records: I,
    config: &'a EnrichmentConfig,
    provider: &'a dyn EmbeddingProvider,
) -> Result<impl Iterator<Item = Result<Vec<EnrichedRecord>>> + 'a>
where
    I: IntoIterator<Item = RawRecord> + 'a,
{
    config.validate()?;
    let mut input = raw_records.into_iter();
    let config = config.clone();
    let mut failed = false;

    Ok(std::iter::from_fn(move || {
        if failed {
            return None;
        }
        let batch: Vec<RawRecord> = input.by_ref().take(config.batch_size).collect();
        if batch.is_empty() {
            return None;
        }
        match enrich_batch(&batch, &config, provider) {
            Ok(records) => Some(Ok(records)),
            Err(e) => {
                failed = true;
                Some(Err(e))
            }
        }
    }))
}

fn enrich_batch(
    batch: &[RawRecord],
    config: &EnrichmentConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<EnrichedRecord>> {
    let mut texts = Vec::with_capacity(batch.len() * 2);
    for r in batch {
        texts.push(truncate_tokens(&r.document_text, config.max_seq_len));
    }
    for r in batch {
        texts.push(truncate_tokens(&r.question_text, config.max_seq_len));
    }

    let embeddings = provider.encode(&texts, config.max_seq_len)?;
    if embeddings.len() != texts.len() {
        return Err(Error::Provider {
            endpoint: provider.describe(),
            attempts: 1,
            message: format!(
                "sent {} texts, received {} embeddings",
                texts.len(),
                embeddings.len()
            ),
        });
    }
    for e in &embeddings {
        if e.dim() != config.embedding_dim {
            return Err(Error::Provider {
                endpoint: provider.describe(),
                attempts: 1,
                message: format!(
                    "expected dimension {}, received {}",
                    config.embedding_dim,
                    e.dim()
                ),
            });
        }
    }

    let (docs, questions) = embeddings.split_at(batch.len());
    Ok(batch
        .iter()
        .zip(docs.iter().zip(questions))
        .map(|(raw, (d, q))| EnrichedRecord {
            document_embeddings: d.clone(),
            document_text: raw.document_text.clone(),
            example_id: raw.example_id,
            question_embeddings: q.clone(),
            question_text: raw.question_text.clone(),
        })
        .collect())
}
