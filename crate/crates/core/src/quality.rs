//! Result-quality assessments: positional top-k agreement across backends
//! and expected-document recall@k.

use std::io::Write;

use crate::backend::BackendKind;
use crate::bench::BackendFactory;
use crate::dataset::EnrichedRecord;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::index::ResultList;

/// Positional differences between backends at one corpus size, averaged over
/// repeated executions.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub dataset_size: usize,
    pub k: usize,
    pub runs: usize,
    pub errors_per_run: Vec<usize>,
    pub avg_errors: f64,
}

/// How many of the asked queries had their paired document inside the top-k,
/// for each k.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallReport {
    pub num_queries: usize,
    pub k_values: Vec<usize>,
    pub hits_at_k: Vec<usize>,
}

/// Counts the positions, over the first `min(k, shortest list)` ranks, where
/// the lists do not all agree on one document id.
///
/// The comparison is positional, not set-based: `[a, b]` against `[b, a]`
/// scores 2. Lists shorter than k are compared over the shortest common
/// length; the length difference itself is not an error.
pub fn positional_agreement(lists: &[&ResultList], k: usize) -> Result<usize> {
    if lists.len() < 2 {
        return Err(Error::TooFewLists(lists.len()));
    }
    let shortest = lists.iter().map(|l| l.len()).min().unwrap_or(0);
    let limit = shortest.min(k);
    let mut errors = 0;
    for i in 0..limit {
        let first = lists[0].hits[i].id;
        if lists[1..].iter().any(|l| l.hits[i].id != first) {
            errors += 1;
        }
    }
    Ok(errors)
}

/// Indexes every backend at each size, issues the designated query against
/// all of them, and counts positional differences, averaged over `runs`
/// independent executions (fresh backends each run).
///
/// A backend error marks that size failed; remaining sizes still run.
pub fn run_agreement(
    records: &[(i64, Embedding)],
    query: &Embedding,
    sizes: &[usize],
    backends: &[BackendKind],
    k: usize,
    runs: usize,
    factory: &mut BackendFactory<'_>,
) -> Result<Vec<(usize, Result<AgreementReport>)>> {
    if backends.len() < 2 {
        return Err(Error::TooFewLists(backends.len()));
    }
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if k == 0 {
        return Err(Error::InvalidK);
    }

    let mut reports = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if records.len() < size {
            reports.push((
                size,
                Err(Error::Config(format!(
                    "corpus has {} records, size {size} requested",
                    records.len()
                ))),
            ));
            continue;
        }
        reports.push((size, agreement_at_size(&records[..size], query, backends, k, runs, factory)));
    }
    Ok(reports)
}

fn agreement_at_size(
    records: &[(i64, Embedding)],
    query: &Embedding,
    backends: &[BackendKind],
    k: usize,
    runs: usize,
    factory: &mut BackendFactory<'_>,
) -> Result<AgreementReport> {
    let mut errors_per_run = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut results = Vec::with_capacity(backends.len());
        for &kind in backends {
            let mut backend = factory(kind)?;
            backend.index(records)?;
            results.push(backend.query(query, k)?);
        }
        let refs: Vec<&ResultList> = results.iter().collect();
        errors_per_run.push(positional_agreement(&refs, k)?);
    }
    let avg_errors = errors_per_run.iter().sum::<usize>() as f64 / runs as f64;
    Ok(AgreementReport {
        dataset_size: records.len(),
        k,
        runs,
        errors_per_run,
        avg_errors,
    })
}

/// Indexes the first `n` records' document embeddings (keyed by example id),
/// asks the first `m` records' question embeddings, and counts, for each k,
/// the queries whose own document came back in the top-k.
///
/// Top-k lists are prefixes of the top-max(k) list under the canonical total
/// order, so one search per query covers every k.
pub fn recall_expected(
    records: &[EnrichedRecord],
    n: usize,
    m: usize,
    k_values: &[usize],
) -> Result<RecallReport> {
    if m > n {
        return Err(Error::Config(format!(
            "cannot ask {m} queries against the first {n} records"
        )));
    }
    if records.len() < n {
        return Err(Error::Config(format!(
            "corpus has {} records, {n} requested",
            records.len()
        )));
    }
    if k_values.is_empty() || k_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "k_values must be nonempty and strictly ascending".into(),
        ));
    }
    if k_values[0] == 0 {
        return Err(Error::InvalidK);
    }

    let corpus = &records[..n];
    let dim = corpus
        .first()
        .map(|r| r.dim())
        .ok_or_else(|| Error::Config("corpus is empty".into()))?;
    let mut index = crate::index::FlatIndex::with_capacity(dim, n)?;
    for record in corpus {
        index.add(record.example_id, &record.document_embeddings)?;
    }
    index.seal();

    let k_max = *k_values.last().expect("validated nonempty");
    let mut hits_at_k = vec![0usize; k_values.len()];
    for record in &corpus[..m] {
        let result = index.search_topk(&record.question_embeddings, k_max)?;
        if let Some(rank) = result.hits.iter().position(|h| h.id == record.example_id) {
            for (slot, &k) in hits_at_k.iter_mut().zip(k_values) {
                if rank < k {
                    *slot += 1;
                }
            }
        }
    }

    Ok(RecallReport {
        num_queries: m,
        k_values: k_values.to_vec(),
        hits_at_k,
    })
}

/// Agreement reports as CSV: `size,k,runs,avg_errors`.
pub fn write_agreement_csv<W: Write>(
    reports: &[(usize, Result<AgreementReport>)],
    mut w: W,
) -> Result<()> {
    writeln!(w, "size,k,runs,avg_errors,status")?;
    for (size, outcome) in reports {
        match outcome {
            Ok(r) => writeln!(w, "{size},{},{},{},ok", r.k, r.runs, r.avg_errors)?,
            Err(_) => writeln!(w, "{size},,,,failed")?,
        }
    }
    Ok(())
}

/// Recall report as CSV: `k,hits,num_queries`.
pub fn write_recall_csv<W: Write>(report: &RecallReport, mut w: W) -> Result<()> {
    writeln!(w, "k,hits,num_queries")?;
    for (k, hits) in report.k_values.iter().zip(&report.hits_at_k) {
        writeln!(w, "{k},{hits},{}", report.num_queries)?;
    }
    Ok(())
}
