//! Flat exact index with bounded top-k selection, plus the full-sort
//! brute-force scan it is checked against.
//!
//! Both query paths score every corpus vector exactly once with the same
//! cosine kernel and order hits by descending score, ties broken by ascending
//! document id. `search_topk` keeps a size-k min-score heap (n·log k), while
//! `brute_force_all` materializes and fully sorts all n hits (n·log n) — the
//! complexity gap the benchmark measures.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine_with_norms, dot_kernel, norm_kernel, Embedding};
use crate::error::{Error, Result};

/// One scored document.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: i64,
    pub score: f64,
}

/// Hits in descending score order (ties by ascending id).
///
/// `k_requested` is the clamped request size: `hits.len()` equals
/// `min(k_requested, corpus size)` for top-k searches and the corpus size for
/// full scans.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultList {
    pub hits: Vec<SearchHit>,
    pub k_requested: usize,
}

impl ResultList {
    pub fn new(hits: Vec<SearchHit>, k_requested: usize) -> Self {
        Self { hits, k_requested }
    }

    pub fn ids(&self) -> Vec<i64> {
        self.hits.iter().map(|h| h.id).collect()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Internal scored entry with the canonical total order: greater means
/// "ranks earlier" (higher score, then smaller id).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ScoredDoc {
    score_bits: u64,
    id: i64,
}

impl ScoredDoc {
    fn new(score: f64, id: i64) -> Self {
        // Scores are clamped to [-1, 1] before they get here, so total_cmp
        // on the raw f64 is a total order without NaN cases; keep the f64
        // bits to stay Eq-consistent.
        Self {
            score_bits: score.to_bits(),
            id,
        }
    }

    fn score(&self) -> f64 {
        f64::from_bits(self.score_bits)
    }
}

impl Ord for ScoredDoc {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score()
            .total_cmp(&other.score())
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for ScoredDoc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exhaustive exact-search structure over raw vectors.
///
/// Built single-writer with [`FlatIndex::add`], then frozen with
/// [`FlatIndex::seal`], which caches the norm of every corpus vector. After
/// sealing, queries are read-only and safe to run concurrently.
#[derive(Debug)]
pub struct FlatIndex {
    dim: usize,
    ids: Vec<i64>,
    // Row-major flat storage: vector i lives at [i*dim .. (i+1)*dim].
    data: Vec<f32>,
    norms: Vec<f64>,
    seen: HashSet<i64>,
    sealed: bool,
    similarity_evals: AtomicU64,
}

impl FlatIndex {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("index dimension must be at least 1".into()));
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
            seen: HashSet::new(),
            sealed: false,
            similarity_evals: AtomicU64::new(0),
        })
    }

    pub fn with_capacity(dim: usize, capacity: usize) -> Result<Self> {
        let mut index = Self::new(dim)?;
        index.ids.reserve(capacity);
        index.data.reserve(capacity * dim);
        index.seen.reserve(capacity);
        Ok(index)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    /// Cumulative count of cosine-kernel evaluations across all queries.
    /// Each `search_topk` or `brute_force_all` call adds exactly `len()`.
    pub fn similarity_evals(&self) -> u64 {
        self.similarity_evals.load(AtomicOrdering::Relaxed)
    }

    /// Appends one vector. Insertion order is preserved.
    pub fn add(&mut self, id: i64, v: &Embedding) -> Result<()> {
        if self.sealed {
            return Err(Error::IndexSealed);
        }
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.dim(),
            });
        }
        if v.is_zero() {
            return Err(Error::ZeroNorm);
        }
        if !self.seen.insert(id) {
            return Err(Error::DuplicateId(id));
        }
        self.ids.push(id);
        self.data.extend_from_slice(v.values());
        Ok(())
    }

    /// Freezes the corpus and caches one norm per vector. Idempotent.
    pub fn seal(&mut self) {
        if self.sealed {
            return;
        }
        self.norms = self
            .data
            .chunks_exact(self.dim)
            .map(norm_kernel)
            .collect();
        self.sealed = true;
    }

    pub fn cached_norms(&self) -> &[f64] {
        &self.norms
    }

    fn check_query(&self, q: &Embedding) -> Result<f64> {
        if !self.sealed {
            return Err(Error::IndexUnsealed);
        }
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: q.dim(),
            });
        }
        let qnorm = norm_kernel(q.values());
        if qnorm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(qnorm)
    }

    /// Exact top-k by cosine similarity.
    ///
    /// Scans all vectors once, keeping at most k candidates in a min-score
    /// heap; the full score list is never materialized. `k` larger than the
    /// corpus is clamped.
    pub fn search_topk(&self, q: &Embedding, k: usize) -> Result<ResultList> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        let qnorm = self.check_query(q)?;
        let k = k.min(self.len());

        let mut heap: BinaryHeap<Reverse<ScoredDoc>> = BinaryHeap::with_capacity(k + 1);
        for (i, row) in self.data.chunks_exact(self.dim).enumerate() {
            let score = cosine_with_norms(dot_kernel(q.values(), row), qnorm, self.norms[i]);
            let candidate = ScoredDoc::new(score, self.ids[i]);
            if heap.len() < k {
                heap.push(Reverse(candidate));
            } else if let Some(Reverse(worst)) = heap.peek() {
                if candidate > *worst {
                    heap.pop();
                    heap.push(Reverse(candidate));
                }
            }
        }
        self.similarity_evals
            .fetch_add(self.len() as u64, AtomicOrdering::Relaxed);

        let hits = heap
            .into_sorted_vec()
            .into_iter()
            .map(|Reverse(d)| SearchHit {
                id: d.id,
                score: d.score(),
            })
            .collect();
        Ok(ResultList::new(hits, k))
    }

    /// The naive scan: scores every vector, materializes all n hits, and
    /// fully sorts them.
    pub fn brute_force_all(&self, q: &Embedding) -> Result<ResultList> {
        let qnorm = self.check_query(q)?;

        let mut scored: Vec<ScoredDoc> = self
            .data
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| {
                let score = cosine_with_norms(dot_kernel(q.values(), row), qnorm, self.norms[i]);
                ScoredDoc::new(score, self.ids[i])
            })
            .collect();
        self.similarity_evals
            .fetch_add(self.len() as u64, AtomicOrdering::Relaxed);

        scored.sort_unstable_by(|a, b| b.cmp(a));
        let hits = scored
            .into_iter()
            .map(|d| SearchHit {
                id: d.id,
                score: d.score(),
            })
            .collect();
        Ok(ResultList::new(hits, self.len()))
    }
}
