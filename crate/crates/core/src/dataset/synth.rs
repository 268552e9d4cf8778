//! Deterministic synthetic corpus with planted queries.
//!
//! Each record's document embedding is a random unit vector; its question
//! embedding is the document perturbed by spherical Gaussian noise and
//! renormalized: `q = normalize(d + noise * g)` with `g ~ N(0, I)`. The
//! planted pairing gives every query a known ground-truth answer, and the
//! noise knob turns recall@k into a tunable curve: 0 leaves queries equal to
//! their documents, while values toward 1 let the (norm ~ sqrt(dim)) noise
//! vector swamp the unit document.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::EnrichedRecord;
use crate::embedding::Embedding;

/// Lazy generator over `n` synthetic records. Documents and noise come from
/// two independent streams of one seeded generator, so document vectors are
/// identical across different noise settings.
pub struct SynthCorpus {
    doc_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    dim: usize,
    noise: f64,
    next: usize,
    n: usize,
}

/// Builds the generator; panics on a zero dimension or a noise level outside
/// `[0, 1]`.
pub fn synth_corpus(n: usize, dim: usize, seed: u64, noise: f64) -> SynthCorpus {
    assert!(dim >= 1, "dimension must be at least 1");
    assert!((0.0..=1.0).contains(&noise), "noise must be in [0, 1]");
    let mut doc_rng = ChaCha8Rng::seed_from_u64(seed);
    doc_rng.set_stream(0);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    SynthCorpus {
        doc_rng,
        noise_rng,
        dim,
        noise,
        next: 0,
        n,
    }
}

fn unit_f32(values: Vec<f64>) -> Embedding {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values = if norm == 0.0 {
        let mut v = values;
        v[0] = 1.0;
        v
    } else {
        values.into_iter().map(|v| v / norm).collect()
    };
    Embedding::new(values.into_iter().map(|v| v as f32).collect())
        .expect("normalized gaussian vector is valid")
}

impl Iterator for SynthCorpus {
    type Item = EnrichedRecord;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.n {
            return None;
        }
        let i = self.next;
        self.next += 1;

        let doc_draws: Vec<f64> = (0..self.dim)
            .map(|_| StandardNormal.sample(&mut self.doc_rng))
            .collect();
        let document = unit_f32(doc_draws);

        let question = if self.noise == 0.0 {
            // Bit-identical planted answer.
            document.clone()
        } else {
            let perturbed: Vec<f64> = document
                .values()
                .iter()
                .map(|d| {
                    let g: f64 = StandardNormal.sample(&mut self.noise_rng);
                    *d as f64 + self.noise * g
                })
                .collect();
            unit_f32(perturbed)
        };

        Some(EnrichedRecord {
            document_embeddings: document,
            document_text: format!("synthetic document {i}"),
            example_id: i as i64,
            question_embeddings: question,
            question_text: format!("synthetic question {i}"),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let remaining = self.n - self.next;
        (remaining, Some(remaining))
    }
}
