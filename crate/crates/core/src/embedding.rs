//! Embedding representation and the shared similarity kernels.
//!
//! Vectors are stored as 32-bit floats (the usual precision of embedding
//! files) while every reduction accumulates in 64-bit, so all backends score
//! documents through exactly the same arithmetic.

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A fixed-dimension dense vector. Components are finite `f32`s and the
/// dimension is at least 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// Validates and wraps raw components. Rejects empty vectors and any
    /// NaN/infinite component.
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyEmbedding);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// True when every component is exactly zero, i.e. the norm is exactly 0.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

impl Serialize for Embedding {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.values.len()))?;
        for v in &self.values {
            seq.serialize_element(v)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EmbeddingVisitor;

        impl<'de> Visitor<'de> for EmbeddingVisitor {
            type Value = Embedding;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an array of finite numbers")
            }

            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Embedding, A::Error> {
                let mut values = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                while let Some(v) = seq.next_element::<f32>()? {
                    values.push(v);
                }
                Embedding::new(values).map_err(serde::de::Error::custom)
            }
        }

        deserializer.deserialize_seq(EmbeddingVisitor)
    }
}

/// Dot product of two equal-length slices, accumulated in `f64`.
///
/// Four independent accumulators keep the reduction order fixed, so repeated
/// calls on the same inputs are bit-identical.
#[inline]
pub(crate) fn dot_kernel(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc0 = 0.0f64;
    let mut acc1 = 0.0f64;
    let mut acc2 = 0.0f64;
    let mut acc3 = 0.0f64;
    let mut i = 0usize;
    while i + 4 <= a.len() {
        acc0 += a[i] as f64 * b[i] as f64;
        acc1 += a[i + 1] as f64 * b[i + 1] as f64;
        acc2 += a[i + 2] as f64 * b[i + 2] as f64;
        acc3 += a[i + 3] as f64 * b[i + 3] as f64;
        i += 4;
    }
    let mut out = (acc0 + acc1) + (acc2 + acc3);
    while i < a.len() {
        out += a[i] as f64 * b[i] as f64;
        i += 1;
    }
    out
}

#[inline]
pub(crate) fn norm_kernel(a: &[f32]) -> f64 {
    dot_kernel(a, a).sqrt()
}

/// Cosine of pre-validated operands with known positive norms. Clamped to
/// `[-1, 1]` so downstream rank comparisons never see out-of-range scores.
#[inline]
pub(crate) fn cosine_with_norms(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    (dot / (norm_a * norm_b)).clamp(-1.0, 1.0)
}

/// Dot product of two embeddings, accumulated in 64-bit precision.
pub fn dot(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(dot_kernel(a.values(), b.values()))
}

/// Euclidean norm, `sqrt(dot(a, a))`.
pub fn norm(a: &Embedding) -> f64 {
    norm_kernel(a.values())
}

/// Cosine similarity `dot(a,b) / (norm(a) * norm(b))`, clamped to `[-1, 1]`.
///
/// Zero-norm operands are rejected rather than silently scored 0: the
/// quotient is undefined there and a silent default would corrupt the
/// agreement metrics downstream.
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    let d = dot(a, b)?;
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(cosine_with_norms(d, na, nb))
}
