//! Flat exact vector index over corpus-chunk embeddings.
//!
//! The index is deliberately a full-scan structure: desk-scale corpora are
//! small, and the downstream calibration is rank-sensitive, so approximate
//! neighbor search would perturb the per-rank null pools. Vectors are stored
//! as 32-bit floats; all similarity arithmetic runs in 64-bit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VecStoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector is undefined under the cosine metric")]
    ZeroVector,
    #[error("non-finite component at position {0}")]
    NonFinite(usize),
    #[error("embedding vector must have at least one component")]
    EmptyVector,
    #[error("corpus must contain at least one document")]
    EmptyCorpus,
    #[error("duplicate doc id {0:?}")]
    DuplicateId(String),
    #[error("{vectors} vectors but {ids} doc ids")]
    CountMismatch { vectors: usize, ids: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("neighbor list entries must be sorted by non-increasing similarity")]
    UnsortedNeighbors,
}

/// A finite, nonempty embedding vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, VecStoreError> {
        if values.is_empty() {
            return Err(VecStoreError::EmptyVector);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(VecStoreError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityMetric {
    Cosine,
    #[serde(rename = "dot")]
    DotProduct,
}

impl fmt::Display for SimilarityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityMetric::Cosine => f.write_str("cosine"),
            SimilarityMetric::DotProduct => f.write_str("dot"),
        }
    }
}

impl FromStr for SimilarityMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(SimilarityMetric::Cosine),
            "dot" => Ok(SimilarityMetric::DotProduct),
            other => Err(format!("unknown metric {other:?}, expected cosine or dot")),
        }
    }
}

fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

fn norm_f64(v: &[f32]) -> f64 {
    dot_f64(v, v).sqrt()
}

/// Similarity between two vectors under the given metric, computed in f64.
pub fn similarity(
    a: &EmbeddingVector,
    b: &EmbeddingVector,
    metric: SimilarityMetric,
) -> Result<f64, VecStoreError> {
    if a.dim() != b.dim() {
        return Err(VecStoreError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    match metric {
        SimilarityMetric::DotProduct => Ok(dot_f64(a.as_slice(), b.as_slice())),
        SimilarityMetric::Cosine => {
            let (na, nb) = (norm_f64(a.as_slice()), norm_f64(b.as_slice()));
            if na == 0.0 || nb == 0.0 {
                return Err(VecStoreError::ZeroVector);
            }
            Ok(dot_f64(a.as_slice(), b.as_slice()) / (na * nb))
        }
    }
}

/// Immutable corpus of embeddings; iteration order equals insertion order.
#[derive(Debug, Clone)]
pub struct CorpusIndex {
    dim: usize,
    metric: SimilarityMetric,
    rows: Vec<f32>,
    doc_ids: Vec<String>,
    texts: Option<Vec<String>>,
    fingerprint: String,
}

impl CorpusIndex {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> SimilarityMetric {
        self.metric
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn text(&self, i: usize) -> Option<&str> {
        self.texts.as_ref().map(|t| t[i].as_str())
    }

    /// Content hash over (dim, metric, doc ids, row bytes). Two indexes with
    /// the same fingerprint score queries identically.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Attaches the chunk texts backing each row.
    pub fn attach_texts(mut self, texts: Vec<String>) -> Result<Self, VecStoreError> {
        if texts.len() != self.len() {
            return Err(VecStoreError::CountMismatch {
                vectors: self.len(),
                ids: texts.len(),
            });
        }
        self.texts = Some(texts);
        Ok(self)
    }
}

fn fingerprint(dim: usize, metric: SimilarityMetric, doc_ids: &[String], rows: &[f32]) -> String {
    let mut h = Sha256::new();
    h.update((dim as u64).to_le_bytes());
    h.update([match metric {
        SimilarityMetric::Cosine => 0u8,
        SimilarityMetric::DotProduct => 1u8,
    }]);
    for id in doc_ids {
        h.update((id.len() as u64).to_le_bytes());
        h.update(id.as_bytes());
    }
    for v in rows {
        h.update(v.to_le_bytes());
    }
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        use fmt::Write;
        write!(out, "{byte:02x}").expect("writing to String cannot fail");
    }
    out
}

/// Builds an immutable index. Under the cosine metric every row must be
/// nonzero, since its similarity would otherwise be undefined.
pub fn build_index(
    vectors: Vec<EmbeddingVector>,
    doc_ids: Vec<String>,
    metric: SimilarityMetric,
) -> Result<CorpusIndex, VecStoreError> {
    if vectors.is_empty() {
        return Err(VecStoreError::EmptyCorpus);
    }
    if vectors.len() != doc_ids.len() {
        return Err(VecStoreError::CountMismatch {
            vectors: vectors.len(),
            ids: doc_ids.len(),
        });
    }
    let dim = vectors[0].dim();
    let mut seen = HashSet::with_capacity(doc_ids.len());
    for id in &doc_ids {
        if !seen.insert(id.as_str()) {
            return Err(VecStoreError::DuplicateId(id.clone()));
        }
    }
    let mut rows = Vec::with_capacity(vectors.len() * dim);
    for v in &vectors {
        if v.dim() != dim {
            return Err(VecStoreError::DimensionMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
        if metric == SimilarityMetric::Cosine && norm_f64(v.as_slice()) == 0.0 {
            return Err(VecStoreError::ZeroVector);
        }
        rows.extend_from_slice(v.as_slice());
    }
    let fingerprint = fingerprint(dim, metric, &doc_ids, &rows);
    Ok(CorpusIndex {
        dim,
        metric,
        rows,
        doc_ids,
        texts: None,
        fingerprint,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub doc_id: String,
    pub similarity: f64,
}

/// Retrieval result: similarities non-increasing, ties broken by ascending
/// doc id, at most `min(k_requested, corpus size)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    entries: Vec<Neighbor>,
    k_requested: usize,
}

impl NeighborList {
    /// Validating constructor for lists built outside `knn_search`.
    pub fn new(entries: Vec<Neighbor>, k_requested: usize) -> Result<Self, VecStoreError> {
        if k_requested == 0 {
            return Err(VecStoreError::ZeroK);
        }
        if entries.windows(2).any(|w| w[0].similarity < w[1].similarity) {
            return Err(VecStoreError::UnsortedNeighbors);
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !e.similarity.is_finite() {
                return Err(VecStoreError::NonFinite(0));
            }
            if !seen.insert(e.doc_id.as_str()) {
                return Err(VecStoreError::DuplicateId(e.doc_id.clone()));
            }
        }
        Ok(Self {
            entries,
            k_requested,
        })
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }

    pub fn similarities(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.similarity)
    }
}

/// Exact k-nearest-neighbor search by full scan.
pub fn knn_search(
    index: &CorpusIndex,
    query: &EmbeddingVector,
    k: usize,
) -> Result<NeighborList, VecStoreError> {
    if k == 0 {
        return Err(VecStoreError::ZeroK);
    }
    if query.dim() != index.dim {
        return Err(VecStoreError::DimensionMismatch {
            expected: index.dim,
            got: query.dim(),
        });
    }
    let q = query.as_slice();
    let (q_norm, q_is_cosine) = match index.metric {
        SimilarityMetric::Cosine => {
            let n = norm_f64(q);
            if n == 0.0 {
                return Err(VecStoreError::ZeroVector);
            }
            (n, true)
        }
        SimilarityMetric::DotProduct => (1.0, false),
    };
    let mut scored: Vec<(usize, f64)> = (0..index.len())
        .map(|i| {
            let row = index.row(i);
            let s = if q_is_cosine {
                // rows are validated nonzero at build time under cosine
                dot_f64(q, row) / (q_norm * norm_f64(row))
            } else {
                dot_f64(q, row)
            };
            (i, s)
        })
        .collect();
    scored.sort_unstable_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.doc_ids[a.0].cmp(&index.doc_ids[b.0]))
    });
    let entries = scored
        .into_iter()
        .take(k)
        .map(|(i, s)| Neighbor {
            doc_id: index.doc_ids[i].clone(),
            similarity: s,
        })
        .collect();
    Ok(NeighborList {
        entries,
        k_requested: k,
    })
}
