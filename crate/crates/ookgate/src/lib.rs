//! Statistical knowledge-boundary gating for retrieval-augmented generation.
//!
//! A RAG pipeline can only answer a query if its corpus actually covers the
//! topic. This crate decides, per query, whether the query is *in knowledge*
//! (the corpus supports it) or *out of knowledge*, by running a calibrated
//! goodness-of-fit test over embedding-similarity scores:
//!
//! 1. [`vecstore`] stores corpus-chunk embeddings and answers exact
//!    k-nearest-neighbor queries under cosine or dot-product similarity.
//! 2. [`statistics`] maps a query's neighbor list to a scalar test statistic
//!    (max similarity, k-th similarity, mean, softmax entropy, or an energy
//!    score). Larger values mean stronger out-of-knowledge evidence.
//! 3. [`calibration`] estimates the null distribution of a statistic from
//!    in-knowledge (or synthesized) queries via a smoothed empirical CDF,
//!    turns fresh statistics into p-values, and gates at a significance
//!    level. Fisher and Simes combinations aggregate per-rank p-values.
//! 4. [`drift`] runs an offline two-sample Kolmogorov-Smirnov test deciding
//!    whether a deployed batch of queries still matches the calibrated
//!    distribution.
//! 5. [`metrics`] evaluates detectors over labeled score sets (AUROC, AUPRC,
//!    TPR at fixed FPR, detection error rate) with a seeded balanced
//!    sampling protocol.
//! 6. [`ingest`] brings text in: chunking, an embeddings-API client, a
//!    chat-completion client for synthesizing in-knowledge questions, and a
//!    binary embedding file format.
//! 7. [`mock`] provides deterministic in-process mock endpoints so the whole
//!    pipeline runs hermetically.

pub mod calibration;
pub mod drift;
pub mod ingest;
pub mod metrics;
pub mod mock;
pub mod statistics;
pub mod vecstore;

pub use calibration::{
    build_calibration, gate_query, load_calibration, save_calibration, Calibration, GateDecision,
    Provenance,
};
pub use drift::{drift_test, DriftDecision};
pub use metrics::{balanced_eval, EvalReport, LabeledScores};
pub use statistics::{StatisticFamily, StatisticKind};
pub use vecstore::{build_index, knn_search, CorpusIndex, EmbeddingVector, SimilarityMetric};
