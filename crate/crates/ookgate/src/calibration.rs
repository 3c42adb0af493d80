//! Empirical null model, p-values, and the online gate.
//!
//! Calibration estimates the distribution of a test statistic over queries
//! known to be in knowledge, using the smoothed empirical CDF
//!
//! ```text
//! F(t) = (1 + #{samples <= t}) / (1 + n)
//! ```
//!
//! A fresh query is gated by its p-value `1 - F(t)`; the null hypothesis
//! "in knowledge" is rejected when `p <= alpha`. The equivalent critical
//! value formulation (reject when the statistic reaches the smallest sample
//! whose CDF mass exceeds `1 - alpha`) is exposed for reporting, but the
//! p-value rule is canonical: with a discrete CDF the two can disagree on
//! probes exactly tied below the critical sample.
//!
//! Fisher and Simes variants combine per-rank p-values, one univariate test
//! per neighbor rank. Their calibration aggregates are computed against the
//! full rank pools including each query's own contribution; the +1 smoothing
//! absorbs the self-inclusion.

use crate::statistics::{compute_score, StatisticError, StatisticFamily, StatisticKind};
use crate::vecstore::{knn_search, CorpusIndex, EmbeddingVector, NeighborList, SimilarityMetric, VecStoreError};
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("sample list is empty")]
    EmptySamples,
    #[error("probe value must be finite")]
    NonFiniteProbe,
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("calibration query set is empty")]
    EmptyCalibrationSet,
    #[error("query dimension {got} does not match calibration dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("p-value list is empty")]
    EmptyPValues,
    #[error("p-value {0} outside [0, 1]")]
    PValueOutOfRange(f64),
    #[error("neighbor list has {got} entries but the calibration needs {need} ranks")]
    NeighborListTooShort { need: usize, got: usize },
    #[error("epsilon must lie in (0, 1), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("unsupported calibration file version {0:?}")]
    UnsupportedVersion(String),
    #[error("calibration file violates an invariant: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    VecStore(#[from] VecStoreError),
    #[error(transparent)]
    Statistic(#[from] StatisticError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("calibration file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Calibrated on queries known to be answerable from the corpus.
    TrueInKnowledge,
    /// Calibrated on questions synthesized from corpus chunks by a language
    /// model. The type I error of the gate is then only approximately
    /// bounded by alpha.
    Synthetic,
}

/// The calibrated null model for one statistic over one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    kind: StatisticKind,
    metric: SimilarityMetric,
    dim: usize,
    n_cal: usize,
    provenance: Provenance,
    corpus_fingerprint: String,
    sorted_stats: Vec<f64>,
    rank_pools: Vec<Vec<f64>>,
}

impl Calibration {
    /// Effective statistic kind; `k` may be smaller than requested when the
    /// corpus has fewer documents.
    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn metric(&self) -> SimilarityMetric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_cal(&self) -> usize {
        self.n_cal
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn corpus_fingerprint(&self) -> &str {
        &self.corpus_fingerprint
    }

    /// Aggregate statistic per calibration query, ascending.
    pub fn sorted_stats(&self) -> &[f64] {
        &self.sorted_stats
    }

    /// Per-rank pools of negated similarities, each ascending; pool `i`
    /// holds rank `i + 1` across all calibration queries.
    pub fn rank_pools(&self) -> &[Vec<f64>] {
        &self.rank_pools
    }

    /// Computes the calibrated aggregate statistic of one query. Larger
    /// means more likely out of knowledge, for every family.
    pub fn statistic(
        &self,
        index: &CorpusIndex,
        query: &EmbeddingVector,
    ) -> Result<f64, CalibrationError> {
        if query.dim() != self.dim {
            return Err(CalibrationError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        let nb = knn_search(index, query, self.kind.k)?;
        self.statistic_of_neighbors(&nb)
    }

    fn statistic_of_neighbors(&self, nb: &NeighborList) -> Result<f64, CalibrationError> {
        match self.kind.family {
            StatisticFamily::Fisher => {
                let ps = per_rank_p_values(self, nb)?;
                fisher_combine(&ps)
            }
            StatisticFamily::Simes => {
                let ps = per_rank_p_values(self, nb)?;
                Ok(-simes_combine(&ps)?)
            }
            _ => Ok(compute_score(self.kind, nb)?.value),
        }
    }
}

/// One gate outcome. `reject` means the query was judged out of knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateDecision {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub kind: StatisticKind,
}

/// Smoothed empirical CDF `(1 + #{samples <= t}) / (1 + n)`.
pub fn ecdf_eval(sorted_samples: &[f64], t: f64) -> Result<f64, CalibrationError> {
    if sorted_samples.is_empty() {
        return Err(CalibrationError::EmptySamples);
    }
    if !t.is_finite() {
        return Err(CalibrationError::NonFiniteProbe);
    }
    let count = sorted_samples.partition_point(|&x| x <= t);
    Ok((1 + count) as f64 / (1 + sorted_samples.len()) as f64)
}

/// Smallest sample whose smoothed CDF mass exceeds `1 - alpha`. Exists for
/// every `alpha` in (0, 1) because the CDF reaches 1 at the maximum sample.
pub fn critical_value_from_sorted(
    sorted_samples: &[f64],
    alpha: f64,
) -> Result<f64, CalibrationError> {
    if sorted_samples.is_empty() {
        return Err(CalibrationError::EmptySamples);
    }
    check_alpha(alpha)?;
    let n = sorted_samples.len();
    let target = 1.0 - alpha;
    // the CDF at a sample is non-decreasing along the sorted order
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let mass = ecdf_eval(sorted_samples, sorted_samples[mid])?;
        if mass > target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(sorted_samples[lo])
}

fn check_alpha(alpha: f64) -> Result<(), CalibrationError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CalibrationError::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// `1 - F(t)` against the calibration aggregates. Ranges over
/// `[0, n / (1 + n)]`; zero is reachable when `t` exceeds every sample.
pub fn p_value(cal: &Calibration, t: f64) -> Result<f64, CalibrationError> {
    Ok(1.0 - ecdf_eval(&cal.sorted_stats, t)?)
}

/// Rejection boundary of the gate at significance `alpha`.
pub fn critical_value(cal: &Calibration, alpha: f64) -> Result<f64, CalibrationError> {
    critical_value_from_sorted(&cal.sorted_stats, alpha)
}

/// Builds the null model from in-knowledge (or synthesized) queries.
///
/// The retrieval depth is clamped to the corpus size and the clamped kind is
/// recorded, so gating against a tiny corpus reproduces calibration exactly.
pub fn build_calibration(
    index: &CorpusIndex,
    cal_queries: &[EmbeddingVector],
    kind: StatisticKind,
    provenance: Provenance,
) -> Result<Calibration, CalibrationError> {
    if cal_queries.is_empty() {
        return Err(CalibrationError::EmptyCalibrationSet);
    }
    let eff_k = kind.k.min(index.len());
    let kind = StatisticKind::new(kind.family, eff_k, kind.rank_j.min(eff_k), kind.tau)?;

    let n = cal_queries.len();
    // per-query negated similarities, one entry per rank
    let mut per_query: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut aggregates: Vec<f64> = Vec::with_capacity(n);
    for query in cal_queries {
        let nb = knn_search(index, query, eff_k)?;
        per_query.push(nb.similarities().map(|s| -s).collect());
        if !kind.family.is_meta() {
            aggregates.push(compute_score(kind, &nb)?.value);
        }
    }

    let mut rank_pools: Vec<Vec<f64>> = vec![Vec::with_capacity(n); eff_k];
    for row in &per_query {
        for (pool, &v) in rank_pools.iter_mut().zip(row) {
            pool.push(v);
        }
    }
    for pool in &mut rank_pools {
        pool.sort_unstable_by(f64::total_cmp);
    }

    if kind.family.is_meta() {
        for row in &per_query {
            let ps = row
                .iter()
                .zip(&rank_pools)
                .map(|(&v, pool)| Ok(1.0 - ecdf_eval(pool, v)?))
                .collect::<Result<Vec<f64>, CalibrationError>>()?;
            let aggregate = match kind.family {
                StatisticFamily::Fisher => fisher_combine(&ps)?,
                StatisticFamily::Simes => -simes_combine(&ps)?,
                _ => unreachable!(),
            };
            aggregates.push(aggregate);
        }
    }
    aggregates.sort_unstable_by(f64::total_cmp);

    Ok(Calibration {
        kind,
        metric: index.metric(),
        dim: index.dim(),
        n_cal: n,
        provenance,
        corpus_fingerprint: index.fingerprint().to_string(),
        sorted_stats: aggregates,
        rank_pools,
    })
}

/// One p-value per neighbor rank, each against that rank's calibration pool.
pub fn per_rank_p_values(
    cal: &Calibration,
    nb: &NeighborList,
) -> Result<Vec<f64>, CalibrationError> {
    let need = cal.rank_pools.len();
    if nb.len() < need {
        return Err(CalibrationError::NeighborListTooShort {
            need,
            got: nb.len(),
        });
    }
    nb.entries()[..need]
        .iter()
        .zip(&cal.rank_pools)
        .map(|(e, pool)| Ok(1.0 - ecdf_eval(pool, -e.similarity)?))
        .collect()
}

fn check_p_values(p_values: &[f64]) -> Result<(), CalibrationError> {
    if p_values.is_empty() {
        return Err(CalibrationError::EmptyPValues);
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(CalibrationError::PValueOutOfRange(p));
        }
    }
    Ok(())
}

/// Fisher-style aggregate `-2 * sum(p_i)`.
///
/// This is the summation form; the classical logarithmic Fisher statistic is
/// available as [`fisher_combine_log`]. The summation form is the default
/// throughout calibration and gating.
pub fn fisher_combine(p_values: &[f64]) -> Result<f64, CalibrationError> {
    check_p_values(p_values)?;
    Ok(-2.0 * p_values.iter().sum::<f64>())
}

/// Classical Fisher statistic `-2 * sum(ln(max(p_i, epsilon)))`. The floor
/// keeps zero p-values (reachable under the smoothed CDF) finite; a natural
/// choice is `1 / (1 + n_cal)`, one smoothing step.
pub fn fisher_combine_log(p_values: &[f64], epsilon: f64) -> Result<f64, CalibrationError> {
    check_p_values(p_values)?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CalibrationError::EpsilonOutOfRange(epsilon));
    }
    Ok(-2.0 * p_values.iter().map(|&p| p.max(epsilon).ln()).sum::<f64>())
}

/// Simes combination `min_i (k * p_(i) / i)` over the ascending order
/// statistics; itself a global p-value.
pub fn simes_combine(p_values: &[f64]) -> Result<f64, CalibrationError> {
    check_p_values(p_values)?;
    let mut sorted = p_values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let k = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &p)| k * p / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min))
}

/// Gates one query: statistic, p-value, and the reject decision at `alpha`.
///
/// A fingerprint mismatch between the calibration and the index is warned
/// about but tolerated, so calibrations can knowingly be reused across
/// corpus refreshes.
pub fn gate_query(
    cal: &Calibration,
    index: &CorpusIndex,
    query: &EmbeddingVector,
    alpha: f64,
) -> Result<GateDecision, CalibrationError> {
    check_alpha(alpha)?;
    if index.fingerprint() != cal.corpus_fingerprint {
        log::warn!(
            "corpus fingerprint {} does not match calibration fingerprint {}; \
             gating anyway",
            index.fingerprint(),
            cal.corpus_fingerprint
        );
    }
    let statistic = cal.statistic(index, query)?;
    let p = match cal.kind.family {
        // the Simes combination is already a p-value; its negation is the
        // reported statistic so that all kinds share one orientation
        StatisticFamily::Simes => -statistic,
        _ => p_value(cal, statistic)?,
    };
    Ok(GateDecision {
        statistic,
        p_value: p,
        alpha,
        reject: p <= alpha,
        kind: cal.kind,
    })
}

const FILE_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
struct CalibrationFile {
    version: String,
    kind: StatisticFamily,
    k: usize,
    rank_j: usize,
    tau: f64,
    metric: SimilarityMetric,
    dim: usize,
    n_cal: usize,
    provenance: Provenance,
    corpus_fingerprint: String,
    sorted_stats: Vec<f64>,
    rank_pools: Vec<Vec<f64>>,
}

/// Writes the calibration as JSON. Floats survive the round trip bit-exact.
pub fn save_calibration(cal: &Calibration, path: &Path) -> Result<(), CalibrationError> {
    let file = CalibrationFile {
        version: FILE_VERSION.to_string(),
        kind: cal.kind.family,
        k: cal.kind.k,
        rank_j: cal.kind.rank_j,
        tau: cal.kind.tau,
        metric: cal.metric,
        dim: cal.dim,
        n_cal: cal.n_cal,
        provenance: cal.provenance,
        corpus_fingerprint: cal.corpus_fingerprint.clone(),
        sorted_stats: cal.sorted_stats.clone(),
        rank_pools: cal.rank_pools.clone(),
    };
    let writer = BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(writer, &file)?;
    Ok(())
}

fn ensure(cond: bool, msg: &str) -> Result<(), CalibrationError> {
    if cond {
        Ok(())
    } else {
        Err(CalibrationError::InvariantViolation(msg.to_string()))
    }
}

fn is_sorted_ascending(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
        && values.windows(2).all(|w| w[0] <= w[1])
}

/// Reads and validates a calibration file.
pub fn load_calibration(path: &Path) -> Result<Calibration, CalibrationError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let file: CalibrationFile = serde_json::from_reader(reader)?;
    if file.version != FILE_VERSION {
        return Err(CalibrationError::UnsupportedVersion(file.version));
    }
    let kind = StatisticKind::new(file.kind, file.k, file.rank_j, file.tau)
        .map_err(|e| CalibrationError::InvariantViolation(e.to_string()))?;
    ensure(file.dim >= 1, "dim must be at least 1")?;
    ensure(file.n_cal >= 1, "n_cal must be at least 1")?;
    ensure(
        file.sorted_stats.len() == file.n_cal,
        "sorted_stats length must equal n_cal",
    )?;
    ensure(
        file.rank_pools.len() == file.k,
        "rank_pools must hold one pool per rank",
    )?;
    ensure(
        file.rank_pools.iter().all(|p| p.len() == file.n_cal),
        "every rank pool must have n_cal entries",
    )?;
    ensure(
        is_sorted_ascending(&file.sorted_stats),
        "sorted_stats must be finite and ascending",
    )?;
    ensure(
        file.rank_pools.iter().all(|p| is_sorted_ascending(p)),
        "rank pools must be finite and ascending",
    )?;
    Ok(Calibration {
        kind,
        metric: file.metric,
        dim: file.dim,
        n_cal: file.n_cal,
        provenance: file.provenance,
        corpus_fingerprint: file.corpus_fingerprint,
        sorted_stats: file.sorted_stats,
        rank_pools: file.rank_pools,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecstore::build_index;
    use proptest::prelude::*;

    fn ev(values: &[f32]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(ecdf_eval(&s, 2.0).unwrap(), 0.75);
        assert_eq!(ecdf_eval(&s, 0.5).unwrap(), 0.25);
        assert_eq!(ecdf_eval(&s, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn ecdf_rejects_bad_input() {
        assert!(matches!(
            ecdf_eval(&[], 1.0).unwrap_err(),
            CalibrationError::EmptySamples
        ));
        assert!(matches!(
            ecdf_eval(&[1.0], f64::NAN).unwrap_err(),
            CalibrationError::NonFiniteProbe
        ));
    }

    /// Calibration over a 1-dim dot-product corpus with a single unit doc:
    /// each query's max similarity equals its sole component.
    fn mss_cal(stat_negs: &[f32]) -> (Calibration, CorpusIndex) {
        let index = build_index(
            vec![ev(&[1.0])],
            vec!["doc".into()],
            SimilarityMetric::DotProduct,
        )
        .unwrap();
        let queries: Vec<EmbeddingVector> = stat_negs.iter().map(|&s| ev(&[s])).collect();
        let kind = StatisticKind::new(StatisticFamily::Mss, 1, 1, 1.0).unwrap();
        let cal = build_calibration(&index, &queries, kind, Provenance::TrueInKnowledge).unwrap();
        (cal, index)
    }

    #[test]
    fn p_value_examples() {
        let (cal, _) = mss_cal(&[0.9, 0.8, 0.7]);
        for (got, want) in cal.sorted_stats().iter().zip([-0.9, -0.8, -0.7]) {
            // query components round through 32-bit storage
            assert!((got - want).abs() < 1e-6);
        }
        assert_eq!(p_value(&cal, -0.75).unwrap(), 0.25);
        assert_eq!(p_value(&cal, -5.0).unwrap(), 0.75);
        assert_eq!(p_value(&cal, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn critical_value_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(critical_value_from_sorted(&s, 0.05).unwrap(), 3.0);
        assert_eq!(critical_value_from_sorted(&s, 0.5).unwrap(), 2.0);
        assert_eq!(critical_value_from_sorted(&[5.0], 0.3).unwrap(), 5.0);
        assert_eq!(critical_value_from_sorted(&[5.0], 0.99).unwrap(), 5.0);
        assert!(matches!(
            critical_value_from_sorted(&s, 0.0).unwrap_err(),
            CalibrationError::AlphaOutOfRange(_)
        ));
        assert!(matches!(
            critical_value_from_sorted(&s, 1.0).unwrap_err(),
            CalibrationError::AlphaOutOfRange(_)
        ));
    }

    #[test]
    fn build_calibration_sorts_negated_max_similarities() {
        let index = build_index(
            vec![ev(&[1.0, 0.0]), ev(&[0.0, 1.0]), ev(&[0.6, 0.8])],
            vec!["d1".into(), "d2".into(), "d3".into()],
            SimilarityMetric::Cosine,
        )
        .unwrap();
        let queries = vec![ev(&[1.0, 0.0]), ev(&[0.0, 1.0]), ev(&[1.0, 1.0])];
        let kind = StatisticKind::new(StatisticFamily::Mss, 2, 2, 1.0).unwrap();
        let cal = build_calibration(&index, &queries, kind, Provenance::TrueInKnowledge).unwrap();
        // brute force: max cosine of each query against the three rows
        let mut expected: Vec<f64> = queries
            .iter()
            .map(|q| {
                let top = knn_search(&index, q, 1).unwrap();
                -top.entries()[0].similarity
            })
            .collect();
        expected.sort_unstable_by(f64::total_cmp);
        assert_eq!(cal.sorted_stats(), expected.as_slice());
        assert_eq!(cal.n_cal(), 3);
        assert_eq!(cal.rank_pools().len(), 2);
    }

    #[test]
    fn build_calibration_rejects_empty_query_set() {
        let index = build_index(
            vec![ev(&[1.0])],
            vec!["d".into()],
            SimilarityMetric::DotProduct,
        )
        .unwrap();
        let kind = StatisticKind::with_defaults(StatisticFamily::Mss);
        assert!(matches!(
            build_calibration(&index, &[], kind, Provenance::TrueInKnowledge).unwrap_err(),
            CalibrationError::EmptyCalibrationSet
        ));
    }

    #[test]
    fn build_calibration_clamps_k_to_corpus_size() {
        let index = build_index(
            vec![ev(&[1.0]), ev(&[0.5])],
            vec!["a".into(), "b".into()],
            SimilarityMetric::DotProduct,
        )
        .unwrap();
        let kind = StatisticKind::with_defaults(StatisticFamily::AvgKnn);
        let cal =
            build_calibration(&index, &[ev(&[1.0])], kind, Provenance::TrueInKnowledge).unwrap();
        assert_eq!(cal.kind().k, 2);
        assert_eq!(cal.kind().rank_j, 2);
        assert_eq!(cal.rank_pools().len(), 2);
        assert_eq!(cal.rank_pools()[0].len(), 1);
    }

    #[test]
    fn fisher_combine_examples() {
        assert_eq!(fisher_combine(&[1.0, 1.0, 1.0]).unwrap(), -6.0);
        assert_eq!(fisher_combine(&[0.5, 0.5]).unwrap(), -2.0);
        assert_eq!(fisher_combine(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            fisher_combine(&[]).unwrap_err(),
            CalibrationError::EmptyPValues
        ));
        assert!(matches!(
            fisher_combine(&[1.5]).unwrap_err(),
            CalibrationError::PValueOutOfRange(_)
        ));
    }

    #[test]
    fn fisher_log_mode_floors_zero_p_values() {
        let eps = 0.25;
        let got = fisher_combine_log(&[0.0, 1.0], eps).unwrap();
        assert!((got - (-2.0 * eps.ln())).abs() < 1e-12);
        assert!(matches!(
            fisher_combine_log(&[0.5], 0.0).unwrap_err(),
            CalibrationError::EpsilonOutOfRange(_)
        ));
    }

    #[test]
    fn simes_combine_examples() {
        let p = simes_combine(&[1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let p = simes_combine(&[0.01, 0.5, 0.9]).unwrap();
        assert!((p - 0.03).abs() < 1e-12);
        assert_eq!(simes_combine(&[0.2]).unwrap(), 0.2);
    }

    #[test]
    fn simes_dominates_k_times_min() {
        let ps = [0.3, 0.1, 0.7, 0.2];
        let combined = simes_combine(&ps).unwrap();
        assert!(combined <= ps.len() as f64 * 0.1 + 1e-15);
    }

    #[test]
    fn gate_examples() {
        let (cal, index) = mss_cal(&[0.9, 0.8, 0.7]);
        let d = gate_query(&cal, &index, &ev(&[0.75]), 0.05).unwrap();
        assert_eq!(d.p_value, 0.25);
        assert!(!d.reject);
        assert_eq!(d.statistic, -0.75);

        let d = gate_query(&cal, &index, &ev(&[0.1]), 0.05).unwrap();
        assert_eq!(d.p_value, 0.0);
        assert!(d.reject);
    }

    #[test]
    fn gate_of_repeated_calibration_query_is_deterministic() {
        let (cal, index) = mss_cal(&[0.9, 0.8, 0.7]);
        // identical to the calibration query with the smallest statistic:
        // smoothing leaves a full step of p-value above it
        let first = gate_query(&cal, &index, &ev(&[0.9]), 0.05).unwrap();
        let second = gate_query(&cal, &index, &ev(&[0.9]), 0.05).unwrap();
        assert_eq!(first, second);
        assert!(first.p_value >= 1.0 / 4.0);
        // the query matching the largest calibration statistic sits at the
        // top of the smoothed CDF, where the literal formula yields p = 0
        let top = gate_query(&cal, &index, &ev(&[0.7]), 0.05).unwrap();
        assert_eq!(top.p_value, 0.0);
    }

    #[test]
    fn gate_rejects_bad_alpha() {
        let (cal, index) = mss_cal(&[0.9]);
        for alpha in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(matches!(
                gate_query(&cal, &index, &ev(&[0.5]), alpha).unwrap_err(),
                CalibrationError::AlphaOutOfRange(_)
            ));
        }
    }

    #[test]
    fn per_rank_p_value_extremes() {
        let index = build_index(
            vec![ev(&[1.0]), ev(&[0.5])],
            vec!["a".into(), "b".into()],
            SimilarityMetric::DotProduct,
        )
        .unwrap();
        let queries = vec![ev(&[0.7]), ev(&[0.8]), ev(&[0.9])];
        let kind = StatisticKind::new(StatisticFamily::Fisher, 2, 2, 1.0).unwrap();
        let cal = build_calibration(&index, &queries, kind, Provenance::TrueInKnowledge).unwrap();
        let n = cal.n_cal() as f64;

        // similarities above every calibration query at every rank
        let nb = knn_search(&index, &ev(&[2.0]), 2).unwrap();
        let ps = per_rank_p_values(&cal, &nb).unwrap();
        assert!(ps.iter().all(|&p| (p - n / (n + 1.0)).abs() < 1e-15));

        // similarities below every calibration query at every rank
        let nb = knn_search(&index, &ev(&[0.1]), 2).unwrap();
        let ps = per_rank_p_values(&cal, &nb).unwrap();
        assert!(ps.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn per_rank_reuses_ecdf_arithmetic() {
        let (cal, index) = mss_cal(&[0.9, 0.8, 0.7]);
        // rank-1 pool is {-0.9, -0.8, -0.7}; a query with similarity 0.75
        // probes it at -0.75
        let nb = knn_search(&index, &ev(&[0.75]), 1).unwrap();
        let ps = per_rank_p_values(&cal, &nb).unwrap();
        assert_eq!(ps, vec![0.25]);
    }

    #[test]
    fn per_rank_requires_enough_neighbors() {
        let index = build_index(
            vec![ev(&[1.0]), ev(&[0.5])],
            vec!["a".into(), "b".into()],
            SimilarityMetric::DotProduct,
        )
        .unwrap();
        let kind = StatisticKind::new(StatisticFamily::Fisher, 2, 2, 1.0).unwrap();
        let cal = build_calibration(&index, &[ev(&[0.7])], kind, Provenance::TrueInKnowledge)
            .unwrap();
        let nb = knn_search(&index, &ev(&[0.7]), 1).unwrap();
        assert!(matches!(
            per_rank_p_values(&cal, &nb).unwrap_err(),
            CalibrationError::NeighborListTooShort { need: 2, got: 1 }
        ));
    }

    #[test]
    fn fisher_gate_separates_far_queries() {
        let index = build_index(
            vec![ev(&[1.0, 0.0]), ev(&[0.9, 0.1]), ev(&[0.8, 0.2])],
            vec!["a".into(), "b".into(), "c".into()],
            SimilarityMetric::Cosine,
        )
        .unwrap();
        let queries: Vec<EmbeddingVector> = (0..20)
            .map(|i| ev(&[1.0, 0.01 * i as f32]))
            .collect();
        let kind = StatisticKind::new(StatisticFamily::Fisher, 3, 3, 1.0).unwrap();
        let cal = build_calibration(&index, &queries, kind, Provenance::TrueInKnowledge).unwrap();
        // orthogonal probe: similarities below every pool at every rank
        let far = gate_query(&cal, &index, &ev(&[0.0, 1.0]), 0.05).unwrap();
        assert!(far.reject);
        assert_eq!(far.p_value, 0.0);
        // a familiar probe is not rejected
        let near = gate_query(&cal, &index, &ev(&[1.0, 0.05]), 0.05).unwrap();
        assert!(!near.reject);
    }

    #[test]
    fn simes_gate_uses_combination_as_p_value() {
        let index = build_index(
            vec![ev(&[1.0, 0.0]), ev(&[0.9, 0.1]), ev(&[0.8, 0.2])],
            vec!["a".into(), "b".into(), "c".into()],
            SimilarityMetric::Cosine,
        )
        .unwrap();
        let queries: Vec<EmbeddingVector> = (0..20)
            .map(|i| ev(&[1.0, 0.01 * i as f32]))
            .collect();
        let kind = StatisticKind::new(StatisticFamily::Simes, 3, 3, 1.0).unwrap();
        let cal = build_calibration(&index, &queries, kind, Provenance::TrueInKnowledge).unwrap();
        let d = gate_query(&cal, &index, &ev(&[0.0, 1.0]), 0.05).unwrap();
        assert_eq!(d.statistic, -d.p_value);
        assert!(d.reject);
        assert!((0.0..=1.0).contains(&d.p_value));
    }

    #[test]
    fn save_load_round_trips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.json");
        let index = build_index(
            vec![ev(&[1.0, 0.0]), ev(&[0.6, 0.8])],
            vec!["a".into(), "b".into()],
            SimilarityMetric::Cosine,
        )
        .unwrap();
        let queries = vec![ev(&[0.9, 0.1]), ev(&[0.3, 0.7]), ev(&[0.5, 0.5])];
        for family in StatisticFamily::ALL {
            let kind = StatisticKind::new(family, 2, 2, 1.7).unwrap();
            let cal =
                build_calibration(&index, &queries, kind, Provenance::Synthetic).unwrap();
            save_calibration(&cal, &path).unwrap();
            let loaded = load_calibration(&path).unwrap();
            assert_eq!(cal, loaded);
        }
    }

    #[test]
    fn load_rejects_tampered_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.json");
        let (cal, _) = mss_cal(&[0.9, 0.8, 0.7]);
        save_calibration(&cal, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        // wrong version tag
        let bad = text.replace("\"version\":\"1\"", "\"version\":\"9\"");
        std::fs::write(&path, bad).unwrap();
        assert!(matches!(
            load_calibration(&path).unwrap_err(),
            CalibrationError::UnsupportedVersion(v) if v == "9"
        ));

        // corrupted sort order
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let stats = doc["sorted_stats"].as_array_mut().unwrap();
        stats.reverse();
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert!(matches!(
            load_calibration(&path).unwrap_err(),
            CalibrationError::InvariantViolation(_)
        ));

        // pool count disagreeing with k
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["rank_pools"].as_array_mut().unwrap().clear();
        std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
        assert!(matches!(
            load_calibration(&path).unwrap_err(),
            CalibrationError::InvariantViolation(_)
        ));
    }

    proptest! {
        #[test]
        fn ecdf_matches_exhaustive_count(
            mut samples in prop::collection::vec(-100.0f64..100.0, 1..200),
            probes in prop::collection::vec(-150.0f64..150.0, 1..20),
        ) {
            samples.sort_unstable_by(f64::total_cmp);
            for t in probes {
                let count = samples.iter().filter(|&&x| x <= t).count();
                let oracle = (1 + count) as f64 / (1 + samples.len()) as f64;
                prop_assert_eq!(ecdf_eval(&samples, t).unwrap(), oracle);
            }
        }

        #[test]
        fn p_value_floor_at_minimum_sample(
            mut samples in prop::collection::vec(-100.0f64..100.0, 1..200),
        ) {
            samples.sort_unstable_by(f64::total_cmp);
            samples.dedup();
            let n = samples.len() as f64;
            // a probe tied with the smallest sample keeps a full smoothing
            // step of p-value above it
            let p = 1.0 - ecdf_eval(&samples, samples[0]).unwrap();
            prop_assert!((p - (1.0 - 2.0 / (1.0 + n))).abs() < 1e-12);
        }

        #[test]
        fn decision_rules_agree_on_continuous_data(
            mut samples in prop::collection::vec(-100.0f64..100.0, 2..150),
            probes in prop::collection::vec(-120.0f64..120.0, 1..30),
            alpha in 0.01f64..0.99,
        ) {
            samples.sort_unstable_by(f64::total_cmp);
            samples.dedup();
            // above the attainable p-value maximum n/(n+1) the p-rule
            // rejects even probes below every sample, which no score-space
            // threshold can express
            let n = samples.len() as f64;
            prop_assume!(alpha < n / (n + 1.0));
            let c = critical_value_from_sorted(&samples, alpha).unwrap();
            for t in probes {
                // skip probes exactly tied with a sample; ties are where the
                // two formulations can legitimately disagree
                if samples.binary_search_by(|x| x.total_cmp(&t)).is_ok() { continue; }
                let p = 1.0 - ecdf_eval(&samples, t).unwrap();
                if p < alpha {
                    prop_assert!(t >= c);
                } else if p > alpha {
                    prop_assert!(t < c);
                }
                // at p == alpha the p-rule rejects while the
                // strictly-greater critical value does not; the p-rule is
                // canonical, so exact boundary hits are allowed to differ
            }
        }

        #[test]
        fn p_value_is_monotone_nonincreasing(
            mut samples in prop::collection::vec(-100.0f64..100.0, 1..100),
            t1 in -120.0f64..120.0,
            dt in 0.0f64..50.0,
        ) {
            samples.sort_unstable_by(f64::total_cmp);
            let p1 = 1.0 - ecdf_eval(&samples, t1).unwrap();
            let p2 = 1.0 - ecdf_eval(&samples, t1 + dt).unwrap();
            prop_assert!(p2 <= p1);
        }

        #[test]
        fn critical_value_is_monotone_in_alpha(
            mut samples in prop::collection::vec(-100.0f64..100.0, 1..100),
            a1 in 0.01f64..0.98,
            da in 0.0f64..0.5,
        ) {
            samples.sort_unstable_by(f64::total_cmp);
            let a2 = (a1 + da).min(0.99);
            let c1 = critical_value_from_sorted(&samples, a1).unwrap();
            let c2 = critical_value_from_sorted(&samples, a2).unwrap();
            prop_assert!(c2 <= c1);
        }

        #[test]
        fn fisher_is_monotone_as_any_p_decreases(
            ps in prop::collection::vec(0.01f64..1.0, 1..20),
            idx in 0usize..20,
            shrink in 0.1f64..0.9,
        ) {
            let idx = idx % ps.len();
            let mut smaller = ps.clone();
            smaller[idx] *= shrink;
            let a = fisher_combine(&ps).unwrap();
            let b = fisher_combine(&smaller).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn simes_never_exceeds_k_times_min(ps in prop::collection::vec(0.0f64..1.0, 1..20)) {
            let combined = simes_combine(&ps).unwrap();
            let min = ps.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(combined <= ps.len() as f64 * min + 1e-12);
            prop_assert!(combined >= 0.0);
        }
    }
}
