//! Per-query test statistics over a retrieved neighbor list.
//!
//! Every statistic shares one orientation: larger values mean stronger
//! evidence that the query is out of knowledge. Similarity-based statistics
//! are therefore negated similarities. Softmax and log-sum-exp terms use the
//! natural logarithm and are computed with max subtraction, since dot-product
//! similarities over unnormalized embeddings can be large enough to overflow
//! a raw exponential.

use crate::vecstore::NeighborList;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Default retrieval depth.
pub const DEFAULT_K: usize = 32;
/// Default energy temperature.
pub const DEFAULT_TAU: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum StatisticError {
    #[error("neighbor list is empty")]
    EmptyNeighborList,
    #[error("rank {j} out of range for {len} neighbors")]
    RankOutOfRange { j: usize, len: usize },
    #[error("tau must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("rank_j must satisfy 1 <= rank_j <= k, got rank_j={rank_j} with k={k}")]
    RankExceedsK { rank_j: usize, k: usize },
    #[error("{0} is a meta-analytic test and requires a calibrated null model")]
    MetaKindRequiresCalibration(StatisticFamily),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticFamily {
    Mss,
    Knn,
    AvgKnn,
    Entropy,
    Energy,
    Fisher,
    Simes,
}

impl StatisticFamily {
    /// Fisher and Simes aggregate per-rank p-values and cannot be computed
    /// from a single neighbor list alone.
    pub fn is_meta(self) -> bool {
        matches!(self, StatisticFamily::Fisher | StatisticFamily::Simes)
    }

    pub const ALL: [StatisticFamily; 7] = [
        StatisticFamily::Mss,
        StatisticFamily::Knn,
        StatisticFamily::AvgKnn,
        StatisticFamily::Entropy,
        StatisticFamily::Energy,
        StatisticFamily::Fisher,
        StatisticFamily::Simes,
    ];
}

impl fmt::Display for StatisticFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let token = match self {
            StatisticFamily::Mss => "mss",
            StatisticFamily::Knn => "knn",
            StatisticFamily::AvgKnn => "avgknn",
            StatisticFamily::Entropy => "entropy",
            StatisticFamily::Energy => "energy",
            StatisticFamily::Fisher => "fisher",
            StatisticFamily::Simes => "simes",
        };
        f.write_str(token)
    }
}

impl FromStr for StatisticFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mss" => Ok(StatisticFamily::Mss),
            "knn" => Ok(StatisticFamily::Knn),
            "avgknn" => Ok(StatisticFamily::AvgKnn),
            "entropy" => Ok(StatisticFamily::Entropy),
            "energy" => Ok(StatisticFamily::Energy),
            "fisher" => Ok(StatisticFamily::Fisher),
            "simes" => Ok(StatisticFamily::Simes),
            other => Err(format!(
                "unknown statistic {other:?}, expected one of mss, knn, avgknn, entropy, energy, fisher, simes"
            )),
        }
    }
}

/// A statistic family together with its parameters.
///
/// `k` is the retrieval depth, `rank_j` the rank used by the `Knn` family,
/// and `tau` the temperature used by `Energy`. The other families ignore the
/// parameters that do not apply to them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticKind {
    pub family: StatisticFamily,
    pub k: usize,
    pub rank_j: usize,
    pub tau: f64,
}

impl StatisticKind {
    pub fn new(
        family: StatisticFamily,
        k: usize,
        rank_j: usize,
        tau: f64,
    ) -> Result<Self, StatisticError> {
        if k == 0 {
            return Err(StatisticError::ZeroK);
        }
        if rank_j == 0 || rank_j > k {
            return Err(StatisticError::RankExceedsK { rank_j, k });
        }
        if !(tau > 0.0) {
            return Err(StatisticError::NonPositiveTau(tau));
        }
        Ok(Self {
            family,
            k,
            rank_j,
            tau,
        })
    }

    /// `k = 32`, `rank_j = k`, `tau = 1`.
    pub fn with_defaults(family: StatisticFamily) -> Self {
        Self {
            family,
            k: DEFAULT_K,
            rank_j: DEFAULT_K,
            tau: DEFAULT_TAU,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(k={}", self.family, self.k)?;
        if self.family == StatisticFamily::Knn {
            write!(f, ", rank_j={}", self.rank_j)?;
        }
        if self.family == StatisticFamily::Energy {
            write!(f, ", tau={}", self.tau)?;
        }
        f.write_str(")")
    }
}

/// A computed statistic; larger means more likely out-of-knowledge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticValue {
    pub value: f64,
    pub kind: StatisticKind,
}

fn top_similarities(nb: &NeighborList, k: usize) -> Result<&[crate::vecstore::Neighbor], StatisticError> {
    if nb.is_empty() {
        return Err(StatisticError::EmptyNeighborList);
    }
    let take = k.min(nb.len());
    Ok(&nb.entries()[..take])
}

/// Negated maximum similarity.
pub fn score_mss(nb: &NeighborList) -> Result<f64, StatisticError> {
    if nb.is_empty() {
        return Err(StatisticError::EmptyNeighborList);
    }
    // entries are sorted non-increasing, so the head is the maximum
    Ok(-nb.entries()[0].similarity)
}

/// Negated j-th largest similarity (1-based).
pub fn score_knn_rank(nb: &NeighborList, j: usize) -> Result<f64, StatisticError> {
    if nb.is_empty() {
        return Err(StatisticError::EmptyNeighborList);
    }
    if j == 0 || j > nb.len() {
        return Err(StatisticError::RankOutOfRange { j, len: nb.len() });
    }
    Ok(-nb.entries()[j - 1].similarity)
}

/// Negated mean of the top `min(k, |nb|)` similarities.
pub fn score_avg_knn(nb: &NeighborList, k: usize) -> Result<f64, StatisticError> {
    if k == 0 {
        return Err(StatisticError::ZeroK);
    }
    let top = top_similarities(nb, k)?;
    let mean: f64 = top.iter().map(|e| e.similarity).sum::<f64>() / top.len() as f64;
    Ok(-mean)
}

/// Entropy of the softmax distribution over the top `min(k, |nb|)`
/// similarities, in nats.
pub fn score_entropy(nb: &NeighborList, k: usize) -> Result<f64, StatisticError> {
    if k == 0 {
        return Err(StatisticError::ZeroK);
    }
    let top = top_similarities(nb, k)?;
    let max = top[0].similarity;
    // H = ln Z - (sum x e^x) / Z over x = s - max; both terms are
    // nonnegative, so the result cannot dip below zero in floating point
    let mut z = 0.0f64;
    let mut weighted = 0.0f64;
    for e in top {
        let x = e.similarity - max;
        let ex = x.exp();
        z += ex;
        weighted += x * ex;
    }
    Ok(z.ln() - weighted / z)
}

/// Negated temperature-scaled log-sum-exp of the top `min(k, |nb|)`
/// similarities: `-tau * ln(sum_i exp(s_i / tau))`.
pub fn score_energy(nb: &NeighborList, k: usize, tau: f64) -> Result<f64, StatisticError> {
    if k == 0 {
        return Err(StatisticError::ZeroK);
    }
    if !(tau > 0.0) {
        return Err(StatisticError::NonPositiveTau(tau));
    }
    let top = top_similarities(nb, k)?;
    let max = top[0].similarity / tau;
    let sum: f64 = top.iter().map(|e| (e.similarity / tau - max).exp()).sum();
    Ok(-tau * (max + sum.ln()))
}

/// Dispatches a univariate statistic. For the `Knn` family the rank is
/// clamped to the neighbor count so that corpora smaller than `rank_j` still
/// score, mirroring the effective-k truncation used during calibration.
pub fn compute_score(kind: StatisticKind, nb: &NeighborList) -> Result<StatisticValue, StatisticError> {
    if kind.family.is_meta() {
        return Err(StatisticError::MetaKindRequiresCalibration(kind.family));
    }
    if nb.is_empty() {
        return Err(StatisticError::EmptyNeighborList);
    }
    let value = match kind.family {
        StatisticFamily::Mss => score_mss(nb)?,
        StatisticFamily::Knn => score_knn_rank(nb, kind.rank_j.min(nb.len()))?,
        StatisticFamily::AvgKnn => score_avg_knn(nb, kind.k)?,
        StatisticFamily::Entropy => score_entropy(nb, kind.k)?,
        StatisticFamily::Energy => score_energy(nb, kind.k, kind.tau)?,
        StatisticFamily::Fisher | StatisticFamily::Simes => unreachable!(),
    };
    Ok(StatisticValue { value, kind })
}
