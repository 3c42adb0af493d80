//! Detection metrics over labeled in-knowledge / out-of-knowledge scores.
//!
//! Scores follow the gate's orientation: larger means predicted out of
//! knowledge. Out-of-knowledge queries are the positive class. The
//! threshold-anchored metrics (TPR at fixed FPR, detection error rate)
//! reuse the gate's smoothed-CDF p-value machinery over the in-knowledge
//! scores, so evaluation and deployment share one decision rule.

use crate::calibration::{
    critical_value_from_sorted, ecdf_eval, Calibration, CalibrationError,
};
use crate::vecstore::{CorpusIndex, EmbeddingVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_FPR: f64 = 0.05;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("both score classes must be nonempty")]
    EmptyClass,
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("target false positive rate must lie in (0, 1), got {0}")]
    FprOutOfRange(f64),
    #[error("query pool is empty")]
    EmptyPool,
    #[error("samples per class must be at least 1")]
    ZeroSamplesPerClass,
    #[error("run count must be at least 1")]
    ZeroRuns,
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Labeled score sets; out-of-knowledge is the positive class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores {
    ook_scores: Vec<f64>,
    ik_scores: Vec<f64>,
}

impl LabeledScores {
    pub fn new(ook_scores: Vec<f64>, ik_scores: Vec<f64>) -> Result<Self, MetricsError> {
        if ook_scores.is_empty() || ik_scores.is_empty() {
            return Err(MetricsError::EmptyClass);
        }
        if !ook_scores.iter().chain(&ik_scores).all(|s| s.is_finite()) {
            return Err(MetricsError::NonFiniteScore);
        }
        Ok(Self {
            ook_scores,
            ik_scores,
        })
    }

    pub fn ook_scores(&self) -> &[f64] {
        &self.ook_scores
    }

    pub fn ik_scores(&self) -> &[f64] {
        &self.ik_scores
    }
}

/// Metrics of a single evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub auroc: f64,
    pub auprc: f64,
    pub tpr_at_5fpr: f64,
    pub der: f64,
    pub threshold: f64,
}

/// Aggregate evaluation over repeated balanced draws. The top-level metric
/// fields are the arithmetic means of the per-run values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub auprc: f64,
    pub tpr_at_5fpr: f64,
    pub der: f64,
    pub threshold: f64,
    pub runs: Vec<RunMetrics>,
    pub mean_over_runs: RunMetrics,
    /// True when a pool was smaller than the per-class draw and sampling
    /// fell back to replacement.
    pub with_replacement: bool,
}

/// Area under the ROC curve by rank sum: the probability that a random
/// out-of-knowledge score exceeds a random in-knowledge score, ties
/// counting one half.
pub fn auroc(scores: &LabeledScores) -> f64 {
    let mut all: Vec<(f64, bool)> = scores
        .ook_scores
        .iter()
        .map(|&s| (s, true))
        .chain(scores.ik_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks are 1-based; a tie block spanning ranks i+1..=j shares the
        // block's mean rank
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += avg_rank * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let n_pos = scores.ook_scores.len() as f64;
    let n_neg = scores.ik_scores.len() as f64;
    let u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    u / (n_pos * n_neg)
}

/// Area under the precision-recall curve as block-averaged average
/// precision: tied scores enter as one block credited with the precision
/// at the block's end.
pub fn auprc(scores: &LabeledScores) -> f64 {
    let mut all: Vec<(f64, bool)> = scores
        .ook_scores
        .iter()
        .map(|&s| (s, true))
        .chain(scores.ik_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
    let n_pos = scores.ook_scores.len() as f64;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut ap = 0.0f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i + 1;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let block_tp = all[i..j].iter().filter(|e| e.1).count();
        tp += block_tp;
        seen += j - i;
        if block_tp > 0 {
            let precision = tp as f64 / seen as f64;
            ap += (block_tp as f64 / n_pos) * precision;
        }
        i = j;
    }
    ap
}

fn sorted_ik(scores: &LabeledScores) -> Vec<f64> {
    let mut ik = scores.ik_scores.clone();
    ik.sort_unstable_by(f64::total_cmp);
    ik
}

fn check_fpr(fpr: f64) -> Result<(), MetricsError> {
    if !(fpr > 0.0 && fpr < 1.0) {
        return Err(MetricsError::FprOutOfRange(fpr));
    }
    Ok(())
}

/// True positive rate at the decision rule whose false positive rate on
/// the in-knowledge scores is capped at `fpr`. Returns the rate and the
/// score-space threshold; the p-value rule `p <= fpr` over the
/// in-knowledge CDF is what classifies, exactly as the gate does.
pub fn tpr_at_fpr(scores: &LabeledScores, fpr: f64) -> Result<(f64, f64), MetricsError> {
    check_fpr(fpr)?;
    let ik = sorted_ik(scores);
    let threshold = critical_value_from_sorted(&ik, fpr)?;
    let hits = scores
        .ook_scores
        .iter()
        .filter(|&&s| rejects(&ik, s, fpr))
        .count();
    Ok((hits as f64 / scores.ook_scores.len() as f64, threshold))
}

fn rejects(sorted_ik: &[f64], score: f64, fpr: f64) -> bool {
    // unwrap is safe: sorted_ik nonempty and scores finite by construction
    1.0 - ecdf_eval(sorted_ik, score).unwrap() <= fpr
}

/// Fraction of misclassified queries under the `p <= fpr` rule: rejected
/// in-knowledge queries plus accepted out-of-knowledge ones.
pub fn detection_error_rate(scores: &LabeledScores, fpr: f64) -> Result<f64, MetricsError> {
    check_fpr(fpr)?;
    let ik = sorted_ik(scores);
    let false_pos = scores
        .ik_scores
        .iter()
        .filter(|&&s| rejects(&ik, s, fpr))
        .count();
    let false_neg = scores
        .ook_scores
        .iter()
        .filter(|&&s| !rejects(&ik, s, fpr))
        .count();
    let total = scores.ik_scores.len() + scores.ook_scores.len();
    Ok((false_pos + false_neg) as f64 / total as f64)
}

fn run_metrics(scores: &LabeledScores, fpr: f64) -> Result<RunMetrics, MetricsError> {
    let (tpr, threshold) = tpr_at_fpr(scores, fpr)?;
    Ok(RunMetrics {
        auroc: auroc(scores),
        auprc: auprc(scores),
        tpr_at_5fpr: tpr,
        der: detection_error_rate(scores, fpr)?,
        threshold,
    })
}

fn draw_indices(rng: &mut ChaCha8Rng, pool_len: usize, amount: usize) -> Vec<usize> {
    use rand::Rng;
    if amount <= pool_len {
        rand::seq::index::sample(rng, pool_len, amount).into_vec()
    } else {
        (0..amount).map(|_| rng.random_range(0..pool_len)).collect()
    }
}

/// Repeated balanced evaluation: each run draws `n_per_class` queries from
/// both pools, scores them with the calibrated statistic, and computes all
/// metrics at the 5% false positive operating point. Pools smaller than the
/// draw fall back to sampling with replacement, recorded in the report.
/// The same seed always yields a bit-identical report.
pub fn balanced_eval(
    index: &CorpusIndex,
    cal: &Calibration,
    ik_pool: &[EmbeddingVector],
    ook_pool: &[EmbeddingVector],
    n_per_class: usize,
    runs: usize,
    seed: u64,
) -> Result<EvalReport, MetricsError> {
    if ik_pool.is_empty() || ook_pool.is_empty() {
        return Err(MetricsError::EmptyPool);
    }
    if n_per_class == 0 {
        return Err(MetricsError::ZeroSamplesPerClass);
    }
    if runs == 0 {
        return Err(MetricsError::ZeroRuns);
    }

    // each pool vector is scored once; runs then resample score indices
    let score_pool = |pool: &[EmbeddingVector]| -> Result<Vec<f64>, MetricsError> {
        pool.iter()
            .map(|q| Ok(cal.statistic(index, q)?))
            .collect()
    };
    let ik_scored = score_pool(ik_pool)?;
    let ook_scored = score_pool(ook_pool)?;
    let with_replacement = ik_pool.len() < n_per_class || ook_pool.len() < n_per_class;

    let mut per_run = Vec::with_capacity(runs);
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64 + 1);
        let ik: Vec<f64> = draw_indices(&mut rng, ik_scored.len(), n_per_class)
            .into_iter()
            .map(|i| ik_scored[i])
            .collect();
        let ook: Vec<f64> = draw_indices(&mut rng, ook_scored.len(), n_per_class)
            .into_iter()
            .map(|i| ook_scored[i])
            .collect();
        let scores = LabeledScores::new(ook, ik)?;
        per_run.push(run_metrics(&scores, DEFAULT_FPR)?);
    }

    let nf = runs as f64;
    let mean = RunMetrics {
        auroc: per_run.iter().map(|r| r.auroc).sum::<f64>() / nf,
        auprc: per_run.iter().map(|r| r.auprc).sum::<f64>() / nf,
        tpr_at_5fpr: per_run.iter().map(|r| r.tpr_at_5fpr).sum::<f64>() / nf,
        der: per_run.iter().map(|r| r.der).sum::<f64>() / nf,
        threshold: per_run.iter().map(|r| r.threshold).sum::<f64>() / nf,
    };
    Ok(EvalReport {
        auroc: mean.auroc,
        auprc: mean.auprc,
        tpr_at_5fpr: mean.tpr_at_5fpr,
        der: mean.der,
        threshold: mean.threshold,
        runs: per_run,
        mean_over_runs: mean,
        with_replacement,
    })
}
