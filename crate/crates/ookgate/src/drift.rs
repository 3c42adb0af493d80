//! Offline two-sample Kolmogorov-Smirnov drift detection.
//!
//! Where the gate judges one query at a time, drift detection judges a whole
//! batch: have deployed-time queries stopped looking like the in-knowledge
//! queries the gate was calibrated on? The test statistic is the largest
//! gap between the two smoothed empirical CDFs of the aggregate statistic,
//!
//! ```text
//! t_KS = sup_t | F(t; calibration) - F(t; batch) |
//! ```
//!
//! compared against the closed-form two-sided threshold at level `alpha`.

use crate::calibration::{Calibration, CalibrationError};
use crate::vecstore::{CorpusIndex, EmbeddingVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("sample list is empty")]
    EmptySample,
    #[error("samples must be finite")]
    NonFiniteSample,
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("sample sizes must be at least 1")]
    ZeroSampleSize,
    #[error("KS statistic {0} outside [0, 1]")]
    StatisticOutOfRange(f64),
    #[error("query batch is empty")]
    EmptyBatch,
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// Outcome of one drift check. `reject` means the batch distribution
/// differs from the calibration distribution at level `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftDecision {
    pub t_ks: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub reject: bool,
    pub p_asymptotic: f64,
    /// Calibration sample count.
    pub n: usize,
    /// Batch sample count.
    pub m: usize,
}

/// Supremum gap between the smoothed empirical CDFs of two samples.
///
/// Both CDFs are step functions, so the supremum is attained at a sample
/// value or immediately to its left; every merged breakpoint is checked
/// from both sides. The left limit below the smallest sample covers the
/// constant-offset plateau the +1 smoothing creates for unequal sizes.
pub fn ks_statistic(samples_a: &[f64], samples_b: &[f64]) -> Result<f64, DriftError> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(DriftError::EmptySample);
    }
    if !samples_a.iter().chain(samples_b).all(|v| v.is_finite()) {
        return Err(DriftError::NonFiniteSample);
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let gap_at = |t: f64, strict: bool| -> f64 {
        let count = |s: &[f64]| {
            if strict {
                s.partition_point(|&x| x < t)
            } else {
                s.partition_point(|&x| x <= t)
            }
        };
        let fa = (1 + count(&a)) as f64 / (1 + a.len()) as f64;
        let fb = (1 + count(&b)) as f64 / (1 + b.len()) as f64;
        (fa - fb).abs()
    };
    let mut sup = 0.0f64;
    for &t in a.iter().chain(&b) {
        sup = sup.max(gap_at(t, false)).max(gap_at(t, true));
    }
    Ok(sup)
}

/// Two-sided rejection threshold
/// `sqrt(-ln(alpha/2) * (n + m) / (2 n m))`.
pub fn ks_threshold(alpha: f64, n: usize, m: usize) -> Result<f64, DriftError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DriftError::AlphaOutOfRange(alpha));
    }
    if n == 0 || m == 0 {
        return Err(DriftError::ZeroSampleSize);
    }
    let (n, m) = (n as f64, m as f64);
    Ok((-(alpha / 2.0).ln() * (n + m) / (2.0 * n * m)).sqrt())
}

/// Asymptotic p-value from the Kolmogorov distribution:
/// `Q(lambda) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lambda^2)` at
/// `lambda = t_ks * sqrt(nm / (n + m))`, truncated when a term drops
/// below 1e-12 and clamped to [0, 1].
pub fn ks_p_asymptotic(t_ks: f64, n: usize, m: usize) -> Result<f64, DriftError> {
    if !(0.0..=1.0).contains(&t_ks) {
        return Err(DriftError::StatisticOutOfRange(t_ks));
    }
    if n == 0 || m == 0 {
        return Err(DriftError::ZeroSampleSize);
    }
    let (nf, mf) = (n as f64, m as f64);
    let lambda = t_ks * (nf * mf / (nf + mf)).sqrt();
    // below this the survival probability is 1 to double precision and the
    // alternating series would need millions of terms
    if lambda < 0.01 {
        return Ok(1.0);
    }
    let mut sum = 0.0f64;
    let mut sign = 1.0f64;
    for j in 1..u32::MAX {
        let term = (-2.0 * (j as f64).powi(2) * lambda * lambda).exp();
        if term < 1e-12 {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    Ok((2.0 * sum).clamp(0.0, 1.0))
}

/// Runs the drift check: scores every batch query with the calibrated
/// statistic and compares the score distribution to the calibration one.
pub fn drift_test(
    cal: &Calibration,
    index: &CorpusIndex,
    batch: &[EmbeddingVector],
    alpha: f64,
) -> Result<DriftDecision, DriftError> {
    if batch.is_empty() {
        return Err(DriftError::EmptyBatch);
    }
    let batch_stats = batch
        .iter()
        .map(|q| cal.statistic(index, q))
        .collect::<Result<Vec<f64>, CalibrationError>>()?;
    let n = cal.n_cal();
    let m = batch_stats.len();
    let t_ks = ks_statistic(cal.sorted_stats(), &batch_stats)?;
    let threshold = ks_threshold(alpha, n, m)?;
    Ok(DriftDecision {
        t_ks,
        threshold,
        alpha,
        reject: t_ks > threshold,
        p_asymptotic: ks_p_asymptotic(t_ks, n, m)?,
        n,
        m,
    })
}
