use serde::{Deserialize, Serialize};

use crate::cca::{cca_fit_with, pair_blocks, BlockPair, CcaMapping, CcaOptions};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::signal::LabeledWindows;

/// Per-session results, one CSV row each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayReport {
    pub day: usize,
    /// Session within the day, 0-based.
    pub session: usize,
    pub mean_canonical_correlation_aligned: f64,
    pub mean_channelwise_correlation_unaligned: f64,
    pub correlation_gain: f64,
    /// Mean canonical correlation between the two halves of the reference day.
    pub within_day_upper_bound: f64,
    pub normalized_aligned_correlation: f64,
    pub acc_unaligned: f64,
    pub acc_aligned: f64,
    pub acc_pooled: f64,
    pub acc_reference: f64,
    pub relative_accuracy: f64,
}

impl DayReport {
    pub fn label(&self) -> String {
        format!("{}.{}", self.day, self.session)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMetrics {
    pub aligned: f64,
    pub unaligned: f64,
    pub gain: f64,
    /// Channels with zero variance in either block; their correlation counts as 0.
    pub degenerate_channels: Vec<usize>,
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Aligned (mean canonical correlation of `mapping`) versus unaligned (mean
/// channel-wise Pearson correlation of the paired raw blocks).
pub fn correlation_metrics(
    ref_calib: &Matrix<f64>,
    new_calib: &Matrix<f64>,
    mapping: &CcaMapping<f64>,
) -> Result<CorrelationMetrics> {
    if ref_calib.shape() != new_calib.shape() {
        return Err(Error::dim(
            "correlation_metrics",
            format!("{:?}", ref_calib.shape()),
            format!("{:?}", new_calib.shape()),
        ));
    }
    let n = ref_calib.rows();
    let mut degenerate = Vec::new();
    let mut total = 0.0;
    for c in 0..n {
        match pearson(ref_calib.row(c), new_calib.row(c)) {
            Some(r) => total += r,
            None => degenerate.push(c),
        }
    }
    let unaligned = total / n as f64;
    let aligned = mapping.mean_correlation();
    Ok(CorrelationMetrics { aligned, unaligned, gain: aligned - unaligned, degenerate_channels: degenerate })
}

/// Within-session reference level: CCA between the first and second half of
/// each gesture's repetitions of one session.
pub fn within_day_upper_bound(day: &LabeledWindows<f64>, opts: &CcaOptions<f64>) -> Result<f64> {
    let mut pairs = Vec::new();
    for g in day.gestures() {
        let reps = day.repetitions_of(g);
        let half = reps.len() / 2;
        pairs.extend((0..half).map(|k| BlockPair { gesture: g, rep_x: reps[k], rep_y: reps[k + half] }));
    }
    if pairs.is_empty() {
        return Err(Error::Pairing("within-day bound needs at least 2 repetitions per gesture".into()));
    }
    let pair = pair_blocks(day, day, &pairs)?;
    Ok(cca_fit_with(&pair.reference, &pair.new, opts)?.mean_correlation())
}
