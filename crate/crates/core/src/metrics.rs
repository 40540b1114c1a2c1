//! Regression error measures for predictions and binary classification
//! rates over the window-level confusion matrix.

use crate::chart::WindowFlag;
use crate::error::{Error, Result};

/// The four prediction error measures over one observed/predicted pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// Mean squared error.
    pub mse: f64,
    /// Euclidean distance between the two vectors.
    pub ed: f64,
    /// Manhattan distance between the two vectors.
    pub md: f64,
    /// Mean magnitude of relative error, averaged over samples with a
    /// non-zero observed value.
    pub mmre: f64,
    /// Sample count.
    pub n: usize,
    /// How many samples were skipped in the MMRE for having a zero
    /// observed value.
    pub mmre_skipped: usize,
}

/// Computes MSE, ED, MD, and MMRE for aligned observed/predicted vectors.
///
/// Zero-valued observations contribute to MSE/ED/MD but are skipped by the
/// relative error; if every observation is zero the MMRE is undefined and
/// the whole report errors rather than inventing a value.
pub fn error_report(observed: &[f64], predicted: &[f64]) -> Result<ErrorReport> {
    if observed.len() != predicted.len() {
        return Err(Error::Dimension {
            expected: observed.len(),
            got: predicted.len(),
        });
    }
    if observed.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let n = observed.len();
    let mut sum_sq = 0.0;
    let mut sum_abs = 0.0;
    let mut sum_rel = 0.0;
    let mut included = 0usize;
    for (y, y_hat) in observed.iter().zip(predicted) {
        let diff = y - y_hat;
        sum_sq += diff * diff;
        sum_abs += diff.abs();
        if *y != 0.0 {
            sum_rel += diff.abs() / y.abs();
            included += 1;
        }
    }
    if included == 0 {
        return Err(Error::MmreUndefined);
    }
    Ok(ErrorReport {
        mse: sum_sq / n as f64,
        ed: sum_sq.sqrt(),
        md: sum_abs,
        mmre: sum_rel / included as f64,
        n,
        mmre_skipped: n - included,
    })
}

/// Window-level binary confusion counts: attack is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fn_,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    /// TP / (TP + FN). Errors when there are no actual positives.
    pub fn sensitivity(&self) -> Result<f64> {
        let denom = self.true_positives + self.false_negatives;
        if denom == 0 {
            return Err(Error::UndefinedRate {
                rate: "sensitivity",
            });
        }
        Ok(self.true_positives as f64 / denom as f64)
    }

    /// TN / (TN + FP). Errors when there are no actual negatives.
    pub fn specificity(&self) -> Result<f64> {
        let denom = self.true_negatives + self.false_positives;
        if denom == 0 {
            return Err(Error::UndefinedRate {
                rate: "specificity",
            });
        }
        Ok(self.true_negatives as f64 / denom as f64)
    }

    /// (TP + TN) / total. Errors on an empty matrix.
    pub fn accuracy(&self) -> Result<f64> {
        let denom = self.total();
        if denom == 0 {
            return Err(Error::UndefinedRate { rate: "accuracy" });
        }
        Ok((self.true_positives + self.true_negatives) as f64 / denom as f64)
    }
}

/// Ground-truth class of one tested window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowLabel {
    /// At least one sample in the window carries an attack label.
    Attack,
    Normal,
}

/// Counts window-level outcomes: attack+flagged is a true positive,
/// normal+flagged a false positive, and so on.
pub fn confusion_from_flags(
    labels: &[WindowLabel],
    flags: &[WindowFlag],
) -> Result<ConfusionMatrix> {
    if labels.len() != flags.len() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: flags.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (label, flag) in labels.iter().zip(flags) {
        match (label, flag) {
            (WindowLabel::Attack, WindowFlag::Flagged) => cm.true_positives += 1,
            (WindowLabel::Attack, WindowFlag::Clear) => cm.false_negatives += 1,
            (WindowLabel::Normal, WindowFlag::Flagged) => cm.false_positives += 1,
            (WindowLabel::Normal, WindowFlag::Clear) => cm.true_negatives += 1,
        }
    }
    Ok(cm)
}
