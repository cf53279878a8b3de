//! Confusion-matrix metrics and the interpretability/fidelity trade-off scores.
//!
//! ckd is the positive class. A metric whose denominator is zero is `None`.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("{labels} labels but {predictions} predictions")]
    Length { labels: usize, predictions: usize },
    #[error("cannot score an empty set")]
    Empty,
    #[error("total feature count must be positive")]
    NoFeatures,
    #[error("masked count {masked} exceeds total {total}")]
    Masked { masked: usize, total: usize },
    #[error("accuracy {0} outside (0, 1]")]
    Accuracy(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if labels.len() != predictions.len() {
        return Err(MetricsError::Length { labels: labels.len(), predictions: predictions.len() });
    }
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == 1, p == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassificationReport<T> {
    pub accuracy: Option<T>,
    pub sensitivity: Option<T>,
    pub specificity: Option<T>,
    pub precision: Option<T>,
    pub f1: Option<T>,
}

fn ratio<T: Scalar>(num: usize, den: usize) -> Option<T> {
    (den > 0).then(|| T::from_count(num) / T::from_count(den))
}

pub fn classification_metrics<T: Scalar>(cm: &ConfusionMatrix) -> ClassificationReport<T> {
    let ConfusionMatrix { tp, fn_, fp, tn } = *cm;
    ClassificationReport {
        accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
        precision: ratio(tp, tp + fp),
        // 2TP / (2TP + FP + FN), the harmonic mean of precision and
        // sensitivity whenever both are defined.
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
    }
}

impl<T: Scalar> ClassificationReport<T> {
    pub const FIELDS: [&'static str; 5] = ["accuracy", "sensitivity", "specificity", "precision", "f1"];

    pub fn values(&self) -> [Option<T>; 5] {
        [self.accuracy, self.sensitivity, self.specificity, self.precision, self.f1]
    }

    pub fn from_values(v: [Option<T>; 5]) -> Self {
        ClassificationReport { accuracy: v[0], sensitivity: v[1], specificity: v[2], precision: v[3], f1: v[4] }
    }

    /// Field-wise mean over the reports in which the field is defined.
    pub fn mean(reports: &[ClassificationReport<T>]) -> Self {
        let mut out = [None; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            let defined: Vec<T> = reports.iter().filter_map(|r| r.values()[k]).collect();
            *slot = crate::scalar::mean(&defined);
        }
        Self::from_values(out)
    }

    pub fn accuracy_or_zero(&self) -> T {
        self.accuracy.unwrap_or_else(T::zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainabilityReport<T> {
    pub masked_features: usize,
    pub total_features: usize,
    /// Share of features removed by selection.
    pub interpretability: T,
    /// Surrogate accuracy over ensemble accuracy; may exceed 1.
    pub fidelity: T,
    /// `F / (F + I)`.
    pub fir: T,
}

pub fn explainability_metrics<T: Scalar>(
    masked: usize,
    total: usize,
    acc_interpretable: T,
    acc_uninterpretable: T,
) -> Result<ExplainabilityReport<T>, MetricsError> {
    if total == 0 {
        return Err(MetricsError::NoFeatures);
    }
    if masked > total {
        return Err(MetricsError::Masked { masked, total });
    }
    for a in [acc_interpretable, acc_uninterpretable] {
        if !(a > T::zero() && a <= T::one()) {
            return Err(MetricsError::Accuracy(a.as_f64()));
        }
    }
    let fidelity = acc_interpretable / acc_uninterpretable;
    Ok(from_fidelity(masked, total, fidelity))
}

/// Same as [`explainability_metrics`] for an already known fidelity.
pub fn from_fidelity<T: Scalar>(masked: usize, total: usize, fidelity: T) -> ExplainabilityReport<T> {
    let interpretability = T::from_count(masked) / T::from_count(total);
    ExplainabilityReport {
        masked_features: masked,
        total_features: total,
        interpretability,
        fidelity,
        fir: fidelity / (fidelity + interpretability),
    }
}
