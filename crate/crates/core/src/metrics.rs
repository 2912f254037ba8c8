//! Confusion matrices and precision / recall / F1 with support-weighted or
//! macro averaging.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// K×K counts; rows are true labels, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    fn validate(&self) -> Result<()> {
        let k = self.classes();
        if k == 0 || self.counts.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("confusion matrix must be square and non-empty".into()));
        }
        if self.total() == 0 {
            return Err(Error::InvalidArgument("confusion matrix has no samples".into()));
        }
        Ok(())
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::shape("label vectors", y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("no labels to compare".into()));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for label in [t, p] {
            if label >= k {
                return Err(Error::LabelOutOfRange { label, classes: k });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Weighted,
    Macro,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrfSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Number of per-class ratios whose denominator was zero (set to 0).
    pub zero_division: usize,
}

pub fn per_class_metrics(confusion: &ConfusionMatrix) -> Result<(Vec<ClassMetrics>, usize)> {
    confusion.validate()?;
    let mut zero_division = 0;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            zero_division += 1;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut out = Vec::with_capacity(confusion.classes());
    for i in 0..confusion.classes() {
        let tp = confusion.counts[i][i];
        let support = confusion.row_sum(i);
        let precision = ratio(tp, confusion.col_sum(i));
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        out.push(ClassMetrics {
            precision,
            recall,
            f1,
            support,
        });
    }
    Ok((out, zero_division))
}

pub fn prf(confusion: &ConfusionMatrix, averaging: Averaging) -> Result<PrfSummary> {
    let (per_class, zero_division) = per_class_metrics(confusion)?;
    let (weights, denom): (Vec<f64>, f64) = match averaging {
        Averaging::Weighted => (
            per_class.iter().map(|c| c.support as f64).collect(),
            confusion.total() as f64,
        ),
        Averaging::Macro => (vec![1.0; per_class.len()], per_class.len() as f64),
    };
    let avg = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().zip(&weights).map(|(c, w)| w * f(c)).sum::<f64>() / denom
    };
    let recall = match averaging {
        // sum_i (support_i / total) * (tp_i / support_i) = trace / total
        Averaging::Weighted => confusion.accuracy(),
        Averaging::Macro => avg(|c| c.recall),
    };
    Ok(PrfSummary {
        precision: avg(|c| c.precision),
        recall,
        f1: avg(|c| c.f1),
        per_class,
        zero_division,
    })
}

/// Support-weighted precision, recall and F1.
pub fn weighted_prf(confusion: &ConfusionMatrix) -> Result<PrfSummary> {
    prf(confusion, Averaging::Weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_counted_fixture() {
        let cm = confusion_matrix(&[0, 0, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let s = weighted_prf(&cm).unwrap();
        assert_eq!(cm.accuracy(), 0.75);
        assert!((s.precision - 0.875).abs() < 1e-15);
        assert!((s.recall - 0.75).abs() < 1e-15);
        assert!((s.f1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(confusion_matrix(&[], &[], 3).is_err());
        assert!(confusion_matrix(&[0, 3], &[0, 0], 3).is_err());
        assert!(confusion_matrix(&[0], &[0, 1], 3).is_err());
        let zero = ConfusionMatrix {
            counts: vec![vec![0; 2]; 2],
        };
        assert!(weighted_prf(&zero).is_err());
    }

    #[test]
    fn degenerate_predictor_counts_zero_division() {
        let cm = confusion_matrix(&[0, 1, 2], &[0, 0, 0], 3).unwrap();
        let s = weighted_prf(&cm).unwrap();
        assert_eq!(s.zero_division, 2);
        assert_eq!(s.per_class[1].precision, 0.0);
    }

    #[test]
    fn macro_average() {
        let cm = confusion_matrix(&[0, 0, 0, 1], &[0, 0, 1, 1], 2).unwrap();
        let s = prf(&cm, Averaging::Macro).unwrap();
        assert!((s.recall - (2.0 / 3.0 + 1.0) / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn weighted_recall_is_accuracy(
            pairs in proptest::collection::vec((0usize..6, 0usize..6), 1..80)
        ) {
            let (t, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let cm = confusion_matrix(&t, &p, 6).unwrap();
            let s = weighted_prf(&cm).unwrap();
            prop_assert_eq!(s.recall, cm.accuracy());
            for i in 0..6 {
                prop_assert_eq!(cm.row_sum(i), t.iter().filter(|&&x| x == i).count() as u64);
            }
        }
    }
}
