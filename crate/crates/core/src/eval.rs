use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keypoint::LabeledDataset;
use crate::metrics::{confusion_matrix, prf, Averaging, ClassMetrics, ConfusionMatrix};
use crate::model::{argmax, SequentialModel};

const EVAL_BATCH: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Row name in comparison tables.
    pub model: String,
    pub architecture: String,
    pub averaging: Averaging,
    pub samples: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub labels: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub zero_division: usize,
}

impl EvalReport {
    /// Builds a report from true and predicted labels.
    pub fn from_predictions(
        model: &str,
        architecture: &str,
        labels: Vec<String>,
        y_true: &[usize],
        y_pred: &[usize],
        averaging: Averaging,
    ) -> Result<Self> {
        let confusion = confusion_matrix(y_true, y_pred, labels.len())?;
        let summary = prf(&confusion, averaging)?;
        Ok(Self {
            model: model.to_string(),
            architecture: architecture.to_string(),
            averaging,
            samples: y_true.len(),
            accuracy: confusion.accuracy(),
            precision: summary.precision,
            recall: summary.recall,
            f1: summary.f1,
            labels,
            per_class: summary.per_class,
            confusion,
            zero_division: summary.zero_division,
        })
    }
}

/// Inference-mode predictions for the selected samples.
pub fn predict_indices(model: &SequentialModel, dataset: &LabeledDataset, indices: &[usize]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let mut seqs = Vec::with_capacity(chunk.len());
        for &i in chunk {
            seqs.push(dataset.sequences.get(i).ok_or_else(|| {
                Error::InvalidArgument(format!("index {i} out of range for {} samples", dataset.len()))
            })?);
        }
        let y = model.infer(&model.batch_input(&seqs)?)?;
        out.extend((0..chunk.len()).map(|n| argmax(y.row(n))));
    }
    Ok(out)
}

pub fn evaluate(model: &SequentialModel, dataset: &LabeledDataset, indices: &[usize]) -> Result<EvalReport> {
    evaluate_with(model, dataset, indices, Averaging::Weighted)
}

pub fn evaluate_with(
    model: &SequentialModel,
    dataset: &LabeledDataset,
    indices: &[usize],
    averaging: Averaging,
) -> Result<EvalReport> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("evaluation needs at least one sample".into()));
    }
    if dataset.classes() != model.class_count() {
        return Err(Error::shape("dataset classes", model.class_count(), dataset.classes()));
    }
    let y_pred = predict_indices(model, dataset, indices)?;
    let y_true: Vec<usize> = indices.iter().map(|&i| dataset.labels[i]).collect();
    EvalReport::from_predictions(
        model.arch.family(),
        model.arch.as_str(),
        model.label_map.names().to_vec(),
        &y_true,
        &y_pred,
        averaging,
    )
}
