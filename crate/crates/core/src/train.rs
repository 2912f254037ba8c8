//! Mini-batch training with Adam, a reduce-on-plateau learning-rate
//! schedule and early stopping on validation accuracy.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::SplitIndices;
use crate::error::{Error, Result};
use crate::keypoint::LabeledDataset;
use crate::layers::Layer;
use crate::loss::{loss, LossKind};
use crate::model::{argmax, SequentialModel};
use crate::optim::{AdamState, DEFAULT_LEARNING_RATE};
use crate::rng::SplitMix64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauSchedule {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for PlateauSchedule {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 5,
            min_lr: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: usize,
    pub restore_best: bool,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        Self {
            patience: 10,
            restore_best: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Monitors validation loss.
    pub plateau: Option<PlateauSchedule>,
    /// Monitors validation accuracy.
    pub early_stopping: Option<EarlyStopping>,
    /// Overrides the model's own loss when set.
    pub loss: Option<LossKind>,
    /// Wall time makes histories non-reproducible, so it is opt-in.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 70,
            batch_size: 32,
            seed: 42,
            learning_rate: DEFAULT_LEARNING_RATE,
            plateau: Some(PlateauSchedule::default()),
            early_stopping: Some(EarlyStopping::default()),
            loss: None,
            record_wall_time: false,
        }
    }
}

/// Metrics for one completed epoch. Losses are the mean cross-entropy
/// (without the L2 penalty).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub learning_rate: f64,
    pub wall_time_secs: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub stopped_early: bool,
    /// Epoch whose weights the model holds after training, when they were
    /// restored from the best validation accuracy.
    pub restored_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn best_val_accuracy(&self) -> Option<f64> {
        self.records.iter().map(|r| r.val_accuracy).reduce(f64::max)
    }
}

fn check_indices(dataset: &LabeledDataset, indices: &[usize], what: &str) -> Result<()> {
    if let Some(&i) = indices.iter().find(|&&i| i >= dataset.len()) {
        return Err(Error::InvalidArgument(format!(
            "{what} index {i} out of range for {} samples",
            dataset.len()
        )));
    }
    Ok(())
}

fn check_labels(model: &SequentialModel, dataset: &LabeledDataset) -> Result<()> {
    let k = model.class_count();
    if dataset.classes() != k {
        return Err(Error::shape("dataset classes", k, dataset.classes()));
    }
    if let Some(&label) = dataset.labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, classes: k });
    }
    Ok(())
}

/// Mean loss and accuracy over `indices` in inference mode.
pub fn score(
    model: &SequentialModel,
    dataset: &LabeledDataset,
    indices: &[usize],
    kind: LossKind,
    batch_size: usize,
) -> Result<(f64, f64)> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("no samples to score".into()));
    }
    let mut total = 0.0;
    let mut correct = 0usize;
    for chunk in indices.chunks(batch_size.max(1)) {
        let seqs: Vec<_> = chunk.iter().map(|&i| &dataset.sequences[i]).collect();
        let labels: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i]).collect();
        let y = model.infer(&model.batch_input(&seqs)?)?;
        let (l, _) = loss(kind, &y, &labels)?;
        total += l * chunk.len() as f64;
        correct += (0..chunk.len()).filter(|&n| argmax(y.row(n)) == labels[n]).count();
    }
    Ok((total / indices.len() as f64, correct as f64 / indices.len() as f64))
}

pub fn train(
    model: &mut SequentialModel,
    dataset: &LabeledDataset,
    split: &SplitIndices,
    config: &TrainConfig,
) -> Result<TrainHistory> {
    train_with(model, dataset, split, config, |_| {})
}

/// Like [`train`], calling `on_epoch` after every completed epoch.
pub fn train_with(
    model: &mut SequentialModel,
    dataset: &LabeledDataset,
    split: &SplitIndices,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainHistory> {
    if config.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    if split.train.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }
    if split.test.is_empty() {
        return Err(Error::InvalidArgument("empty validation split".into()));
    }
    if config.batch_size == 0 || config.batch_size > split.train.len() {
        return Err(Error::InvalidArgument(format!(
            "batch size {} outside 1..={}",
            config.batch_size,
            split.train.len()
        )));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("learning rate {}", config.learning_rate)));
    }
    check_indices(dataset, &split.train, "train")?;
    check_indices(dataset, &split.test, "validation")?;
    check_labels(model, dataset)?;
    let kind = config.loss.unwrap_or(model.loss);

    let mut adam = AdamState::new(config.learning_rate);
    let mut lr = config.learning_rate;
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, usize, Vec<Layer>)> = None;
    let mut stop_wait = 0usize;
    let mut best_val_loss = f64::INFINITY;
    let mut plateau_wait = 0usize;

    for epoch in 0..config.epochs {
        let started = Instant::now();
        adam.learning_rate = lr;
        let mut order = split.train.clone();
        SplitMix64::new(config.seed ^ epoch as u64).shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let seqs: Vec<_> = chunk.iter().map(|&i| &dataset.sequences[i]).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| dataset.labels[i]).collect();
            let x = model.batch_input(&seqs)?;
            let (y, caches) = model.forward_train(&x)?;
            let (l, grad) = loss(kind, &y, &labels)?;
            if !l.is_finite() {
                return Err(Error::NonFinite(format!("training loss at epoch {}", epoch + 1)));
            }
            loss_sum += l * chunk.len() as f64;
            correct += (0..chunk.len()).filter(|&n| argmax(y.row(n)) == labels[n]).count();
            let grads = model.backward(&caches, grad)?;
            let flat: Vec<_> = grads.iter().flat_map(|g| g.iter().map(Option::as_ref)).collect();
            adam.apply(&mut model.params_mut(), &flat)?;
        }

        let (val_loss, val_accuracy) = score(model, dataset, &split.test, kind, config.batch_size)?;
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / order.len() as f64,
            train_accuracy: correct as f64 / order.len() as f64,
            val_loss,
            val_accuracy,
            learning_rate: lr,
            wall_time_secs: config.record_wall_time.then(|| started.elapsed().as_secs_f64()),
        };
        on_epoch(&record);
        history.records.push(record);

        if let Some(plateau) = &config.plateau {
            if val_loss < best_val_loss {
                best_val_loss = val_loss;
                plateau_wait = 0;
            } else {
                plateau_wait += 1;
                if plateau_wait >= plateau.patience {
                    lr = (lr * plateau.factor).max(plateau.min_lr).min(lr);
                    plateau_wait = 0;
                }
            }
        }

        if let Some(stopping) = &config.early_stopping {
            if best.as_ref().is_none_or(|(acc, _, _)| val_accuracy > *acc) {
                let snapshot = if stopping.restore_best { model.layers.clone() } else { Vec::new() };
                best = Some((val_accuracy, epoch + 1, snapshot));
                stop_wait = 0;
            } else {
                stop_wait += 1;
                if stop_wait >= stopping.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }

    if let (Some(stopping), Some((_, best_epoch, layers))) = (&config.early_stopping, best) {
        if stopping.restore_best {
            model.layers = layers;
            history.restored_epoch = Some(best_epoch);
        }
    }
    Ok(history)
}
