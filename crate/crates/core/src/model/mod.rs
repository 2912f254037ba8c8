//! Sequential models, the recognizer architectures, and checkpoints.

mod arch;
mod checkpoint;

pub use arch::{build, build_cnn_gesture, build_cnn_static, build_lstm_gesture, build_lstm_static, ArchConfig, ArchId};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointHeader, TensorEntry, SLM_MAGIC};

use crate::error::{Error, Result};
use crate::keypoint::{LabelMap, SignSequence};
use crate::layers::{Cache, Layer, LayerGrads, LayerSpec, Param};
use crate::loss::LossKind;
use crate::tensor::Tensor;

/// An ordered layer stack with its parameters and class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct SequentialModel {
    pub arch: ArchId,
    pub config: ArchConfig,
    /// Per-sample input dims, e.g. `[30, 1662]` or `[30, 1662, 1]`.
    pub input_shape: Vec<usize>,
    pub layers: Vec<Layer>,
    pub label_map: LabelMap,
    pub loss: LossKind,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub label: usize,
}

/// One row of a model summary table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SummaryRow {
    pub name: String,
    pub kind: &'static str,
    pub output_dims: Vec<usize>,
    pub params: usize,
}

/// Index of the largest value; the first one wins on exact ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl SequentialModel {
    /// Stacks `specs` on top of `input_shape`; layer `i` is seeded with
    /// `seed ^ i`.
    pub fn from_specs(
        arch: ArchId,
        config: ArchConfig,
        input_shape: &[usize],
        specs: Vec<LayerSpec>,
        label_map: LabelMap,
        loss: LossKind,
        seed: u64,
    ) -> Result<Self> {
        let mut dims = input_shape.to_vec();
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.into_iter().enumerate() {
            let layer = Layer::new(spec, &dims, seed ^ i as u64)?;
            dims = layer.output_dims().to_vec();
            layers.push(layer);
        }
        if dims != [label_map.len()] {
            return Err(Error::shape("model output", [label_map.len()], dims));
        }
        Ok(Self {
            arch,
            config,
            input_shape: input_shape.to_vec(),
            layers,
            label_map,
            loss,
            seed,
        })
    }

    pub fn class_count(&self) -> usize {
        self.label_map.len()
    }

    /// (frames, features) a sequence must have.
    pub fn sequence_shape(&self) -> (usize, usize) {
        (self.input_shape[0], self.input_shape[1])
    }

    pub fn count_params(&self) -> (usize, usize) {
        count_params(self)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut seen: std::collections::HashMap<&'static str, usize> = Default::default();
        self.layers
            .iter()
            .map(|l| {
                let base = match l.spec {
                    LayerSpec::Conv2D { .. } => "conv2d",
                    LayerSpec::MaxPool2D { .. } => "max_pooling2d",
                    LayerSpec::Flatten => "flatten",
                    LayerSpec::Dense { .. } => "dense",
                    LayerSpec::Dropout { .. } => "dropout",
                    LayerSpec::Lstm { .. } => "lstm",
                    LayerSpec::BatchNorm { .. } => "batch_normalization",
                };
                let n = seen.entry(base).or_default();
                let name = if *n == 0 { base.to_string() } else { format!("{base}_{n}") };
                *n += 1;
                let (t, nt) = l.param_counts();
                SummaryRow {
                    name,
                    kind: l.spec.kind(),
                    output_dims: l.output_dims().to_vec(),
                    params: t + nt,
                }
            })
            .collect()
    }

    /// Tab-separated summary in the usual `Layer (type) / Output Shape /
    /// Param #` layout with totals.
    pub fn render_summary(&self) -> String {
        let mut out = format!("Model: \"{}\"\n\nLayer (type)\tOutput Shape\tParam #\n", self.arch);
        for row in self.summary() {
            let dims: Vec<String> = row.output_dims.iter().map(ToString::to_string).collect();
            out.push_str(&format!(
                "{} ({})\t(None, {})\t{}\n",
                row.name,
                row.kind,
                dims.join(", "),
                row.params
            ));
        }
        let (t, nt) = self.count_params();
        out.push_str(&format!(
            "Total params: {}\nTrainable params: {}\nNon-trainable params: {}\n",
            group_thousands(t + nt),
            group_thousands(t),
            group_thousands(nt)
        ));
        out
    }

    fn batch_tensor(&self, sequences: &[&SignSequence]) -> Result<Tensor> {
        let (frames, features) = self.sequence_shape();
        let per = frames * features;
        let mut data = Vec::with_capacity(sequences.len() * per);
        for seq in sequences {
            if seq.shape() != (frames, features) {
                return Err(Error::shape("sequence", [frames, features], [seq.frames(), seq.features()]));
            }
            data.extend(seq.data().iter().map(|&v| v as f64));
        }
        let mut dims = vec![sequences.len()];
        dims.extend_from_slice(&self.input_shape);
        Tensor::from_vec(&dims, data)
    }

    /// Inference-mode forward pass over a batch tensor.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.infer(&h)?;
        }
        Ok(h)
    }

    /// Training-mode forward pass keeping every layer's cache.
    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, Vec<Cache>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &mut self.layers {
            let (y, cache) = layer.forward_train(&h)?;
            caches.push(cache);
            h = y;
        }
        Ok((h, caches))
    }

    /// Backpropagates `grad` (w.r.t. the model output) through every layer,
    /// including L2 terms on regularized kernels.
    pub fn backward(&self, caches: &[Cache], grad: Tensor) -> Result<Vec<LayerGrads>> {
        let mut grads = vec![Vec::new(); self.layers.len()];
        let mut g = grad;
        for (i, (layer, cache)) in self.layers.iter().zip(caches).enumerate().rev() {
            let (gi, mut lg) = layer.backward(cache, &g)?;
            layer.add_l2_grad(&mut lg);
            grads[i] = lg;
            g = gi;
        }
        Ok(grads)
    }

    pub fn l2_penalty(&self) -> f64 {
        self.layers.iter().map(Layer::l2_penalty).sum()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params.iter_mut()).collect()
    }

    pub fn params(&self) -> impl Iterator<Item = &Param> {
        self.layers.iter().flat_map(|l| l.params.iter())
    }

    pub fn predict(&self, sequence: &SignSequence) -> Result<Prediction> {
        Ok(self.predict_batch(&[sequence])?.remove(0))
    }

    pub fn predict_batch(&self, sequences: &[&SignSequence]) -> Result<Vec<Prediction>> {
        let x = self.batch_tensor(sequences)?;
        let y = self.infer(&x)?;
        Ok((0..sequences.len())
            .map(|n| {
                let probabilities = y.row(n).to_vec();
                let label = argmax(&probabilities);
                Prediction { probabilities, label }
            })
            .collect())
    }

    /// Builds the batch tensor for training or evaluation.
    pub fn batch_input(&self, sequences: &[&SignSequence]) -> Result<Tensor> {
        self.batch_tensor(sequences)
    }

    /// Rounds every parameter to 32-bit precision, the storage precision of
    /// checkpoints.
    pub fn round_to_f32(&mut self) {
        for p in self.params_mut() {
            p.value.round_to_f32();
        }
    }
}

/// (trainable, non-trainable) parameter counts.
pub fn count_params(model: &SequentialModel) -> (usize, usize) {
    model.layers.iter().fold((0, 0), |(t, n), l| {
        let (lt, ln) = l.param_counts();
        (t + lt, n + ln)
    })
}

fn group_thousands(n: usize) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_first_on_ties() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax(&[0.3]), 0);
    }

    #[test]
    fn thousands() {
        assert_eq!(group_thousands(1837594), "1,837,594");
        assert_eq!(group_thousands(0), "0");
        assert_eq!(group_thousands(2048), "2,048");
        assert_eq!(group_thousands(512), "512");
    }
}
