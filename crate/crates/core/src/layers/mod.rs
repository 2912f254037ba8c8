//! Layer kernels and the stateful [`Layer`] wrapper used by models.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod lstm;
pub mod pool;

use serde::{Deserialize, Serialize};

pub use activation::Activation;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;
use batchnorm::{BatchNormCache, BatchNormParams};
use lstm::{LstmCache, LstmParams};

pub const DEFAULT_L2: f64 = 0.01;
pub const BN_MOMENTUM: f64 = 0.99;
pub const BN_EPSILON: f64 = 1e-3;

/// Declarative description of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum LayerSpec {
    #[serde(rename = "conv2d")]
    Conv2D {
        filters: usize,
        kernel_h: usize,
        kernel_w: usize,
        activation: Activation,
    },
    #[serde(rename = "max_pool2d")]
    MaxPool2D { pool: usize },
    #[serde(rename = "flatten")]
    Flatten,
    #[serde(rename = "dense")]
    Dense {
        units: usize,
        activation: Activation,
        l2: f64,
    },
    #[serde(rename = "dropout")]
    Dropout { rate: f64 },
    #[serde(rename = "lstm")]
    Lstm {
        units: usize,
        return_sequences: bool,
        activation: Activation,
        l2: f64,
    },
    #[serde(rename = "batch_norm")]
    BatchNorm { momentum: f64, epsilon: f64 },
}

impl LayerSpec {
    pub fn conv(filters: usize, activation: Activation) -> Self {
        LayerSpec::Conv2D {
            filters,
            kernel_h: 3,
            kernel_w: 3,
            activation,
        }
    }

    pub fn max_pool() -> Self {
        LayerSpec::MaxPool2D { pool: 2 }
    }

    pub fn dense(units: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            units,
            activation,
            l2: 0.0,
        }
    }

    pub fn lstm(units: usize, return_sequences: bool, activation: Activation) -> Self {
        LayerSpec::Lstm {
            units,
            return_sequences,
            activation,
            l2: 0.0,
        }
    }

    pub fn batch_norm() -> Self {
        LayerSpec::BatchNorm {
            momentum: BN_MOMENTUM,
            epsilon: BN_EPSILON,
        }
    }

    /// Sets the kernel L2 coefficient on dense and LSTM layers.
    pub fn with_l2(mut self, coeff: f64) -> Self {
        match &mut self {
            LayerSpec::Dense { l2, .. } | LayerSpec::Lstm { l2, .. } => *l2 = coeff,
            _ => {}
        }
        self
    }

    /// Display name in the style `Conv2D`, `LSTM`, ...
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv2D { .. } => "Conv2D",
            LayerSpec::MaxPool2D { .. } => "MaxPooling2D",
            LayerSpec::Flatten => "Flatten",
            LayerSpec::Dense { .. } => "Dense",
            LayerSpec::Dropout { .. } => "Dropout",
            LayerSpec::Lstm { .. } => "LSTM",
            LayerSpec::BatchNorm { .. } => "BatchNormalization",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            LayerSpec::Conv2D {
                filters,
                kernel_h,
                kernel_w,
                ..
            } if filters == 0 || kernel_h == 0 || kernel_w == 0 => {
                bad(format!("conv2d extents must be positive: {self:?}"))
            }
            LayerSpec::MaxPool2D { pool: 0 } => bad("pool size must be positive".into()),
            LayerSpec::Dense { units: 0, .. } | LayerSpec::Lstm { units: 0, .. } => {
                bad(format!("units must be positive: {self:?}"))
            }
            LayerSpec::Dense { l2, .. } | LayerSpec::Lstm { l2, .. } if !(l2 >= 0.0 && l2.is_finite()) => {
                bad(format!("l2 coefficient must be finite and >= 0: {l2}"))
            }
            LayerSpec::Lstm {
                activation: Activation::Softmax,
                ..
            } => bad("softmax is not a valid LSTM cell activation".into()),
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                bad(format!("dropout rate {rate} outside [0, 1)"))
            }
            LayerSpec::BatchNorm { momentum, epsilon }
                if !(0.0..=1.0).contains(&momentum) || epsilon.is_nan() || epsilon <= 0.0 =>
            {
                bad(format!("invalid batch norm settings {self:?}"))
            }
            _ => Ok(()),
        }
    }

    /// Output dims (without the batch axis) for the given input dims.
    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.validate()?;
        match *self {
            LayerSpec::Conv2D {
                filters,
                kernel_h,
                kernel_w,
                ..
            } => match *input {
                [h, w, _] if h >= kernel_h && w >= kernel_w => {
                    Ok(vec![h - kernel_h + 1, w - kernel_w + 1, filters])
                }
                _ => Err(Error::shape("conv2d input", "[h >= kh, w >= kw, c]", input)),
            },
            LayerSpec::MaxPool2D { pool } => match *input {
                [h, w, c] if h >= pool && w >= pool => Ok(vec![h / pool, w / pool, c]),
                _ => Err(Error::shape("max_pool2d input", "[h, w, c]", input)),
            },
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Dense { units, .. } => match *input {
                [_] => Ok(vec![units]),
                _ => Err(Error::shape("dense input", "[features]", input)),
            },
            LayerSpec::Dropout { .. } | LayerSpec::BatchNorm { .. } => {
                if input.is_empty() {
                    Err(Error::shape("layer input", "rank >= 1", input))
                } else {
                    Ok(input.to_vec())
                }
            }
            LayerSpec::Lstm {
                units,
                return_sequences,
                ..
            } => match *input {
                [t, _] if t >= 1 => Ok(if return_sequences { vec![t, units] } else { vec![units] }),
                _ => Err(Error::shape("lstm input", "[steps, features]", input)),
            },
        }
    }
}

/// A named parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: &'static str,
    pub value: Tensor,
    pub trainable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Forward-pass state retained for the backward pass.
#[derive(Clone, Debug)]
pub enum Cache {
    Conv { input: Tensor, output: Tensor },
    Pool { input_dims: Vec<usize>, argmax: Vec<usize> },
    Flatten { input_dims: Vec<usize> },
    Dense { input: Tensor, output: Tensor },
    Dropout { mask: Vec<f64> },
    Lstm(Box<LstmCache>),
    BatchNorm(BatchNormCache),
}

/// Gradients for one layer, aligned with its parameter list; `None` for
/// non-trainable tensors.
pub type LayerGrads = Vec<Option<Tensor>>;

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub params: Vec<Param>,
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    rng: SplitMix64,
}

fn glorot(dims: &[usize], fan_in: usize, fan_out: usize, rng: &mut SplitMix64) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n = dims.iter().product();
    Tensor::from_vec(dims, (0..n).map(|_| rng.uniform_symmetric(limit)).collect()).expect("dims")
}

impl Layer {
    /// Builds a layer for per-sample input `input_dims`, drawing kernel
    /// initializations (and later dropout masks) from SplitMix64(`seed`).
    pub fn new(spec: LayerSpec, input_dims: &[usize], seed: u64) -> Result<Self> {
        let output_dims = spec.output_dims(input_dims)?;
        let mut rng = SplitMix64::new(seed);
        let trainable = |name, value| Param {
            name,
            value,
            trainable: true,
        };
        let params = match spec {
            LayerSpec::Conv2D {
                filters,
                kernel_h,
                kernel_w,
                ..
            } => {
                let cin = input_dims[2];
                let rf = kernel_h * kernel_w;
                vec![
                    trainable(
                        "kernel",
                        glorot(&[kernel_h, kernel_w, cin, filters], rf * cin, rf * filters, &mut rng),
                    ),
                    trainable("bias", Tensor::zeros(&[filters])),
                ]
            }
            LayerSpec::Dense { units, .. } => {
                let f = input_dims[0];
                vec![
                    trainable("kernel", glorot(&[f, units], f, units, &mut rng)),
                    trainable("bias", Tensor::zeros(&[units])),
                ]
            }
            LayerSpec::Lstm { units, .. } => {
                let f = input_dims[1];
                vec![
                    trainable("kernel", glorot(&[f, 4 * units], f, 4 * units, &mut rng)),
                    trainable(
                        "recurrent_kernel",
                        glorot(&[units, 4 * units], units, 4 * units, &mut rng),
                    ),
                    trainable("bias", Tensor::zeros(&[4 * units])),
                ]
            }
            LayerSpec::BatchNorm { .. } => {
                let c = *input_dims.last().expect("validated rank");
                vec![
                    trainable("gamma", Tensor::filled(&[c], 1.0)),
                    trainable("beta", Tensor::zeros(&[c])),
                    Param {
                        name: "moving_mean",
                        value: Tensor::zeros(&[c]),
                        trainable: false,
                    },
                    Param {
                        name: "moving_variance",
                        value: Tensor::filled(&[c], 1.0),
                        trainable: false,
                    },
                ]
            }
            LayerSpec::MaxPool2D { .. } | LayerSpec::Flatten | LayerSpec::Dropout { .. } => Vec::new(),
        };
        Ok(Self {
            spec,
            params,
            input_dims: input_dims.to_vec(),
            output_dims,
            rng,
        })
    }

    pub fn input_dims(&self) -> &[usize] {
        &self.input_dims
    }

    pub fn output_dims(&self) -> &[usize] {
        &self.output_dims
    }

    /// (trainable, non-trainable) scalar counts.
    pub fn param_counts(&self) -> (usize, usize) {
        self.params.iter().fold((0, 0), |(t, n), p| {
            if p.trainable {
                (t + p.value.len(), n)
            } else {
                (t, n + p.value.len())
            }
        })
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.dims().len() != self.input_dims.len() + 1 || x.dims()[1..] != self.input_dims[..] {
            return Err(Error::shape(
                format!("{} input", self.spec.kind()),
                [&[0usize][..], &self.input_dims].concat(),
                x.dims(),
            ));
        }
        Ok(())
    }

    fn param(&self, i: usize) -> &Tensor {
        &self.params[i].value
    }

    /// Inference-mode forward pass: dropout is the identity and batch norm
    /// uses its moving statistics.
    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        match self.spec {
            LayerSpec::Conv2D { activation, filters, .. } => {
                let mut y = conv::conv2d_forward(x, self.param(0), self.param(1))?;
                activation.apply(y.data_mut(), filters);
                Ok(y)
            }
            LayerSpec::Dense { activation, units, .. } => {
                let mut y = dense::dense_forward(x, self.param(0), self.param(1))?;
                activation.apply(y.data_mut(), units);
                Ok(y)
            }
            LayerSpec::MaxPool2D { pool } => Ok(pool::maxpool2d_forward(x, pool)?.0),
            LayerSpec::Flatten => x.clone().reshape(&[x.batch(), self.output_dims[0]]),
            LayerSpec::Dropout { .. } => Ok(x.clone()),
            LayerSpec::Lstm {
                activation,
                return_sequences,
                ..
            } => Ok(lstm::lstm_forward(x, &self.lstm_params(), activation, return_sequences)?.0),
            LayerSpec::BatchNorm { epsilon, .. } => batchnorm::batchnorm_infer(
                x,
                &BatchNormParams {
                    gamma: self.param(0),
                    beta: self.param(1),
                },
                self.param(2),
                self.param(3),
                epsilon,
            ),
        }
    }

    fn lstm_params(&self) -> LstmParams<'_> {
        LstmParams {
            kernel: self.param(0),
            recurrent: self.param(1),
            bias: self.param(2),
        }
    }

    /// Training-mode forward pass. Advances the dropout stream and updates
    /// batch-norm moving statistics.
    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, Cache)> {
        self.check_input(x)?;
        match self.spec {
            LayerSpec::Conv2D { activation, filters, .. } => {
                let mut y = conv::conv2d_forward(x, self.param(0), self.param(1))?;
                activation.apply(y.data_mut(), filters);
                Ok((
                    y.clone(),
                    Cache::Conv {
                        input: x.clone(),
                        output: y,
                    },
                ))
            }
            LayerSpec::Dense { activation, units, .. } => {
                let mut y = dense::dense_forward(x, self.param(0), self.param(1))?;
                activation.apply(y.data_mut(), units);
                Ok((
                    y.clone(),
                    Cache::Dense {
                        input: x.clone(),
                        output: y,
                    },
                ))
            }
            LayerSpec::MaxPool2D { pool } => {
                let (y, argmax) = pool::maxpool2d_forward(x, pool)?;
                Ok((
                    y,
                    Cache::Pool {
                        input_dims: x.dims().to_vec(),
                        argmax,
                    },
                ))
            }
            LayerSpec::Flatten => Ok((
                x.clone().reshape(&[x.batch(), self.output_dims[0]])?,
                Cache::Flatten {
                    input_dims: x.dims().to_vec(),
                },
            )),
            LayerSpec::Dropout { rate } => {
                let (y, mask) = dropout::dropout_train(x, rate, &mut self.rng);
                Ok((y, Cache::Dropout { mask }))
            }
            LayerSpec::Lstm {
                activation,
                return_sequences,
                ..
            } => {
                let (y, cache) = lstm::lstm_forward(x, &self.lstm_params(), activation, return_sequences)?;
                Ok((y, Cache::Lstm(Box::new(cache))))
            }
            LayerSpec::BatchNorm { momentum, epsilon } => {
                let (y, cache, stats) = batchnorm::batchnorm_train(
                    x,
                    &BatchNormParams {
                        gamma: self.param(0),
                        beta: self.param(1),
                    },
                    epsilon,
                )?;
                for (m, b) in self.params[2].value.data_mut().iter_mut().zip(&stats.mean) {
                    *m = momentum * *m + (1.0 - momentum) * b;
                }
                for (v, b) in self.params[3].value.data_mut().iter_mut().zip(&stats.var) {
                    *v = momentum * *v + (1.0 - momentum) * b;
                }
                Ok((y, Cache::BatchNorm(cache)))
            }
        }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<(Tensor, Option<Cache>)> {
        match mode {
            Mode::Infer => Ok((self.infer(x)?, None)),
            Mode::Train => {
                let (y, c) = self.forward_train(x)?;
                Ok((y, Some(c)))
            }
        }
    }

    /// Gradient w.r.t. the layer input and per-parameter gradients, given
    /// the gradient w.r.t. the layer output. Regularization is not included;
    /// see [`Layer::add_l2_grad`].
    pub fn backward(&self, cache: &Cache, grad_out: &Tensor) -> Result<(Tensor, LayerGrads)> {
        let mismatch = || Error::InvalidArgument(format!("cache does not belong to a {} layer", self.spec.kind()));
        match (&self.spec, cache) {
            (LayerSpec::Conv2D { activation, filters, .. }, Cache::Conv { input, output }) => {
                let mut g = grad_out.clone();
                activation.backward(output.data(), g.data_mut(), *filters);
                let grads = conv::conv2d_backward(input, self.param(0), &g)?;
                Ok((grads.input, vec![Some(grads.kernel), Some(grads.bias)]))
            }
            (LayerSpec::Dense { activation, units, .. }, Cache::Dense { input, output }) => {
                let mut g = grad_out.clone();
                activation.backward(output.data(), g.data_mut(), *units);
                let (gi, gw, gb) = dense::dense_backward(input, self.param(0), &g)?;
                Ok((gi, vec![Some(gw), Some(gb)]))
            }
            (LayerSpec::MaxPool2D { .. }, Cache::Pool { input_dims, argmax }) => {
                Ok((pool::maxpool2d_backward(input_dims, argmax, grad_out)?, Vec::new()))
            }
            (LayerSpec::Flatten, Cache::Flatten { input_dims }) => {
                Ok((grad_out.clone().reshape(input_dims)?, Vec::new()))
            }
            (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
                Ok((dropout::dropout_backward(mask, grad_out), Vec::new()))
            }
            (LayerSpec::Lstm { activation, .. }, Cache::Lstm(cache)) => {
                let g = lstm::lstm_backward(cache, &self.lstm_params(), *activation, grad_out)?;
                Ok((g.input, vec![Some(g.kernel), Some(g.recurrent), Some(g.bias)]))
            }
            (LayerSpec::BatchNorm { .. }, Cache::BatchNorm(cache)) => {
                let (gi, gg, gb) = batchnorm::batchnorm_backward(cache, self.param(0), grad_out)?;
                Ok((gi, vec![Some(gg), Some(gb), None, None]))
            }
            _ => Err(mismatch()),
        }
    }

    fn l2_coeff(&self) -> f64 {
        match self.spec {
            LayerSpec::Dense { l2, .. } | LayerSpec::Lstm { l2, .. } => l2,
            _ => 0.0,
        }
    }

    /// `l2 * sum(kernel^2)` for regularized layers, else 0.
    pub fn l2_penalty(&self) -> f64 {
        let l2 = self.l2_coeff();
        if l2 == 0.0 {
            return 0.0;
        }
        l2 * self.param(0).sum_squares()
    }

    /// Adds `2 * l2 * kernel` to the kernel gradient.
    pub fn add_l2_grad(&self, grads: &mut LayerGrads) {
        let l2 = self.l2_coeff();
        if l2 == 0.0 {
            return;
        }
        if let Some(Some(g)) = grads.first_mut() {
            for (gv, &w) in g.data_mut().iter_mut().zip(self.param(0).data()) {
                *gv += 2.0 * l2 * w;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_is_tagged() {
        let spec = LayerSpec::lstm(64, true, Activation::Relu).with_l2(0.01);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"type\":\"lstm\""), "{text}");
        let back: LayerSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(LayerSpec::Dropout { rate: 1.0 }.output_dims(&[4]).is_err());
        assert!(LayerSpec::dense(0, Activation::None).output_dims(&[4]).is_err());
        assert!(LayerSpec::lstm(4, true, Activation::Softmax).output_dims(&[3, 4]).is_err());
        assert!(LayerSpec::conv(4, Activation::Relu).output_dims(&[2, 9, 1]).is_err());
    }

    #[test]
    fn batchnorm_param_accounting() {
        let layer = Layer::new(LayerSpec::batch_norm(), &[30, 128], 0).unwrap();
        assert_eq!(layer.param_counts(), (256, 256));
    }

    #[test]
    fn l2_gradient_matches_penalty_derivative() {
        let layer = Layer::new(LayerSpec::dense(3, Activation::None).with_l2(0.01), &[4], 5).unwrap();
        let mut grads: LayerGrads = vec![Some(Tensor::zeros(&[4, 3])), Some(Tensor::zeros(&[3]))];
        layer.add_l2_grad(&mut grads);
        let w = layer.params[0].value.data();
        for (g, &wv) in grads[0].as_ref().unwrap().data().iter().zip(w) {
            assert!((g - 0.02 * wv).abs() < 1e-15);
        }
        assert!((layer.l2_penalty() - 0.01 * layer.params[0].value.sum_squares()).abs() < 1e-15);
    }

    #[test]
    fn inference_is_bit_stable() {
        let mut layer = Layer::new(LayerSpec::batch_norm(), &[3], 0).unwrap();
        let x = Tensor::from_vec(&[2, 3], vec![1.0, 2.0, 3.0, -1.0, 0.5, 4.0]).unwrap();
        layer.forward_train(&x).unwrap();
        let a = layer.infer(&x).unwrap();
        let b = layer.infer(&x).unwrap();
        assert_eq!(a, b);
        let drop = Layer::new(LayerSpec::Dropout { rate: 0.5 }, &[3], 0).unwrap();
        assert_eq!(drop.infer(&x).unwrap(), x);
    }
}
