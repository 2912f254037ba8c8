use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Softmax,
    Tanh,
    None,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
            Activation::Tanh => "tanh",
            Activation::None => "none",
        }
    }

    /// Elementwise activation. Panics for softmax, which needs an axis.
    #[inline]
    pub fn scalar(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::None => x,
            Activation::Softmax => panic!("softmax is not elementwise"),
        }
    }

    /// Derivative expressed through the activation output `y`.
    /// ReLU's derivative at 0 is 0.
    #[inline]
    pub fn scalar_grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::None => 1.0,
            Activation::Softmax => panic!("softmax is not elementwise"),
        }
    }

    /// Applies the activation in place; softmax runs over consecutive
    /// chunks of `width` (the last axis).
    pub fn apply(self, x: &mut [f64], width: usize) {
        match self {
            Activation::None => {}
            Activation::Softmax => x.chunks_exact_mut(width).for_each(softmax_in_place),
            _ => x.iter_mut().for_each(|v| *v = self.scalar(*v)),
        }
    }

    /// Turns `grad` (w.r.t. the output `y`) into the gradient w.r.t. the
    /// pre-activation, in place.
    pub fn backward(self, y: &[f64], grad: &mut [f64], width: usize) {
        match self {
            Activation::None => {}
            Activation::Softmax => {
                for (yr, gr) in y.chunks_exact(width).zip(grad.chunks_exact_mut(width)) {
                    let dot: f64 = yr.iter().zip(gr.iter()).map(|(a, b)| a * b).sum();
                    for (g, &p) in gr.iter_mut().zip(yr) {
                        *g = p * (*g - dot);
                    }
                }
            }
            _ => {
                for (g, &v) in grad.iter_mut().zip(y) {
                    *g *= self.scalar_grad_from_output(v);
                }
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax over one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
