//! Batch normalization over every axis but the last.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub struct BatchNormParams<'a> {
    pub gamma: &'a Tensor,
    pub beta: &'a Tensor,
}

#[derive(Clone, Debug)]
pub struct BatchNormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    dims: Vec<usize>,
}

/// Per-channel batch statistics produced in training mode.
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

fn channels(input: &Tensor, gamma: &Tensor) -> Result<usize> {
    let c = *input
        .dims()
        .last()
        .ok_or_else(|| Error::shape("batchnorm input rank", ">= 1", 0))?;
    if gamma.dims() != [c] {
        return Err(Error::shape("batchnorm channels", [c], gamma.dims()));
    }
    Ok(c)
}

/// Training-mode normalization with biased batch variance.
pub fn batchnorm_train(
    input: &Tensor,
    p: &BatchNormParams<'_>,
    epsilon: f64,
) -> Result<(Tensor, BatchNormCache, BatchStats)> {
    let c = channels(input, p.gamma)?;
    let x = input.data();
    let count = (x.len() / c) as f64;
    let mut mean = vec![0.0; c];
    for row in x.chunks_exact(c) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; c];
    for row in x.chunks_exact(c) {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= count);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + epsilon).sqrt()).collect();
    let mut xhat = Vec::with_capacity(x.len());
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks_exact(c) {
        for j in 0..c {
            let xh = (row[j] - mean[j]) * inv_std[j];
            xhat.push(xh);
            out.push(p.gamma.data()[j] * xh + p.beta.data()[j]);
        }
    }
    Ok((
        Tensor::from_vec(input.dims(), out)?,
        BatchNormCache {
            xhat,
            inv_std,
            dims: input.dims().to_vec(),
        },
        BatchStats { mean, var },
    ))
}

/// Inference-mode normalization with fixed statistics.
pub fn batchnorm_infer(
    input: &Tensor,
    p: &BatchNormParams<'_>,
    moving_mean: &Tensor,
    moving_var: &Tensor,
    epsilon: f64,
) -> Result<Tensor> {
    let c = channels(input, p.gamma)?;
    let scale: Vec<f64> = (0..c)
        .map(|j| p.gamma.data()[j] / (moving_var.data()[j] + epsilon).sqrt())
        .collect();
    let mut out = Vec::with_capacity(input.len());
    for row in input.data().chunks_exact(c) {
        for j in 0..c {
            out.push((row[j] - moving_mean.data()[j]) * scale[j] + p.beta.data()[j]);
        }
    }
    Tensor::from_vec(input.dims(), out)
}

/// Returns (grad_input, grad_gamma, grad_beta).
pub fn batchnorm_backward(
    cache: &BatchNormCache,
    gamma: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    if grad_out.dims() != cache.dims.as_slice() {
        return Err(Error::shape("batchnorm grad_out", &cache.dims, grad_out.dims()));
    }
    let c = gamma.len();
    let g = grad_out.data();
    let count = (g.len() / c) as f64;
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for (grow, xrow) in g.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
        for j in 0..c {
            dbeta[j] += grow[j];
            dgamma[j] += grow[j] * xrow[j];
        }
    }
    // dx = gamma * inv_std / N * (N * dy - sum(dy) - xhat * sum(dy * xhat))
    let mut dx = Vec::with_capacity(g.len());
    for (grow, xrow) in g.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
        for j in 0..c {
            let k = gamma.data()[j] * cache.inv_std[j] / count;
            dx.push(k * (count * grow[j] - dbeta[j] - xrow[j] * dgamma[j]));
        }
    }
    Ok((
        Tensor::from_vec(&cache.dims, dx)?,
        Tensor::from_vec(&[c], dgamma)?,
        Tensor::from_vec(&[c], dbeta)?,
    ))
}
