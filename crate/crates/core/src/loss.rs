//! Cross-entropy losses on probability outputs.
//!
//! Each prediction row is first divided by its sum (a no-op for softmax
//! heads, a renormalization for sigmoid heads), then clipped to
//! `[1e-7, 1 - 1e-7]` before the logarithm; the clip has zero derivative
//! outside that interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CLIP_EPSILON: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Integer class targets.
    SparseCce,
    /// One-hot targets.
    Cce,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::SparseCce => "sparse_categorical_crossentropy",
            LossKind::Cce => "categorical_crossentropy",
        }
    }
}

#[inline]
fn clip(p: f64) -> f64 {
    p.clamp(CLIP_EPSILON, 1.0 - CLIP_EPSILON)
}

#[inline]
fn clip_grad(p: f64) -> f64 {
    if (CLIP_EPSILON..=1.0 - CLIP_EPSILON).contains(&p) {
        1.0
    } else {
        0.0
    }
}

fn pred_dims(pred: &Tensor) -> Result<(usize, usize)> {
    match *pred.dims() {
        [b, k] if b > 0 && k > 0 => Ok((b, k)),
        _ => Err(Error::shape("loss predictions", "[batch, classes]", pred.dims())),
    }
}

fn row_sum(row: &[f64]) -> Result<f64> {
    let s: f64 = row.iter().sum();
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::NonFinite(format!("loss normalizer (row sum {s})")))
    }
}

/// Mean `-ln q[label]` with `q = p / sum(p)`, and its gradient w.r.t. `pred`.
pub fn sparse_cce(pred: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (b, k) = pred_dims(pred)?;
    if labels.len() != b {
        return Err(Error::shape("loss labels", b, labels.len()));
    }
    let mut total = 0.0;
    let mut grad = Tensor::zeros(pred.dims());
    let g = grad.data_mut();
    for (n, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::LabelOutOfRange { label, classes: k });
        }
        let row = &pred.data()[n * k..(n + 1) * k];
        let s = row_sum(row)?;
        let q = row[label] / s;
        total += -clip(q).ln();
        let a = clip_grad(q) / clip(q);
        let weighted = a * row[label];
        for j in 0..k {
            let aj = if j == label { a } else { 0.0 };
            g[n * k + j] = -(aj * s - weighted) / (s * s) / b as f64;
        }
    }
    Ok((total / b as f64, grad))
}

/// Mean `-sum_k y_k ln q_k` with `q = p / sum(p)`, and its gradient w.r.t.
/// `pred`.
pub fn cce(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    let (b, k) = pred_dims(pred)?;
    if target.dims() != pred.dims() {
        return Err(Error::shape("loss targets", pred.dims(), target.dims()));
    }
    let mut total = 0.0;
    let mut grad = Tensor::zeros(pred.dims());
    let g = grad.data_mut();
    let mut a = vec![0.0; k];
    for n in 0..b {
        let row = &pred.data()[n * k..(n + 1) * k];
        let y = &target.data()[n * k..(n + 1) * k];
        let s = row_sum(row)?;
        let mut sum = 0.0;
        let mut weighted = 0.0;
        for j in 0..k {
            let q = row[j] / s;
            sum += y[j] * clip(q).ln();
            a[j] = y[j] * clip_grad(q) / clip(q);
            weighted += a[j] * row[j];
        }
        total += -sum;
        for j in 0..k {
            g[n * k + j] = -(a[j] * s - weighted) / (s * s) / b as f64;
        }
    }
    Ok((total / b as f64, grad))
}

/// Dispatches on `kind`; integer labels are one-hot encoded for `Cce`.
pub fn loss(kind: LossKind, pred: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    match kind {
        LossKind::SparseCce => sparse_cce(pred, labels),
        LossKind::Cce => {
            let (b, k) = pred_dims(pred)?;
            if labels.len() != b {
                return Err(Error::shape("loss labels", b, labels.len()));
            }
            let mut target = Tensor::zeros(&[b, k]);
            for (n, &l) in labels.iter().enumerate() {
                if l >= k {
                    return Err(Error::LabelOutOfRange { label: l, classes: k });
                }
                target.data_mut()[n * k + l] = 1.0;
            }
            cce(pred, &target)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn perfect_prediction_near_zero() {
        let pred = Tensor::from_vec(&[1, 3], vec![0.0, 1.0, 0.0]).unwrap();
        let (l, _) = sparse_cce(&pred, &[1]).unwrap();
        assert!(l <= 1e-7 * 3.0);
        let (l2, _) = loss(LossKind::Cce, &pred, &[1]).unwrap();
        assert_eq!(l, l2);
    }

    #[test]
    fn uniform_26_is_ln_26() {
        let pred = Tensor::filled(&[4, 26], 1.0 / 26.0);
        let (l, _) = sparse_cce(&pred, &[0, 5, 13, 25]).unwrap();
        assert!((l - 26f64.ln()).abs() < 1e-4);
        assert!((l - 3.2581).abs() < 1e-4);
    }

    #[test]
    fn matches_per_sample_oracle() {
        let mut rng = SplitMix64::new(8);
        let (b, k) = (6, 5);
        let data: Vec<f64> = (0..b * k).map(|_| rng.next_f64()).collect();
        let labels: Vec<usize> = (0..b).map(|_| (rng.next_u64() % k as u64) as usize).collect();
        let pred = Tensor::from_vec(&[b, k], data.clone()).unwrap();
        let (l, _) = sparse_cce(&pred, &labels).unwrap();
        let mut expect = 0.0;
        for n in 0..b {
            let row = &data[n * k..(n + 1) * k];
            let q = row[labels[n]] / row.iter().sum::<f64>();
            expect -= q.clamp(1e-7, 1.0 - 1e-7).ln();
        }
        assert!((l - expect / b as f64).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_label_rejected() {
        let pred = Tensor::filled(&[1, 3], 0.3);
        assert!(matches!(
            sparse_cce(&pred, &[3]),
            Err(Error::LabelOutOfRange { label: 3, classes: 3 })
        ));
        assert!(loss(LossKind::Cce, &pred, &[4]).is_err());
    }

    #[test]
    fn sigmoid_scores_are_renormalized() {
        let pred = Tensor::filled(&[2, 26], 0.5);
        let (l, _) = loss(LossKind::Cce, &pred, &[3, 7]).unwrap();
        assert!((l - 26f64.ln()).abs() < 1e-12);
        assert!(sparse_cce(&Tensor::zeros(&[1, 3]), &[0]).is_err());
    }

    #[test]
    fn clipped_region_has_zero_gradient() {
        let pred = Tensor::from_vec(&[1, 2], vec![0.0, 1.0]).unwrap();
        let (_, g) = sparse_cce(&pred, &[0]).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0]);
    }
}
