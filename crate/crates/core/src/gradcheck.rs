//! Central finite-difference verification of analytic gradients.
//!
//! A layer fragment is reduced to the scalar objective `sum(r * layer(x))`
//! with a fixed random projection `r`; every input element and every
//! trainable parameter element is perturbed by `±h`.

use crate::error::{Error, Result};
use crate::layers::Layer;
use crate::loss::{loss, LossKind};
use crate::rng::SplitMix64;
use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;

/// Denominator floor for [`relative_error`]; below it the comparison is
/// effectively absolute.
pub const REL_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst entry.
    pub worst: String,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error <= tolerance
    }

    fn record(&mut self, name: &str, index: usize, analytic: f64, numeric: f64) -> Result<()> {
        if !analytic.is_finite() || !numeric.is_finite() {
            return Err(Error::NonFinite(format!("gradient of {name}[{index}]")));
        }
        let e = relative_error(analytic, numeric);
        self.checked += 1;
        if e > self.max_rel_error {
            self.max_rel_error = e;
            self.worst = format!("{name}[{index}]");
        }
        Ok(())
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn objective(layer: &Layer, input: &Tensor, projection: &[f64]) -> Result<f64> {
    let mut probe = layer.clone();
    let (y, _) = probe.forward_train(input)?;
    if !y.is_finite() {
        return Err(Error::NonFinite(format!("{} output", layer.spec.kind())));
    }
    Ok(y.data().iter().zip(projection).map(|(a, b)| a * b).sum())
}

/// Checks a single layer's backward pass at `input` (training mode).
pub fn grad_check_layer(layer: &Layer, input: &Tensor, seed: u64) -> Result<GradCheckReport> {
    let mut probe = layer.clone();
    let (y, cache) = probe.forward_train(input)?;
    let mut rng = SplitMix64::new(seed);
    let projection: Vec<f64> = (0..y.len()).map(|_| rng.uniform_symmetric(1.0)).collect();
    let grad_out = Tensor::from_vec(y.dims(), projection.clone())?;
    let (grad_in, grads) = layer.backward(&cache, &grad_out)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + STEP;
        let up = objective(layer, &x, &projection)?;
        x.data_mut()[i] = orig - STEP;
        let down = objective(layer, &x, &projection)?;
        x.data_mut()[i] = orig;
        report.record("input", i, grad_in.data()[i], (up - down) / (2.0 * STEP))?;
    }
    for (pi, grad) in grads.iter().enumerate() {
        let Some(grad) = grad else { continue };
        let mut perturbed = layer.clone();
        for i in 0..grad.len() {
            let orig = perturbed.params[pi].value.data()[i];
            perturbed.params[pi].value.data_mut()[i] = orig + STEP;
            let up = objective(&perturbed, input, &projection)?;
            perturbed.params[pi].value.data_mut()[i] = orig - STEP;
            let down = objective(&perturbed, input, &projection)?;
            perturbed.params[pi].value.data_mut()[i] = orig;
            report.record(layer.params[pi].name, i, grad.data()[i], (up - down) / (2.0 * STEP))?;
        }
    }
    Ok(report)
}

/// Checks the gradient of a loss w.r.t. its predictions.
pub fn grad_check_loss(kind: LossKind, pred: &Tensor, labels: &[usize]) -> Result<GradCheckReport> {
    let (_, grad) = loss(kind, pred, labels)?;
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    let mut p = pred.clone();
    for i in 0..p.len() {
        let orig = p.data()[i];
        p.data_mut()[i] = orig + STEP;
        let (up, _) = loss(kind, &p, labels)?;
        p.data_mut()[i] = orig - STEP;
        let (down, _) = loss(kind, &p, labels)?;
        p.data_mut()[i] = orig;
        report.record("predictions", i, grad.data()[i], (up - down) / (2.0 * STEP))?;
    }
    Ok(report)
}

/// Runs [`grad_check_layer`] and returns the maximum relative error, or an
/// error naming the worst entry when it exceeds `tolerance`.
pub fn grad_check(layer: &Layer, input: &Tensor, tolerance: f64) -> Result<f64> {
    let report = grad_check_layer(layer, input, 0x5eed)?;
    if report.passes(tolerance) {
        Ok(report.max_rel_error)
    } else {
        Err(Error::InvalidArgument(format!(
            "gradient check failed: relative error {:.3e} at {} exceeds {tolerance:.1e}",
            report.max_rel_error, report.worst
        )))
    }
}
