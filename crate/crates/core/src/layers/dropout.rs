use crate::rng::SplitMix64;
use crate::tensor::Tensor;

/// Inverted dropout. Returns the output and the per-element scale applied
/// (0 for dropped units, `1 / (1 - rate)` for kept ones).
pub fn dropout_train(input: &Tensor, rate: f64, rng: &mut SplitMix64) -> (Tensor, Vec<f64>) {
    if rate == 0.0 {
        return (input.clone(), vec![1.0; input.len()]);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..input.len())
        .map(|_| if rng.next_f64() < rate { 0.0 } else { keep })
        .collect();
    let data = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
    (
        Tensor::from_vec(input.dims(), data).expect("same shape"),
        mask,
    )
}

pub fn dropout_backward(mask: &[f64], grad_out: &Tensor) -> Tensor {
    let data = grad_out.data().iter().zip(mask).map(|(g, m)| g * m).collect();
    Tensor::from_vec(grad_out.dims(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_identity() {
        let x = Tensor::from_vec(&[1, 3], vec![1.0, -2.0, 3.0]).unwrap();
        let (y, _) = dropout_train(&x, 0.0, &mut SplitMix64::new(1));
        assert_eq!(y, x);
    }

    #[test]
    fn expectation_preserved() {
        let n = 100_000;
        let x = Tensor::filled(&[1, n], 1.0);
        let (y, mask) = dropout_train(&x, 0.2, &mut SplitMix64::new(77));
        let mean = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
        let dropped = mask.iter().filter(|&&m| m == 0.0).count() as f64 / n as f64;
        assert!((dropped - 0.2).abs() < 0.01);
    }
}
