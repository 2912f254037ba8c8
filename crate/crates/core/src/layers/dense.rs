use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `x W + b` for `x: [batch, F]`, `W: [F, U]`, `b: [U]`.
pub fn dense_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let &[b, f] = input.dims() else {
        return Err(Error::shape("dense input rank", "[batch, features]", input.dims()));
    };
    let &[wf, u] = weights.dims() else {
        return Err(Error::shape("dense kernel rank", "[features, units]", weights.dims()));
    };
    if wf != f {
        return Err(Error::shape("dense input features", wf, f));
    }
    if bias.dims() != [u] {
        return Err(Error::shape("dense bias", [u], bias.dims()));
    }
    let w = weights.data();
    let mut out = Vec::with_capacity(b * u);
    for n in 0..b {
        let mut row = bias.data().to_vec();
        for (i, &xv) in input.row(n).iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (acc, &wv) in row.iter_mut().zip(&w[i * u..(i + 1) * u]) {
                *acc += xv * wv;
            }
        }
        out.extend(row);
    }
    Tensor::from_vec(&[b, u], out)
}

/// Returns (grad_input, grad_weights, grad_bias) given the gradient w.r.t.
/// the pre-activation output.
pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let &[b, f] = input.dims() else {
        return Err(Error::shape("dense input rank", "[batch, features]", input.dims()));
    };
    let u = weights.dims()[1];
    if grad_out.dims() != [b, u] {
        return Err(Error::shape("dense grad_out", [b, u], grad_out.dims()));
    }
    let w = weights.data();
    let mut gin = vec![0.0; b * f];
    let mut gw = vec![0.0; f * u];
    let mut gb = vec![0.0; u];
    for n in 0..b {
        let go = grad_out.row(n);
        for (acc, &g) in gb.iter_mut().zip(go) {
            *acc += g;
        }
        let x = input.row(n);
        for i in 0..f {
            let wrow = &w[i * u..(i + 1) * u];
            let gwrow = &mut gw[i * u..(i + 1) * u];
            let xv = x[i];
            let mut s = 0.0;
            for j in 0..u {
                gwrow[j] += xv * go[j];
                s += wrow[j] * go[j];
            }
            gin[n * f + i] = s;
        }
    }
    Ok((
        Tensor::from_vec(&[b, f], gin)?,
        Tensor::from_vec(&[f, u], gw)?,
        Tensor::from_vec(&[u], gb)?,
    ))
}
