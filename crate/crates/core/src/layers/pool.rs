use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Non-overlapping max pooling over NHWC with floor semantics. Returns the
/// pooled tensor and, per output element, the flat input index of the
/// window maximum (first occurrence in row-major window order on ties).
pub fn maxpool2d_forward(input: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>)> {
    let &[b, h, w, c] = input.dims() else {
        return Err(Error::shape("maxpool2d input rank", "[batch, h, w, c]", input.dims()));
    };
    if pool == 0 || h < pool || w < pool {
        return Err(Error::shape("maxpool2d spatial extent", [pool, pool], [h, w]));
    }
    let (ho, wo) = (h / pool, w / pool);
    let x = input.data();
    let mut out = Vec::with_capacity(b * ho * wo * c);
    let mut argmax = Vec::with_capacity(b * ho * wo * c);
    for n in 0..b {
        for y in 0..ho {
            for xo in 0..wo {
                for ch in 0..c {
                    let mut best_idx = ((n * h + y * pool) * w + xo * pool) * c + ch;
                    let mut best = x[best_idx];
                    for dy in 0..pool {
                        for dx in 0..pool {
                            let idx = ((n * h + y * pool + dy) * w + xo * pool + dx) * c + ch;
                            if x[idx] > best {
                                best = x[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok((Tensor::from_vec(&[b, ho, wo, c], out)?, argmax))
}

/// Routes each output gradient to its window's argmax.
pub fn maxpool2d_backward(input_dims: &[usize], argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if grad_out.len() != argmax.len() {
        return Err(Error::shape("maxpool2d grad_out", argmax.len(), grad_out.len()));
    }
    let mut gin = Tensor::zeros(input_dims);
    let g = gin.data_mut();
    for (&idx, &v) in argmax.iter().zip(grad_out.data()) {
        g[idx] += v;
    }
    Ok(gin)
}
