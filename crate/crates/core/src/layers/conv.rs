//! Valid-padding, stride-1 2-D convolution over NHWC tensors.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Gradients of a convolution w.r.t. its input, kernel and bias.
pub struct ConvGrads {
    pub input: Tensor,
    pub kernel: Tensor,
    pub bias: Tensor,
}

fn check(input: &Tensor, kernel: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize, usize, usize, usize, usize)> {
    let &[b, h, w, cin] = input.dims() else {
        return Err(Error::shape("conv2d input rank", "[batch, h, w, c]", input.dims()));
    };
    let &[kh, kw, kcin, cout] = kernel.dims() else {
        return Err(Error::shape("conv2d kernel rank", "[kh, kw, cin, cout]", kernel.dims()));
    };
    if kcin != cin {
        return Err(Error::shape("conv2d input channels", kcin, cin));
    }
    if bias.dims() != [cout] {
        return Err(Error::shape("conv2d bias", [cout], bias.dims()));
    }
    if h < kh || w < kw {
        return Err(Error::shape("conv2d spatial extent", [kh, kw], [h, w]));
    }
    Ok((b, h, w, cin, kh, kw, cout))
}

/// `out[b,y,x,o] = bias[o] + sum_{dy,dx,c} in[b,y+dy,x+dx,c] * k[dy,dx,c,o]`.
pub fn conv2d_forward(input: &Tensor, kernel: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (b, h, w, cin, kh, kw, cout) = check(input, kernel, bias)?;
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    let x = input.data();
    let k = kernel.data();
    let mut out = vec![0.0; b * ho * wo * cout];
    for n in 0..b {
        for y in 0..ho {
            for xo in 0..wo {
                let o_off = ((n * ho + y) * wo + xo) * cout;
                let acc = &mut out[o_off..o_off + cout];
                acc.copy_from_slice(bias.data());
                for dy in 0..kh {
                    for dx in 0..kw {
                        let i_off = ((n * h + y + dy) * w + xo + dx) * cin;
                        let k_off = (dy * kw + dx) * cin * cout;
                        for c in 0..cin {
                            let a = x[i_off + c];
                            if a == 0.0 {
                                continue;
                            }
                            let krow = &k[k_off + c * cout..k_off + (c + 1) * cout];
                            for (o, &kv) in acc.iter_mut().zip(krow) {
                                *o += a * kv;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[b, ho, wo, cout], out)
}

/// Backward pass given the gradient w.r.t. the (pre-activation) output.
pub fn conv2d_backward(input: &Tensor, kernel: &Tensor, grad_out: &Tensor) -> Result<ConvGrads> {
    let &[b, h, w, cin] = input.dims() else {
        return Err(Error::shape("conv2d input rank", "[batch, h, w, c]", input.dims()));
    };
    let &[kh, kw, _, cout] = kernel.dims() else {
        return Err(Error::shape("conv2d kernel rank", "[kh, kw, cin, cout]", kernel.dims()));
    };
    let (ho, wo) = (h - kh + 1, w - kw + 1);
    if grad_out.dims() != [b, ho, wo, cout] {
        return Err(Error::shape("conv2d grad_out", [b, ho, wo, cout], grad_out.dims()));
    }
    let x = input.data();
    let k = kernel.data();
    let g = grad_out.data();
    let mut gin = vec![0.0; x.len()];
    let mut gk = vec![0.0; k.len()];
    let mut gb = vec![0.0; cout];
    for n in 0..b {
        for y in 0..ho {
            for xo in 0..wo {
                let o_off = ((n * ho + y) * wo + xo) * cout;
                let go = &g[o_off..o_off + cout];
                for (acc, &v) in gb.iter_mut().zip(go) {
                    *acc += v;
                }
                for dy in 0..kh {
                    for dx in 0..kw {
                        let i_off = ((n * h + y + dy) * w + xo + dx) * cin;
                        let k_off = (dy * kw + dx) * cin * cout;
                        for c in 0..cin {
                            let a = x[i_off + c];
                            let krow = &k[k_off + c * cout..k_off + (c + 1) * cout];
                            let gkrow = &mut gk[k_off + c * cout..k_off + (c + 1) * cout];
                            let mut s = 0.0;
                            for o in 0..cout {
                                gkrow[o] += a * go[o];
                                s += krow[o] * go[o];
                            }
                            gin[i_off + c] += s;
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::from_vec(input.dims(), gin)?,
        kernel: Tensor::from_vec(kernel.dims(), gk)?,
        bias: Tensor::from_vec(&[cout], gb)?,
    })
}
