//! LSTM layer with full backpropagation through time.
//!
//! Parameter layout: `kernel [F, 4U]`, `recurrent [U, 4U]`, `bias [4U]`,
//! gate blocks ordered input, forget, candidate, output. The gates use the
//! logistic sigmoid; `activation` is applied to the candidate and to the
//! cell state before the output gate (tanh in the classic cell).

use super::activation::Activation;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub struct LstmParams<'a> {
    pub kernel: &'a Tensor,
    pub recurrent: &'a Tensor,
    pub bias: &'a Tensor,
}

/// Everything the backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct LstmCache {
    batch: usize,
    steps: usize,
    features: usize,
    units: usize,
    input: Vec<f64>,
    /// Post-activation gates per (b, t): i | f | g | o.
    gates: Vec<f64>,
    /// Cell state per (b, t + 1); slot 0 is the zero initial state.
    cell: Vec<f64>,
    /// Hidden state per (b, t + 1); slot 0 is the zero initial state.
    hidden: Vec<f64>,
    /// activation(c_t) per (b, t).
    cell_act: Vec<f64>,
}

pub struct LstmGrads {
    pub input: Tensor,
    pub kernel: Tensor,
    pub recurrent: Tensor,
    pub bias: Tensor,
}

fn dims(input: &Tensor, p: &LstmParams<'_>) -> Result<(usize, usize, usize, usize)> {
    let &[b, t, f] = input.dims() else {
        return Err(Error::shape("lstm input rank", "[batch, steps, features]", input.dims()));
    };
    if t == 0 {
        return Err(Error::shape("lstm steps", ">= 1", 0));
    }
    let &[kf, u4] = p.kernel.dims() else {
        return Err(Error::shape("lstm kernel rank", "[features, 4*units]", p.kernel.dims()));
    };
    if kf != f {
        return Err(Error::shape("lstm input features", kf, f));
    }
    let u = u4 / 4;
    if u4 != 4 * u || p.recurrent.dims() != [u, u4] || p.bias.dims() != [u4] {
        return Err(Error::shape(
            "lstm parameters",
            format!("kernel [{f}, 4U], recurrent [U, 4U], bias [4U]"),
            format!("{:?} {:?} {:?}", p.kernel.dims(), p.recurrent.dims(), p.bias.dims()),
        ));
    }
    Ok((b, t, f, u))
}

/// Runs the layer; the output is `[batch, steps, units]` when
/// `return_sequences`, else the last hidden state `[batch, units]`.
pub fn lstm_forward(
    input: &Tensor,
    params: &LstmParams<'_>,
    activation: Activation,
    return_sequences: bool,
) -> Result<(Tensor, LstmCache)> {
    let (b, steps, f, u) = dims(input, params)?;
    let u4 = 4 * u;
    let w = params.kernel.data();
    let r = params.recurrent.data();
    let x = input.data();
    let mut gates = vec![0.0; b * steps * u4];
    let mut cell = vec![0.0; b * (steps + 1) * u];
    let mut hidden = vec![0.0; b * (steps + 1) * u];
    let mut cell_act = vec![0.0; b * steps * u];
    let mut z = vec![0.0; u4];
    for n in 0..b {
        for t in 0..steps {
            z.copy_from_slice(params.bias.data());
            let xt = &x[(n * steps + t) * f..(n * steps + t + 1) * f];
            for (i, &xv) in xt.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                for (acc, &wv) in z.iter_mut().zip(&w[i * u4..(i + 1) * u4]) {
                    *acc += xv * wv;
                }
            }
            let h_prev = &hidden[(n * (steps + 1) + t) * u..(n * (steps + 1) + t + 1) * u];
            for (i, &hv) in h_prev.iter().enumerate() {
                if hv == 0.0 {
                    continue;
                }
                for (acc, &rv) in z.iter_mut().zip(&r[i * u4..(i + 1) * u4]) {
                    *acc += hv * rv;
                }
            }
            let g_off = (n * steps + t) * u4;
            let gt = &mut gates[g_off..g_off + u4];
            for j in 0..u {
                gt[j] = Activation::Sigmoid.scalar(z[j]);
                gt[u + j] = Activation::Sigmoid.scalar(z[u + j]);
                gt[2 * u + j] = activation.scalar(z[2 * u + j]);
                gt[3 * u + j] = Activation::Sigmoid.scalar(z[3 * u + j]);
            }
            let c_prev_off = (n * (steps + 1) + t) * u;
            let c_off = c_prev_off + u;
            for j in 0..u {
                let c = gt[u + j] * cell[c_prev_off + j] + gt[j] * gt[2 * u + j];
                cell[c_off + j] = c;
                let a = activation.scalar(c);
                cell_act[(n * steps + t) * u + j] = a;
                hidden[c_off + j] = gt[3 * u + j] * a;
            }
        }
    }
    let out = if return_sequences {
        let mut data = Vec::with_capacity(b * steps * u);
        for n in 0..b {
            data.extend_from_slice(&hidden[(n * (steps + 1) + 1) * u..(n + 1) * (steps + 1) * u]);
        }
        Tensor::from_vec(&[b, steps, u], data)?
    } else {
        let mut data = Vec::with_capacity(b * u);
        for n in 0..b {
            data.extend_from_slice(&hidden[(n * (steps + 1) + steps) * u..(n + 1) * (steps + 1) * u]);
        }
        Tensor::from_vec(&[b, u], data)?
    };
    let cache = LstmCache {
        batch: b,
        steps,
        features: f,
        units: u,
        input: x.to_vec(),
        gates,
        cell,
        hidden,
        cell_act,
    };
    Ok((out, cache))
}

/// Backpropagation through time. `grad_out` has the forward output's shape.
pub fn lstm_backward(
    cache: &LstmCache,
    params: &LstmParams<'_>,
    activation: Activation,
    grad_out: &Tensor,
) -> Result<LstmGrads> {
    let LstmCache {
        batch: b,
        steps,
        features: f,
        units: u,
        ..
    } = *cache;
    let u4 = 4 * u;
    let seq = grad_out.dims() == [b, steps, u];
    if !seq && grad_out.dims() != [b, u] {
        return Err(Error::shape("lstm grad_out", [b, steps, u], grad_out.dims()));
    }
    let w = params.kernel.data();
    let r = params.recurrent.data();
    let go = grad_out.data();
    let mut gx = vec![0.0; b * steps * f];
    let mut gw = vec![0.0; f * u4];
    let mut gr = vec![0.0; u * u4];
    let mut gb = vec![0.0; u4];
    let mut dh_next = vec![0.0; u];
    let mut dc_next = vec![0.0; u];
    let mut dz = vec![0.0; u4];
    for n in 0..b {
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        dc_next.iter_mut().for_each(|v| *v = 0.0);
        for t in (0..steps).rev() {
            let g_off = (n * steps + t) * u4;
            let gt = &cache.gates[g_off..g_off + u4];
            let c_prev = &cache.cell[(n * (steps + 1) + t) * u..(n * (steps + 1) + t + 1) * u];
            let h_prev = &cache.hidden[(n * (steps + 1) + t) * u..(n * (steps + 1) + t + 1) * u];
            let ca = &cache.cell_act[(n * steps + t) * u..(n * steps + t + 1) * u];
            for j in 0..u {
                let mut dh = dh_next[j];
                if seq {
                    dh += go[(n * steps + t) * u + j];
                } else if t == steps - 1 {
                    dh += go[n * u + j];
                }
                let (i, fg, g, o) = (gt[j], gt[u + j], gt[2 * u + j], gt[3 * u + j]);
                let d_o = dh * ca[j];
                let dc = dc_next[j] + dh * o * activation.scalar_grad_from_output(ca[j]);
                let di = dc * g;
                let dg = dc * i;
                let df = dc * c_prev[j];
                dc_next[j] = dc * fg;
                dz[j] = di * i * (1.0 - i);
                dz[u + j] = df * fg * (1.0 - fg);
                dz[2 * u + j] = dg * activation.scalar_grad_from_output(g);
                dz[3 * u + j] = d_o * o * (1.0 - o);
            }
            for (acc, &d) in gb.iter_mut().zip(&dz) {
                *acc += d;
            }
            let xt = &cache.input[(n * steps + t) * f..(n * steps + t + 1) * f];
            let gxt = &mut gx[(n * steps + t) * f..(n * steps + t + 1) * f];
            for i in 0..f {
                let wrow = &w[i * u4..(i + 1) * u4];
                let gwrow = &mut gw[i * u4..(i + 1) * u4];
                let xv = xt[i];
                let mut s = 0.0;
                for k in 0..u4 {
                    gwrow[k] += xv * dz[k];
                    s += wrow[k] * dz[k];
                }
                gxt[i] = s;
            }
            for i in 0..u {
                let rrow = &r[i * u4..(i + 1) * u4];
                let grrow = &mut gr[i * u4..(i + 1) * u4];
                let hv = h_prev[i];
                let mut s = 0.0;
                for k in 0..u4 {
                    grrow[k] += hv * dz[k];
                    s += rrow[k] * dz[k];
                }
                dh_next[i] = s;
            }
        }
    }
    Ok(LstmGrads {
        input: Tensor::from_vec(&[b, steps, f], gx)?,
        kernel: Tensor::from_vec(&[f, u4], gw)?,
        recurrent: Tensor::from_vec(&[u, u4], gr)?,
        bias: Tensor::from_vec(&[u4], gb)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random(dims: &[usize], scale: f64, rng: &mut SplitMix64) -> Tensor {
        let n = dims.iter().product();
        Tensor::from_vec(dims, (0..n).map(|_| rng.uniform_symmetric(scale)).collect()).unwrap()
    }

    #[test]
    fn zero_params_give_zero_output() {
        let (f, u) = (4, 3);
        let k = Tensor::zeros(&[f, 4 * u]);
        let r = Tensor::zeros(&[u, 4 * u]);
        let bias = Tensor::zeros(&[4 * u]);
        let mut rng = SplitMix64::new(1);
        let x = random(&[2, 5, f], 3.0, &mut rng);
        for act in [Activation::Tanh, Activation::Relu] {
            let p = LstmParams {
                kernel: &k,
                recurrent: &r,
                bias: &bias,
            };
            let (y, _) = lstm_forward(&x, &p, act, true).unwrap();
            assert!(y.data().iter().all(|&v| v == 0.0));
        }
    }

    /// Scalar per-timestep oracle with explicit gate algebra.
    fn oracle(x: &Tensor, k: &Tensor, r: &Tensor, bias: &Tensor, act: fn(f64) -> f64) -> Vec<f64> {
        let [b, steps, f] = x.dims().try_into().unwrap();
        let u = r.dims()[0];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut out = Vec::new();
        for n in 0..b {
            let mut h = vec![0.0; u];
            let mut c = vec![0.0; u];
            for t in 0..steps {
                let mut hn = vec![0.0; u];
                let mut cn = vec![0.0; u];
                for j in 0..u {
                    let pre = |gate: usize| {
                        let col = gate * u + j;
                        let mut s = bias.data()[col];
                        for i in 0..f {
                            s += x.data()[(n * steps + t) * f + i] * k.data()[i * 4 * u + col];
                        }
                        for i in 0..u {
                            s += h[i] * r.data()[i * 4 * u + col];
                        }
                        s
                    };
                    let ig = sig(pre(0));
                    let fg = sig(pre(1));
                    let gg = act(pre(2));
                    let og = sig(pre(3));
                    cn[j] = fg * c[j] + ig * gg;
                    hn[j] = og * act(cn[j]);
                }
                h = hn;
                c = cn;
                out.extend_from_slice(&h);
            }
        }
        out
    }

    #[test]
    fn matches_scalar_oracle() {
        let (b, steps, f, u) = (2, 3, 4, 3);
        for seed in 0..5 {
            let mut rng = SplitMix64::new(seed);
            let x = random(&[b, steps, f], 1.0, &mut rng);
            let k = random(&[f, 4 * u], 0.6, &mut rng);
            let r = random(&[u, 4 * u], 0.6, &mut rng);
            let bias = random(&[4 * u], 0.3, &mut rng);
            let p = LstmParams {
                kernel: &k,
                recurrent: &r,
                bias: &bias,
            };
            for (act, f_act) in [
                (Activation::Tanh, f64::tanh as fn(f64) -> f64),
                (Activation::Relu, |v: f64| v.max(0.0)),
            ] {
                let (y, _) = lstm_forward(&x, &p, act, true).unwrap();
                let expect = oracle(&x, &k, &r, &bias, f_act);
                for (a, e) in y.data().iter().zip(&expect) {
                    assert!((a - e).abs() < 1e-10);
                }
                let (last, _) = lstm_forward(&x, &p, act, false).unwrap();
                assert_eq!(last.dims(), &[b, u]);
                for n in 0..b {
                    assert_eq!(last.row(n), &y.row(n)[(steps - 1) * u..]);
                }
            }
        }
    }

    #[test]
    fn param_count_formula() {
        // 4 * ((F + U) * U + U)
        let (f, u) = (1662usize, 128usize);
        assert_eq!(f * 4 * u + u * 4 * u + 4 * u, 916_992);
    }
}
