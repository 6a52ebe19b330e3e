//! Layer primitives over candle tensors with seeded initialization and
//! seeded dropout masks.

use candle_core::{DType, Device, Tensor, Var, D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Named parameters in creation order. Buffers (running statistics) are
/// stored alongside but excluded from optimization.
pub struct ParamStore {
    dtype: DType,
    device: Device,
    rng: ChaCha8Rng,
    entries: Vec<Param>,
}

pub struct Param {
    pub name: String,
    pub var: Var,
    pub trainable: bool,
}

impl ParamStore {
    pub fn new(dtype: DType, seed: u64) -> Self {
        ParamStore {
            dtype,
            device: Device::Cpu,
            rng: ChaCha8Rng::seed_from_u64(seed),
            entries: Vec::new(),
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    fn push(&mut self, name: String, values: Vec<f64>, shape: &[usize], trainable: bool) -> Result<Var> {
        let t = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        self.entries.push(Param {
            name,
            var: var.clone(),
            trainable,
        });
        Ok(var)
    }

    pub fn uniform(&mut self, name: impl Into<String>, shape: &[usize], bound: f64) -> Result<Var> {
        let n: usize = shape.iter().product();
        let values = (0..n).map(|_| self.rng.random_range(-bound..bound)).collect();
        self.push(name.into(), values, shape, true)
    }

    pub fn constant(&mut self, name: impl Into<String>, shape: &[usize], value: f64) -> Result<Var> {
        let n: usize = shape.iter().product();
        self.push(name.into(), vec![value; n], shape, true)
    }

    pub fn buffer(&mut self, name: impl Into<String>, shape: &[usize], value: f64) -> Result<Var> {
        let n: usize = shape.iter().product();
        self.push(name.into(), vec![value; n], shape, false)
    }

    pub fn entries(&self) -> &[Param] {
        &self.entries
    }

    pub fn trainable_vars(&self) -> Vec<Var> {
        self.entries
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.var.clone())
            .collect()
    }

    pub fn num_trainable(&self) -> usize {
        self.entries
            .iter()
            .filter(|p| p.trainable)
            .map(|p| p.var.elem_count())
            .sum()
    }
}

/// Forward-pass mode. Training draws dropout masks from the given generator
/// and uses batch statistics for normalization.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Inverted dropout with a mask drawn from the mode's generator.
pub fn dropout(x: &Tensor, p: f64, mode: &mut Mode<'_>) -> Result<Tensor> {
    let Mode::Train(rng) = mode else {
        return Ok(x.clone());
    };
    if p <= 0.0 {
        return Ok(x.clone());
    }
    let keep = 1.0 - p;
    let scale = 1.0 / keep;
    let mask: Vec<f32> = (0..x.elem_count())
        .map(|_| if rng.random::<f64>() < keep { scale as f32 } else { 0.0 })
        .collect();
    let mask = Tensor::from_vec(mask, x.shape(), x.device())?.to_dtype(x.dtype())?;
    Ok(x.mul(&mask)?)
}

/// Softmax over the last dimension. The max shift is detached; softmax is
/// shift invariant so gradients are unaffected.
pub fn softmax_last(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    let s = e.sum_keepdim(D::Minus1)?;
    Ok(e.broadcast_div(&s)?)
}

pub fn log_softmax_last(x: &Tensor) -> Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let shifted = x.broadcast_sub(&max)?;
    let lse = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
    Ok(shifted.broadcast_sub(&lse)?)
}

/// Mean cross-entropy of `logits` `[B, C]` against one-hot `targets` `[B, C]`.
pub fn cross_entropy(logits: &Tensor, targets: &Tensor) -> Result<Tensor> {
    let b = logits.dim(0)? as f64;
    let nll = (log_softmax_last(logits)? * targets)?.sum_all()?.neg()?;
    Ok((nll / b)?)
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    // 0.5 * (tanh(x / 2) + 1)
    Ok((((x * 0.5)?.tanh()? + 1.0)? * 0.5)?)
}

pub struct Linear {
    weight: Var,
    bias: Option<Var>,
    out: usize,
}

impl Linear {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weight and bias.
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, out: usize, bias: bool) -> Result<Self> {
        let bound = 1.0 / (inp as f64).sqrt();
        let weight = store.uniform(format!("{name}.weight"), &[out, inp], bound)?;
        let bias = if bias {
            Some(store.uniform(format!("{name}.bias"), &[out], bound)?)
        } else {
            None
        };
        Ok(Linear { weight, bias, out })
    }

    pub fn weight(&self) -> &Var {
        &self.weight
    }

    pub fn bias(&self) -> Option<&Var> {
        self.bias.as_ref()
    }

    /// Applies to the last dimension of a tensor of any rank.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let dims = x.dims().to_vec();
        let inp = *dims.last().expect("non-scalar input");
        let rows: usize = dims[..dims.len() - 1].iter().product();
        let flat = x.reshape((rows, inp))?;
        let mut y = flat.matmul(&self.weight.t()?)?;
        if let Some(b) = &self.bias {
            y = y.broadcast_add(b)?;
        }
        let mut out_dims = dims;
        *out_dims.last_mut().unwrap() = self.out;
        Ok(y.reshape(out_dims)?)
    }
}

pub struct LayerNorm {
    gamma: Var,
    beta: Var,
    eps: f64,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize) -> Result<Self> {
        Ok(LayerNorm {
            gamma: store.constant(format!("{name}.weight"), &[dim], 1.0)?,
            beta: store.constant(format!("{name}.bias"), &[dim], 0.0)?,
            eps: 1e-5,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed.broadcast_mul(&self.gamma)?.broadcast_add(&self.beta)?)
    }
}

/// Batch normalization over the channel dimension of `[B, C, L]` inputs.
pub struct BatchNorm1d {
    gamma: Var,
    beta: Var,
    running_mean: Var,
    running_var: Var,
    momentum: f64,
    eps: f64,
}

impl BatchNorm1d {
    pub fn new(store: &mut ParamStore, name: &str, channels: usize) -> Result<Self> {
        Ok(BatchNorm1d {
            gamma: store.constant(format!("{name}.weight"), &[channels], 1.0)?,
            beta: store.constant(format!("{name}.bias"), &[channels], 0.0)?,
            running_mean: store.buffer(format!("{name}.running_mean"), &[channels], 0.0)?,
            running_var: store.buffer(format!("{name}.running_var"), &[channels], 1.0)?,
            momentum: 0.1,
            eps: 1e-5,
        })
    }

    pub fn forward(&self, x: &Tensor, mode: &Mode<'_>) -> Result<Tensor> {
        let c = x.dim(1)?;
        let (mean, var) = if mode.is_train() {
            let n = (x.dim(0)? * x.dim(2)?) as f64;
            let mean = x.sum_keepdim(2)?.sum_keepdim(0)?.affine(1.0 / n, 0.0)?;
            let centered = x.broadcast_sub(&mean)?;
            let var = centered.sqr()?.sum_keepdim(2)?.sum_keepdim(0)?.affine(1.0 / n, 0.0)?;
            let unbiased = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
            let m = self.momentum;
            let rm = ((self.running_mean.as_tensor() * (1.0 - m))? + (mean.detach().flatten_all()? * m)?)?;
            let rv = ((self.running_var.as_tensor() * (1.0 - m))? + (var.detach().flatten_all()? * (m * unbiased))?)?;
            self.running_mean.set(&rm)?;
            self.running_var.set(&rv)?;
            (mean, var)
        } else {
            (
                self.running_mean.as_tensor().reshape((1, c, 1))?,
                self.running_var.as_tensor().reshape((1, c, 1))?,
            )
        };
        let normed = x.broadcast_sub(&mean)?.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed
            .broadcast_mul(&self.gamma.as_tensor().reshape((1, c, 1))?)?
            .broadcast_add(&self.beta.as_tensor().reshape((1, c, 1))?)?)
    }
}

/// Bias-free 1-d convolution with "same" output length. Even kernels pad one
/// more element on the right. Computed as a matmul over stacked windows;
/// candle's native conv1d returns wrong kernel gradients for batched input.
pub struct Conv1dSame {
    kernel: Var,
    k: usize,
}

impl Conv1dSame {
    pub fn new(store: &mut ParamStore, name: &str, inp: usize, out: usize, k: usize) -> Result<Self> {
        let bound = 1.0 / ((inp * k) as f64).sqrt();
        Ok(Conv1dSame {
            kernel: store.uniform(format!("{name}.weight"), &[out, inp, k], bound)?,
            k,
        })
    }

    pub fn kernel(&self) -> &Var {
        &self.kernel
    }

    /// `[B, C_in, L]` to `[B, C_out, L]`.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, c, l) = x.dims3()?;
        let out = self.kernel.dim(0)?;
        let left = (self.k - 1) / 2;
        let right = self.k - 1 - left;
        let cols = if self.k > 1 {
            let padded = x.pad_with_zeros(2, left, right)?;
            let windows = (0..self.k)
                .map(|j| padded.narrow(2, j, l))
                .collect::<candle_core::Result<Vec<_>>>()?;
            // [B, C, L, k] -> [B, L, C, k]
            Tensor::stack(&windows, 3)?.transpose(1, 2)?.contiguous()?
        } else {
            x.transpose(1, 2)?.contiguous()?
        };
        let cols = cols.reshape((b * l, c * self.k))?;
        let w = self.kernel.reshape((out, c * self.k))?;
        let y = cols.matmul(&w.t()?)?;
        Ok(y.reshape((b, l, out))?.transpose(1, 2)?.contiguous()?)
    }
}

/// Stride-1 max pooling of width 3 with "same" length over `[B, C, L]`.
pub fn max_pool3_same(x: &Tensor) -> Result<Tensor> {
    let l = x.dim(2)?;
    let padded = x.pad_with_same(2, 1, 1)?;
    let left = padded.narrow(2, 0, l)?;
    let mid = padded.narrow(2, 1, l)?;
    let right = padded.narrow(2, 2, l)?;
    Ok(left.maximum(&mid)?.maximum(&right)?)
}

/// Fixed sinusoidal position table `[n, dim]`.
pub fn sinusoidal_positions(n: usize, dim: usize, dtype: DType, device: &Device) -> Result<Tensor> {
    let mut table = vec![0f64; n * dim];
    for pos in 0..n {
        for i in 0..dim {
            let exponent = (2 * (i / 2)) as f64 / dim as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            table[pos * dim + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Ok(Tensor::from_vec(table, (n, dim), device)?.to_dtype(dtype)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_rows_sum_to_one() {
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0], [-50.0, 0.0, 50.0]], &Device::Cpu).unwrap();
        let s = softmax_last(&x).unwrap().sum(1).unwrap().to_vec1::<f64>().unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn linear_matches_manual() {
        let mut store = ParamStore::new(DType::F64, 0);
        let lin = Linear::new(&mut store, "l", 3, 2, true).unwrap();
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0]], &Device::Cpu).unwrap();
        let y = lin.forward(&x).unwrap().to_vec2::<f64>().unwrap();
        let w = lin.weight().as_tensor().to_vec2::<f64>().unwrap();
        let b = lin.bias().unwrap().as_tensor().to_vec1::<f64>().unwrap();
        for j in 0..2 {
            let want = w[j][0] + 2.0 * w[j][1] + 3.0 * w[j][2] + b[j];
            assert!((y[0][j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_is_identity_in_eval_and_seeded_in_train() {
        let x = Tensor::ones((4, 100), DType::F32, &Device::Cpu).unwrap();
        let same = dropout(&x, 0.5, &mut Mode::Eval).unwrap();
        assert_eq!(same.to_vec2::<f32>().unwrap(), x.to_vec2::<f32>().unwrap());
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        let a = dropout(&x, 0.5, &mut Mode::Train(&mut r1)).unwrap().to_vec2::<f32>().unwrap();
        let b = dropout(&x, 0.5, &mut Mode::Train(&mut r2)).unwrap().to_vec2::<f32>().unwrap();
        assert_eq!(a, b);
        let kept = a.iter().flatten().filter(|v| **v > 0.0).count();
        assert!((150..250).contains(&kept));
        assert!(a.iter().flatten().all(|v| *v == 0.0 || *v == 2.0));
    }

    #[test]
    fn same_padding_preserves_length() {
        let mut store = ParamStore::new(DType::F64, 0);
        let x = Tensor::ones((2, 3, 6), DType::F64, &Device::Cpu).unwrap();
        for k in [1, 10, 20, 40] {
            let conv = Conv1dSame::new(&mut store, "c", 3, 5, k).unwrap();
            assert_eq!(conv.forward(&x).unwrap().dims(), &[2, 5, 6]);
        }
        let pooled = max_pool3_same(&Tensor::new(&[[[1.0f64, 3.0, 2.0, 0.0]]], &Device::Cpu).unwrap()).unwrap();
        assert_eq!(pooled.to_vec3::<f64>().unwrap(), vec![vec![vec![3.0, 3.0, 3.0, 2.0]]]);
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let mut store = ParamStore::new(DType::F64, 4);
        let conv = Conv1dSame::new(&mut store, "c", 2, 3, 4).unwrap();
        let xs: Vec<f64> = (0..2 * 2 * 5).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let x = Tensor::from_vec(xs.clone(), (2, 2, 5), &Device::Cpu).unwrap();
        let y = conv.forward(&x).unwrap().to_vec3::<f64>().unwrap();
        let w = conv.kernel().as_tensor().to_vec3::<f64>().unwrap();
        // k = 4 pads one on the left and two on the right
        for b in 0..2 {
            for o in 0..3 {
                for t in 0..5 {
                    let mut want = 0.0;
                    for c in 0..2 {
                        for j in 0..4 {
                            let src = t as isize + j as isize - 1;
                            if (0..5).contains(&src) {
                                want += w[o][c][j] * xs[b * 10 + c * 5 + src as usize];
                            }
                        }
                    }
                    assert!((y[b][o][t] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn positional_table_values() {
        let t = sinusoidal_positions(3, 4, DType::F64, &Device::Cpu).unwrap().to_vec2::<f64>().unwrap();
        assert_eq!(t[0], vec![0.0, 1.0, 0.0, 1.0]);
        assert!((t[1][0] - 1f64.sin()).abs() < 1e-15);
        assert!((t[1][3] - (1.0 / 100.0f64).cos()).abs() < 1e-15);
    }
}
