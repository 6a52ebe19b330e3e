use candle_core::{Tensor, D};

use crate::config::EncoderConfig;
use crate::error::Result;
use crate::nn::{dropout, sinusoidal_positions, softmax_last, LayerNorm, Linear, Mode, ParamStore};

struct SelfAttention {
    q: Linear,
    k: Linear,
    v: Linear,
    out: Linear,
    heads: usize,
}

impl SelfAttention {
    fn new(store: &mut ParamStore, name: &str, hidden: usize, heads: usize) -> Result<Self> {
        Ok(SelfAttention {
            q: Linear::new(store, &format!("{name}.q"), hidden, hidden, true)?,
            k: Linear::new(store, &format!("{name}.k"), hidden, hidden, true)?,
            v: Linear::new(store, &format!("{name}.v"), hidden, hidden, true)?,
            out: Linear::new(store, &format!("{name}.out"), hidden, hidden, true)?,
            heads,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, n, h) = x.dims3()?;
        let dh = h / self.heads;
        let split = |t: Tensor| -> Result<Tensor> {
            Ok(t.reshape((b, n, self.heads, dh))?.transpose(1, 2)?.contiguous()?)
        };
        let q = split(self.q.forward(x)?)?;
        let k = split(self.k.forward(x)?)?;
        let v = split(self.v.forward(x)?)?;
        let scores = (q.matmul(&k.transpose(D::Minus2, D::Minus1)?.contiguous()?)? / (dh as f64).sqrt())?;
        let attn = softmax_last(&scores)?;
        let ctx = attn.matmul(&v)?.transpose(1, 2)?.contiguous()?.reshape((b, n, h))?;
        self.out.forward(&ctx)
    }
}

struct EncoderLayer {
    attn: SelfAttention,
    norm1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    norm2: LayerNorm,
    dropout: f64,
}

impl EncoderLayer {
    fn new(store: &mut ParamStore, name: &str, cfg: &EncoderConfig) -> Result<Self> {
        Ok(EncoderLayer {
            attn: SelfAttention::new(store, &format!("{name}.attn"), cfg.hidden, cfg.heads)?,
            norm1: LayerNorm::new(store, &format!("{name}.norm1"), cfg.hidden)?,
            ff1: Linear::new(store, &format!("{name}.ff1"), cfg.hidden, cfg.ff_width, true)?,
            ff2: Linear::new(store, &format!("{name}.ff2"), cfg.ff_width, cfg.hidden, true)?,
            norm2: LayerNorm::new(store, &format!("{name}.norm2"), cfg.hidden)?,
            dropout: cfg.dropout,
        })
    }

    // post-norm residual blocks
    fn forward(&self, x: &Tensor, mode: &mut Mode<'_>) -> Result<Tensor> {
        let a = dropout(&self.attn.forward(x)?, self.dropout, mode)?;
        let x = self.norm1.forward(&(x + a)?)?;
        let f = self.ff2.forward(&self.ff1.forward(&x)?.relu()?)?;
        let f = dropout(&f, self.dropout, mode)?;
        self.norm2.forward(&(x + f)?)
    }
}

/// Transformer encoder over the feature rows with a linear head on the
/// flattened `n_fixed × hidden` activations.
pub struct AttentionEncoder {
    input: Linear,
    positions: Tensor,
    layers: Vec<EncoderLayer>,
    head: Linear,
    dropout: f64,
    head_dropout: f64,
}

impl AttentionEncoder {
    pub fn new(store: &mut ParamStore, cfg: &EncoderConfig, n_fixed: usize, width: usize) -> Result<Self> {
        let input = Linear::new(store, "input", width, cfg.hidden, true)?;
        let positions = sinusoidal_positions(n_fixed, cfg.hidden, store.dtype(), store.device())?;
        let layers = (0..cfg.layers)
            .map(|i| EncoderLayer::new(store, &format!("layer{i}"), cfg))
            .collect::<Result<Vec<_>>>()?;
        let head = Linear::new(store, "head", n_fixed * cfg.hidden, 2, true)?;
        Ok(AttentionEncoder {
            input,
            positions,
            layers,
            head,
            dropout: cfg.dropout,
            head_dropout: cfg.head_dropout,
        })
    }

    /// `x` is `[B, n_fixed, width]`; returns `[B, 2]` logits.
    pub fn forward(&self, x: &Tensor, mode: &mut Mode<'_>) -> Result<Tensor> {
        let b = x.dim(0)?;
        let mut h = self.input.forward(x)?.broadcast_add(&self.positions)?;
        h = dropout(&h, self.dropout, mode)?;
        for layer in &self.layers {
            h = layer.forward(&h, mode)?;
        }
        let flat = h.reshape((b, ()))?;
        let flat = dropout(&flat, self.head_dropout, mode)?;
        self.head.forward(&flat)
    }
}
