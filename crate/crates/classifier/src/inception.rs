use candle_core::Tensor;

use crate::config::EncoderConfig;
use crate::error::Result;
use crate::nn::{max_pool3_same, BatchNorm1d, Conv1dSame, Linear, Mode, ParamStore};

struct InceptionBlock {
    bottleneck: Option<Conv1dSame>,
    convs: Vec<Conv1dSame>,
    pool_conv: Conv1dSame,
    norm: BatchNorm1d,
}

impl InceptionBlock {
    fn new(store: &mut ParamStore, name: &str, inp: usize, cfg: &EncoderConfig) -> Result<Self> {
        let filters = cfg.hidden / 4;
        let (bottleneck, branch_in) = if inp > 1 {
            let conv = Conv1dSame::new(store, &format!("{name}.bottleneck"), inp, cfg.bottleneck, 1)?;
            (Some(conv), cfg.bottleneck)
        } else {
            (None, inp)
        };
        let convs = cfg
            .kernel_sizes
            .iter()
            .map(|&k| Conv1dSame::new(store, &format!("{name}.conv{k}"), branch_in, filters, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(InceptionBlock {
            bottleneck,
            convs,
            pool_conv: Conv1dSame::new(store, &format!("{name}.pool"), inp, filters, 1)?,
            norm: BatchNorm1d::new(store, &format!("{name}.bn"), cfg.hidden)?,
        })
    }

    fn forward(&self, x: &Tensor, mode: &Mode<'_>) -> Result<Tensor> {
        let reduced = match &self.bottleneck {
            Some(b) => b.forward(x)?,
            None => x.clone(),
        };
        let mut branches = self
            .convs
            .iter()
            .map(|c| c.forward(&reduced))
            .collect::<Result<Vec<_>>>()?;
        branches.push(self.pool_conv.forward(&max_pool3_same(x)?)?);
        Ok(self.norm.forward(&Tensor::cat(&branches, 1)?, mode)?.relu()?)
    }
}

/// InceptionTime-style stack: inception blocks with a residual shortcut
/// around each group of three, global average pooling and a linear head.
pub struct MultiScaleConvolution {
    blocks: Vec<InceptionBlock>,
    shortcuts: Vec<(Conv1dSame, BatchNorm1d)>,
    head: Linear,
}

impl MultiScaleConvolution {
    pub fn new(store: &mut ParamStore, cfg: &EncoderConfig, width: usize) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut shortcuts = Vec::new();
        let mut inp = width;
        let mut residual_in = width;
        for i in 0..cfg.inception_blocks {
            blocks.push(InceptionBlock::new(store, &format!("block{i}"), inp, cfg)?);
            inp = cfg.hidden;
            if i % 3 == 2 {
                let name = format!("shortcut{}", i / 3);
                shortcuts.push((
                    Conv1dSame::new(store, &format!("{name}.conv"), residual_in, cfg.hidden, 1)?,
                    BatchNorm1d::new(store, &format!("{name}.bn"), cfg.hidden)?,
                ));
                residual_in = cfg.hidden;
            }
        }
        let head = Linear::new(store, "head", cfg.hidden, 2, true)?;
        Ok(MultiScaleConvolution { blocks, shortcuts, head })
    }

    pub fn forward(&self, x: &Tensor, mode: &Mode<'_>) -> Result<Tensor> {
        let mut h = x.transpose(1, 2)?.contiguous()?;
        let mut residual = h.clone();
        for (i, block) in self.blocks.iter().enumerate() {
            h = block.forward(&h, mode)?;
            if i % 3 == 2 {
                let (conv, norm) = &self.shortcuts[i / 3];
                let short = norm.forward(&conv.forward(&residual)?, mode)?;
                h = (h + short)?.relu()?;
                residual = h.clone();
            }
        }
        let pooled = h.mean(2)?;
        self.head.forward(&pooled)
    }
}
