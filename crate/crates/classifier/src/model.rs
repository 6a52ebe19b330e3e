use candle_core::{DType, Device, Tensor, Var};
use mgtd_core::features::{FeatureColumn, FeatureSequence};
use mgtd_core::Label;
use serde::{Deserialize, Serialize};

use crate::attention::AttentionEncoder;
use crate::config::{EncoderConfig, ModelKind};
use crate::error::{Error, Result};
use crate::inception::MultiScaleConvolution;
use crate::nn::{cross_entropy, Mode, ParamStore};
use crate::recurrent::Recurrent;

enum Network {
    Attention(AttentionEncoder),
    Recurrent(Recurrent),
    Convolution(MultiScaleConvolution),
}

impl Network {
    fn forward(&self, x: &Tensor, mode: &mut Mode<'_>) -> Result<Tensor> {
        match self {
            Network::Attention(m) => m.forward(x, mode),
            Network::Recurrent(m) => m.forward(x, mode),
            Network::Convolution(m) => m.forward(x, mode),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Percent.
    pub val_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    pub p_machine: f64,
}

impl Prediction {
    /// Equal logits resolve to human.
    pub fn from_logits(logit_human: f64, logit_machine: f64) -> Self {
        let d = logit_machine - logit_human;
        let p_machine = if d >= 0.0 {
            1.0 / (1.0 + (-d).exp())
        } else {
            let e = d.exp();
            e / (1.0 + e)
        };
        let label = if logit_machine > logit_human {
            Label::Machine
        } else {
            Label::Human
        };
        Prediction { label, p_machine }
    }
}

/// A sequence classifier together with the feature layout it was built for.
pub struct Detector {
    kind: ModelKind,
    config: EncoderConfig,
    n_fixed: usize,
    columns: Vec<FeatureColumn>,
    init_seed: u64,
    store: ParamStore,
    net: Network,
    pub history: Vec<EpochRecord>,
}

impl Detector {
    pub fn new(
        kind: ModelKind,
        config: EncoderConfig,
        n_fixed: usize,
        columns: Vec<FeatureColumn>,
        seed: u64,
    ) -> Result<Self> {
        Self::with_dtype(kind, config, n_fixed, columns, seed, DType::F32)
    }

    pub fn with_dtype(
        kind: ModelKind,
        config: EncoderConfig,
        n_fixed: usize,
        columns: Vec<FeatureColumn>,
        seed: u64,
        dtype: DType,
    ) -> Result<Self> {
        config.validate(kind)?;
        if n_fixed == 0 || columns.is_empty() {
            return Err(Error::Config("n_fixed and feature width must be positive".into()));
        }
        let width = columns.len();
        let mut store = ParamStore::new(dtype, seed);
        let net = match kind {
            ModelKind::AttentionEncoder => Network::Attention(AttentionEncoder::new(&mut store, &config, n_fixed, width)?),
            ModelKind::Recurrent => Network::Recurrent(Recurrent::new(&mut store, &config, width)?),
            ModelKind::MultiScaleConvolution => {
                Network::Convolution(MultiScaleConvolution::new(&mut store, &config, width)?)
            }
        };
        Ok(Detector {
            kind,
            config,
            n_fixed,
            columns,
            init_seed: seed,
            store,
            net,
            history: Vec::new(),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn n_fixed(&self) -> usize {
        self.n_fixed
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn dtype(&self) -> DType {
        self.store.dtype()
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub(crate) fn trainable_vars(&self) -> Vec<Var> {
        self.store.trainable_vars()
    }

    pub fn num_parameters(&self) -> usize {
        self.store.num_trainable()
    }

    pub fn check_input(&self, fs: &FeatureSequence) -> Result<()> {
        if fs.n_fixed() != self.n_fixed || fs.columns() != self.columns.as_slice() {
            return Err(Error::Shape(format!(
                "sample {} is {}x{:?}, detector expects {}x{:?}",
                fs.sample_id,
                fs.n_fixed(),
                fs.columns(),
                self.n_fixed,
                self.columns
            )));
        }
        Ok(())
    }

    /// Stacks samples into a `[B, n_fixed, width]` tensor.
    pub fn batch_tensor(&self, samples: &[&FeatureSequence]) -> Result<Tensor> {
        let mut values = Vec::with_capacity(samples.len() * self.n_fixed * self.width());
        for fs in samples {
            self.check_input(fs)?;
            values.extend_from_slice(fs.values());
        }
        let t = Tensor::from_vec(values, (samples.len(), self.n_fixed, self.width()), &Device::Cpu)?;
        Ok(t.to_dtype(self.dtype())?)
    }

    /// Raw forward pass on a prepared batch tensor.
    pub fn forward(&self, x: &Tensor, mode: &mut Mode<'_>) -> Result<Tensor> {
        let dims = x.dims();
        if dims.len() != 3 || dims[1] != self.n_fixed || dims[2] != self.width() {
            return Err(Error::Shape(format!(
                "input {dims:?}, expected [batch, {}, {}]",
                self.n_fixed,
                self.width()
            )));
        }
        self.net.forward(x, mode)
    }

    /// Mean cross-entropy of a batch against its labels.
    pub fn loss(&self, x: &Tensor, labels: &[Label], mode: &mut Mode<'_>) -> Result<Tensor> {
        let logits = self.forward(x, mode)?;
        cross_entropy(&logits, &one_hot(labels, self.dtype())?)
    }

    /// Evaluation-mode logits `(human, machine)` per sample.
    pub fn logits(&self, samples: &[FeatureSequence]) -> Result<Vec<[f64; 2]>> {
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(256) {
            let refs: Vec<&FeatureSequence> = chunk.iter().collect();
            let x = self.batch_tensor(&refs)?;
            let l = self.forward(&x, &mut Mode::Eval)?.to_dtype(DType::F64)?.to_vec2::<f64>()?;
            out.extend(l.into_iter().map(|r| [r[0], r[1]]));
        }
        Ok(out)
    }

    pub fn predict(&self, fs: &FeatureSequence) -> Result<Prediction> {
        Ok(self.predict_batch(std::slice::from_ref(fs))?[0])
    }

    pub fn predict_batch(&self, samples: &[FeatureSequence]) -> Result<Vec<Prediction>> {
        Ok(self
            .logits(samples)?
            .into_iter()
            .map(|[h, m]| Prediction::from_logits(h, m))
            .collect())
    }
}

impl std::fmt::Debug for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Detector")
            .field("kind", &self.kind)
            .field("config", &self.config)
            .field("n_fixed", &self.n_fixed)
            .field("columns", &self.columns)
            .field("parameters", &self.num_parameters())
            .field("epochs", &self.history.len())
            .finish()
    }
}

pub(crate) fn one_hot(labels: &[Label], dtype: DType) -> Result<Tensor> {
    let mut v = vec![0f64; labels.len() * 2];
    for (i, l) in labels.iter().enumerate() {
        v[i * 2 + *l as usize] = 1.0;
    }
    Ok(Tensor::from_vec(v, (labels.len(), 2), &Device::Cpu)?.to_dtype(dtype)?)
}
