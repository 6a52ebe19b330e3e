use candle_core::Tensor;

use crate::config::EncoderConfig;
use crate::error::Result;
use crate::nn::{dropout, sigmoid, Linear, Mode, ParamStore};

/// One LSTM direction. Gate order in the stacked weights is i, f, g, o.
struct LstmDirection {
    input: Linear,
    recurrent: Linear,
    hidden: usize,
}

impl LstmDirection {
    fn new(store: &mut ParamStore, name: &str, width: usize, hidden: usize) -> Result<Self> {
        Ok(LstmDirection {
            input: Linear::new(store, &format!("{name}.ih"), width, 4 * hidden, true)?,
            recurrent: Linear::new(store, &format!("{name}.hh"), hidden, 4 * hidden, true)?,
            hidden,
        })
    }

    /// Runs over `[B, n, width]` in the given time order and returns the
    /// final hidden state `[B, hidden]`.
    fn run(&self, x: &Tensor, reverse: bool) -> Result<Tensor> {
        let (b, n, _) = x.dims3()?;
        let hs = self.hidden;
        let projected = self.input.forward(x)?;
        let mut h = Tensor::zeros((b, hs), x.dtype(), x.device())?;
        let mut c = h.clone();
        for step in 0..n {
            let t = if reverse { n - 1 - step } else { step };
            let gates = (projected.narrow(1, t, 1)?.squeeze(1)? + self.recurrent.forward(&h)?)?;
            let i = sigmoid(&gates.narrow(1, 0, hs)?)?;
            let f = sigmoid(&gates.narrow(1, hs, hs)?)?;
            let g = gates.narrow(1, 2 * hs, hs)?.tanh()?;
            let o = sigmoid(&gates.narrow(1, 3 * hs, hs)?)?;
            c = ((f * &c)? + (i * g)?)?;
            h = (o * c.tanh()?)?;
        }
        Ok(h)
    }
}

/// Single bidirectional LSTM layer; the head reads the concatenated final
/// states of both directions.
pub struct Recurrent {
    forward_dir: LstmDirection,
    backward_dir: LstmDirection,
    head: Linear,
    head_dropout: f64,
}

impl Recurrent {
    pub fn new(store: &mut ParamStore, cfg: &EncoderConfig, width: usize) -> Result<Self> {
        Ok(Recurrent {
            forward_dir: LstmDirection::new(store, "lstm.fwd", width, cfg.hidden)?,
            backward_dir: LstmDirection::new(store, "lstm.bwd", width, cfg.hidden)?,
            head: Linear::new(store, "head", 2 * cfg.hidden, 2, true)?,
            head_dropout: cfg.head_dropout,
        })
    }

    pub fn forward(&self, x: &Tensor, mode: &mut Mode<'_>) -> Result<Tensor> {
        let f = self.forward_dir.run(x, false)?;
        let b = self.backward_dir.run(x, true)?;
        let state = Tensor::cat(&[f, b], 1)?;
        let state = dropout(&state, self.head_dropout, mode)?;
        self.head.forward(&state)
    }
}
