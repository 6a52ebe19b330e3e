//! Binary classification metrics with machine (label 1) as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_predictions(preds: &[Label], labels: &[Label]) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: preds.len(),
                right: labels.len(),
            });
        }
        let mut c = Confusion::default();
        for (p, l) in preds.iter().zip(labels) {
            match (p, l) {
                (Label::Machine, Label::Machine) => c.tp += 1,
                (Label::Machine, Label::Human) => c.fp += 1,
                (Label::Human, Label::Human) => c.tn += 1,
                (Label::Human, Label::Machine) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// F1 of the machine class in percent; 0 when precision + recall is 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            100.0 * 2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// F1 percentage of the machine class.
pub fn f1(preds: &[Label], labels: &[Label]) -> Result<f64> {
    Ok(Confusion::from_predictions(preds, labels)?.f1())
}
