use crate::error::{Error, Result};
use crate::model::UNetModel;
use crate::nn::Tensor;

/// An all-zero tensor gets `[-h, h]` with this `h`.
pub const DEGENERATE_HALF_RANGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn empty() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    fn observe(&mut self, values: &[f64]) {
        for &v in values {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }

    pub fn union(self, other: Range) -> Range {
        Range {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Widened to contain 0; a zero-width range becomes a small symmetric one.
    pub fn widened(self) -> Range {
        let (min, max) = (self.min.min(0.0), self.max.max(0.0));
        if max - min == 0.0 {
            return Range {
                min: -DEGENERATE_HALF_RANGE,
                max: DEGENERATE_HALF_RANGE,
            };
        }
        Range { min, max }
    }
}

/// Observed range per activation tensor: index 0 is the network input,
/// index `j + 1` the post-ReLU output of conv `j` (the head excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRanges {
    raw: Vec<Range>,
}

impl ActivationRanges {
    pub fn new(tensors: usize) -> Self {
        Self {
            raw: vec![Range::empty(); tensors],
        }
    }

    /// Extends the ranges with one forward pass; ranges never shrink.
    pub fn observe(&mut self, model: &UNetModel, window: &Tensor) -> Result<()> {
        let acts = model.activations(window)?;
        if acts.len() + 1 != self.raw.len() {
            return Err(Error::shape(
                "activation ranges were sized for another model",
            ));
        }
        self.raw[0].observe(window.data());
        for (r, a) in self.raw[1..].iter_mut().zip(&acts) {
            r.observe(a.data());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Range of tensor `idx`, widened to include 0.
    pub fn get(&self, idx: usize) -> Range {
        self.raw[idx].widened()
    }

    pub fn ranges(&self) -> Vec<Range> {
        (0..self.raw.len()).map(|i| self.get(i)).collect()
    }
}

/// Min/max calibration over float forward passes.
pub fn calibrate(model: &UNetModel, windows: &[Tensor]) -> Result<ActivationRanges> {
    if windows.is_empty() {
        return Err(Error::data("calibration needs at least one window"));
    }
    let mut ranges = ActivationRanges::new(model.layers().len());
    for w in windows {
        ranges.observe(model, w)?;
    }
    Ok(ranges)
}
