//! Sample-at-a-time inference over overlapping windows.
//!
//! Windows of `W` samples start every `hop` samples. Each window finalizes
//! only its central `hop` samples, `[start + m, start + m + hop)` with
//! `m = (W − hop) / 2`; the first window also finalizes `[0, m)`, and on
//! [`StreamState::flush`] a last window, edge-padded to `W`, finalizes
//! whatever remains. Central regions of consecutive windows tile the
//! timeline, so every sample is labelled exactly once.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::eval::pad_edge;
use crate::model::{budget, flops_per_window, ModelConfig, OpsBudget};
use crate::nn::Tensor;
use crate::quant::QuantizedModel;

/// Streaming compute and latency figures.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamBudget {
    pub ops: OpsBudget,
    pub window: usize,
    pub hop: usize,
    pub flops_per_window: u64,
    /// `flops_per_window · sample_rate / hop`.
    pub stream_flops_per_second: f64,
    /// `(W − m) / sample_rate`: from the first sample of a central region
    /// to the end of its window.
    pub worst_latency_ms: f64,
}

pub fn report_budget(
    config: &ModelConfig,
    window: usize,
    hop: usize,
    sample_rate: f64,
) -> Result<StreamBudget> {
    check_geometry(config, window, hop)?;
    let per_window = flops_per_window(config, window);
    let margin = (window - hop) / 2;
    Ok(StreamBudget {
        ops: budget(config, sample_rate),
        window,
        hop,
        flops_per_window: per_window,
        stream_flops_per_second: per_window as f64 * sample_rate / hop as f64,
        worst_latency_ms: (window - margin) as f64 / sample_rate * 1000.0,
    })
}

fn check_geometry(config: &ModelConfig, window: usize, hop: usize) -> Result<()> {
    config.check_length(window)?;
    if hop == 0 || hop > window {
        return Err(Error::config(format!("hop {hop} must lie in 1..={window}")));
    }
    if !(window - hop).is_multiple_of(2) {
        return Err(Error::config(format!(
            "window {window} minus hop {hop} must be even to centre the output region"
        )));
    }
    Ok(())
}

/// Single-producer streaming state. `Send`, so it can be handed between
/// threads, but never shared.
#[derive(Debug, Clone)]
pub struct StreamState {
    model: QuantizedModel,
    window: usize,
    hop: usize,
    margin: usize,
    ring: VecDeque<[f64; 6]>,
    received: usize,
    /// Next sample index without a finalized label.
    emitted_upto: usize,
    last_start: Option<usize>,
    finished: bool,
}

impl StreamState {
    pub fn new(model: QuantizedModel, window: usize, hop: usize) -> Result<Self> {
        check_geometry(model.config(), window, hop)?;
        if model.config().in_channels != 6 {
            return Err(Error::config("streaming expects a 6-axis model"));
        }
        Ok(Self {
            model,
            window,
            hop,
            margin: (window - hop) / 2,
            ring: VecDeque::with_capacity(window),
            received: 0,
            emitted_upto: 0,
            last_start: None,
            finished: false,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn samples_received(&self) -> usize {
        self.received
    }

    pub fn labels_emitted(&self) -> usize {
        self.emitted_upto
    }

    pub fn budget(&self, sample_rate: f64) -> Result<StreamBudget> {
        report_budget(self.model.config(), self.window, self.hop, sample_rate)
    }

    /// Buffers one sample; returns the labels finalized by it, if any, as
    /// `(sample index, label)` in index order.
    pub fn push_sample(&mut self, sample: [f64; 6]) -> Result<Vec<(usize, u8)>> {
        if self.finished {
            return Err(Error::Usage("push after flush".into()));
        }
        if self.ring.len() == self.window {
            self.ring.pop_front();
        }
        self.ring.push_back(sample);
        self.received += 1;
        if self.received < self.window || !(self.received - self.window).is_multiple_of(self.hop) {
            return Ok(Vec::new());
        }
        let start = self.received - self.window;
        let labels = self.infer(self.window)?;
        self.last_start = Some(start);
        Ok(self.finalize(start, &labels, start + self.margin + self.hop))
    }

    /// Labels every remaining sample from one edge-padded window and closes
    /// the stream.
    pub fn flush(&mut self) -> Result<Vec<(usize, u8)>> {
        if self.finished {
            return Err(Error::Usage("stream already flushed".into()));
        }
        self.finished = true;
        if self.emitted_upto == self.received {
            return Ok(Vec::new());
        }
        let start = self.last_start.map_or(0, |s| s + self.hop);
        let labels = self.infer(self.received - start)?;
        Ok(self.finalize(start, &labels, self.received))
    }

    /// Runs the model on the newest `n` buffered samples, edge-padded to a
    /// full window.
    fn infer(&self, n: usize) -> Result<Vec<u8>> {
        let skip = self.ring.len() - n;
        let mut data = vec![0.0; 6 * n];
        for (t, s) in self.ring.iter().skip(skip).enumerate() {
            for (c, &v) in s.iter().enumerate() {
                data[c * n + t] = v;
            }
        }
        let x = pad_edge(&Tensor::new(6, n, data)?, self.window)?;
        Ok(self.model.qforward(&x)?.labels)
    }

    fn finalize(&mut self, start: usize, labels: &[u8], end: usize) -> Vec<(usize, u8)> {
        let out = (self.emitted_upto..end)
            .map(|i| (i, labels[i - start]))
            .collect();
        self.emitted_upto = end;
        out
    }
}
