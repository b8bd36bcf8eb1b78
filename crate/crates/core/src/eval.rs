//! Whole-trace labelling and pooled accuracy / timing evaluation.

use crate::error::Result;
use crate::gaitlab::{accuracy, extract_steps, GaitTrace, TimingAccumulator, TimingErrorReport};
use crate::model::UNetModel;
use crate::nn::Tensor;
use crate::quant::QuantizedModel;

/// Anything that maps a fixed-length window to one label per sample.
pub trait Segmenter {
    /// Window lengths must be multiples of this.
    fn length_multiple(&self) -> usize;
    fn segment(&self, window: &Tensor) -> Result<Vec<u8>>;
}

impl Segmenter for UNetModel {
    fn length_multiple(&self) -> usize {
        self.config().length_multiple()
    }

    fn segment(&self, window: &Tensor) -> Result<Vec<u8>> {
        self.predict_labels(window)
    }
}

impl Segmenter for QuantizedModel {
    fn length_multiple(&self) -> usize {
        self.config().length_multiple()
    }

    fn segment(&self, window: &Tensor) -> Result<Vec<u8>> {
        Ok(self.qforward(window)?.labels)
    }
}

/// Extends `samples` to `len` by repeating the last sample of each channel.
pub fn pad_edge(samples: &Tensor, len: usize) -> Result<Tensor> {
    let n = samples.length();
    let mut data = Vec::with_capacity(samples.channels() * len);
    for c in 0..samples.channels() {
        let row = samples.channel(c);
        data.extend_from_slice(&row[..n.min(len)]);
        let last = row.last().copied().unwrap_or(0.0);
        data.extend(std::iter::repeat_n(last, len.saturating_sub(n)));
    }
    Tensor::new(samples.channels(), len, data)
}

/// Labels every sample of a trace with non-overlapping windows. A trailing
/// remainder is labelled by one extra window aligned to the trace end;
/// traces shorter than a window are edge-padded.
pub fn label_trace<S: Segmenter + ?Sized>(
    model: &S,
    samples: &Tensor,
    window: usize,
) -> Result<Vec<u8>> {
    let n = samples.length();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n < window {
        let mut labels = model.segment(&pad_edge(samples, window)?)?;
        labels.truncate(n);
        return Ok(labels);
    }
    let mut labels = Vec::with_capacity(n);
    let mut start = 0;
    while start + window <= n {
        labels.extend(model.segment(&samples.slice_time(start, start + window)?)?);
        start += window;
    }
    if start < n {
        let tail = model.segment(&samples.slice_time(n - window, n)?)?;
        labels.extend_from_slice(&tail[window - (n - start)..]);
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    /// Pooled over every sample of every trace.
    pub accuracy: f64,
    pub samples: usize,
    pub timing: TimingErrorReport,
}

/// Per-sample accuracy and per-step timing errors over `traces`. Predicted
/// labels are majority-smoothed with `smooth_width` before step extraction;
/// ground-truth labels are used as is.
pub fn evaluate<'a, S: Segmenter + ?Sized>(
    model: &S,
    traces: impl IntoIterator<Item = &'a GaitTrace>,
    window: usize,
    smooth_width: usize,
) -> Result<EvalSummary> {
    let mut hits = 0.0;
    let mut samples = 0;
    let mut timing = TimingAccumulator::new();
    for trace in traces {
        let pred = label_trace(model, &trace.samples, window)?;
        if trace.is_empty() {
            continue;
        }
        hits += accuracy(&pred, &trace.labels)? * trace.len() as f64;
        samples += trace.len();
        let pred_steps = extract_steps(&pred, smooth_width)?;
        let true_steps = extract_steps(&trace.labels, 0)?;
        timing.add(&pred_steps, &true_steps, trace.sample_rate)?;
    }
    Ok(EvalSummary {
        accuracy: if samples == 0 {
            0.0
        } else {
            hits / samples as f64
        },
        samples,
        timing: timing.report(),
    })
}
