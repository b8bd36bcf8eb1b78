use crate::error::{Error, Result};
use crate::gaitlab::GaitTrace;
use crate::nn::Tensor;

/// Where a window was cut from; used to audit subject leakage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WindowSource {
    pub subject_id: u32,
    pub trace_index: usize,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub samples: Tensor,
    pub labels: Vec<u8>,
    pub source: WindowSource,
}

/// Every full window of `len` samples starting at multiples of `hop`.
pub fn cut_windows(
    trace: &GaitTrace,
    trace_index: usize,
    len: usize,
    hop: usize,
) -> Result<Vec<Window>> {
    if len == 0 || hop == 0 {
        return Err(Error::config("window length and hop must be positive"));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= trace.len() {
        out.push(Window {
            samples: trace.samples.slice_time(start, start + len)?,
            labels: trace.labels[start..start + len].to_vec(),
            source: WindowSource {
                subject_id: trace.subject_id,
                trace_index,
                start,
            },
        });
        start += hop;
    }
    Ok(out)
}

/// Training windows overlap by half.
pub fn training_windows<'a>(
    traces: impl IntoIterator<Item = (usize, &'a GaitTrace)>,
    len: usize,
) -> Result<Vec<Window>> {
    let hop = (len / 2).max(1);
    let mut out = Vec::new();
    for (idx, trace) in traces {
        out.extend(cut_windows(trace, idx, len, hop)?);
    }
    Ok(out)
}

/// Non-overlapping windows, e.g. for calibration.
pub fn eval_windows<'a>(
    traces: impl IntoIterator<Item = (usize, &'a GaitTrace)>,
    len: usize,
) -> Result<Vec<Window>> {
    let mut out = Vec::new();
    for (idx, trace) in traces {
        out.extend(cut_windows(trace, idx, len, len)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaitlab::synth_trace;

    #[test]
    fn overlap_and_provenance() {
        let tr = synth_trace(4, 9.0, 20.0, 50.0, 1).unwrap(); // 1000 samples
        let w = training_windows([(3, &tr)], 256).unwrap();
        assert_eq!(w.len(), (1000 - 256) / 128 + 1);
        assert_eq!(
            w[1].source,
            WindowSource {
                subject_id: 4,
                trace_index: 3,
                start: 128
            }
        );
        assert_eq!(w[1].labels, tr.labels[128..384]);
        let e = eval_windows([(3, &tr)], 256).unwrap();
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn short_trace_yields_nothing() {
        let tr = synth_trace(0, 9.0, 2.0, 50.0, 1).unwrap();
        assert!(cut_windows(&tr, 0, 256, 128).unwrap().is_empty());
    }
}
