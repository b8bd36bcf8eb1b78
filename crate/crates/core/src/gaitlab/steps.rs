use crate::error::{Error, Result};

use super::Phase;

/// 100 ms at 50 Hz.
pub const DEFAULT_SMOOTH_WIDTH: usize = 5;

/// A maximal run of one phase, `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRun {
    pub phase: Phase,
    pub start: usize,
    pub end: usize,
}

impl StepRun {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlap(&self, other: &StepRun) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        if hi >= lo {
            hi - lo + 1
        } else {
            0
        }
    }
}

/// Runs that tile `[0, len)` with alternating phases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEvents {
    runs: Vec<StepRun>,
    len: usize,
}

impl StepEvents {
    pub fn runs(&self) -> &[StepRun] {
        &self.runs
    }

    /// Number of samples covered.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Centred sliding majority vote of odd `width`, truncated at the edges.
/// A tie (only possible in a truncated edge window) keeps the previous
/// output value; at index 0 it keeps the input label.
pub fn majority_filter(labels: &[u8], width: usize) -> Result<Vec<u8>> {
    if width == 0 {
        return Ok(labels.to_vec());
    }
    if width.is_multiple_of(2) {
        return Err(Error::config(format!(
            "smoothing width {width} must be odd"
        )));
    }
    let half = width / 2;
    let n = labels.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0usize);
    for &l in labels {
        prefix.push(prefix.last().unwrap() + usize::from(l));
    }
    let mut out = Vec::with_capacity(n);
    for (t, &label) in labels.iter().enumerate() {
        let (lo, hi) = (t.saturating_sub(half), (t + half + 1).min(n));
        let ones = prefix[hi] - prefix[lo];
        let zeros = (hi - lo) - ones;
        let v = match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => out.last().copied().unwrap_or(label),
        };
        out.push(v);
    }
    Ok(out)
}

/// Optional majority smoothing, then run-length encoding into maximal runs.
pub fn extract_steps(labels: &[u8], smooth_width: usize) -> Result<StepEvents> {
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::data(format!(
            "label {bad} is neither stance (0) nor swing (1)"
        )));
    }
    let smoothed = majority_filter(labels, smooth_width)?;
    let mut runs: Vec<StepRun> = Vec::new();
    for (t, &l) in smoothed.iter().enumerate() {
        let phase = Phase::from_label(l).expect("labels checked");
        match runs.last_mut() {
            Some(run) if run.phase == phase => run.end = t,
            _ => runs.push(StepRun {
                phase,
                start: t,
                end: t,
            }),
        }
    }
    Ok(StepEvents {
        runs,
        len: labels.len(),
    })
}
