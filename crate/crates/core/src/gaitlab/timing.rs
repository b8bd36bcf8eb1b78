use crate::error::{Error, Result};

use super::{Phase, StepEvents};

/// Per-step duration errors in milliseconds, mean ± population std per
/// phase, over matched runs only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimingErrorReport {
    pub stance_mean_ms: f64,
    pub stance_std_ms: f64,
    pub swing_mean_ms: f64,
    pub swing_std_ms: f64,
    pub matched_steps: usize,
    pub unmatched_pred: usize,
    pub unmatched_true: usize,
}

/// Pools matched-step errors over several traces.
#[derive(Debug, Clone, Default)]
pub struct TimingAccumulator {
    stance_ms: Vec<f64>,
    swing_ms: Vec<f64>,
    unmatched_pred: usize,
    unmatched_true: usize,
}

impl TimingAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Greedy matching: each true run, in order, takes the unused predicted
    /// run of the same phase with the largest overlap (ties to the earlier
    /// predicted run). Runs that never match are only counted.
    pub fn add(&mut self, pred: &StepEvents, truth: &StepEvents, sample_rate: f64) -> Result<()> {
        if pred.len() != truth.len() {
            return Err(Error::shape(format!(
                "predicted events cover {} samples, truth {}",
                pred.len(),
                truth.len()
            )));
        }
        let ms_per_sample = 1000.0 / sample_rate;
        let mut used = vec![false; pred.runs().len()];
        for t in truth.runs() {
            let mut best: Option<(usize, usize)> = None;
            for (j, p) in pred.runs().iter().enumerate() {
                if used[j] || p.phase != t.phase {
                    continue;
                }
                let ov = p.overlap(t);
                if ov > 0 && best.is_none_or(|(_, b)| ov > b) {
                    best = Some((j, ov));
                }
            }
            match best {
                Some((j, _)) => {
                    used[j] = true;
                    let p = &pred.runs()[j];
                    let err = p.len().abs_diff(t.len()) as f64 * ms_per_sample;
                    match t.phase {
                        Phase::Stance => self.stance_ms.push(err),
                        Phase::Swing => self.swing_ms.push(err),
                    }
                }
                None => self.unmatched_true += 1,
            }
        }
        self.unmatched_pred += used.iter().filter(|&&u| !u).count();
        Ok(())
    }

    pub fn report(&self) -> TimingErrorReport {
        let (stance_mean_ms, stance_std_ms) = mean_std(&self.stance_ms);
        let (swing_mean_ms, swing_std_ms) = mean_std(&self.swing_ms);
        TimingErrorReport {
            stance_mean_ms,
            stance_std_ms,
            swing_mean_ms,
            swing_std_ms,
            matched_steps: self.stance_ms.len() + self.swing_ms.len(),
            unmatched_pred: self.unmatched_pred,
            unmatched_true: self.unmatched_true,
        }
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn timing_errors(
    pred: &StepEvents,
    truth: &StepEvents,
    sample_rate: f64,
) -> Result<TimingErrorReport> {
    let mut acc = TimingAccumulator::new();
    acc.add(pred, truth, sample_rate)?;
    Ok(acc.report())
}

/// Fraction of samples whose predicted label equals the truth.
pub fn accuracy(pred: &[u8], truth: &[u8]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::data("accuracy of an empty sequence"));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}
