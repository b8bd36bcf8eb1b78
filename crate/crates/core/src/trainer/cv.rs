use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::gaitlab::{GaitTrace, TimingErrorReport, DEFAULT_SMOOTH_WIDTH};
use crate::model::{ModelConfig, UNetModel, DEFAULT_WINDOW};

use super::{train, training_windows, TrainHyper, WindowSource};

#[derive(Debug, Clone, PartialEq)]
pub struct CvOptions {
    pub window: usize,
    pub smooth_width: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            smooth_width: DEFAULT_SMOOTH_WIDTH,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoldReport {
    pub fold_index: usize,
    pub held_out_subject: u32,
    /// Per-sample accuracy on the held-out subject.
    pub accuracy: f64,
    pub loss_history: Vec<f64>,
    pub val_accuracy_history: Vec<f64>,
    pub timing: TimingErrorReport,
    pub train_sources: Vec<WindowSource>,
    pub val_sources: Vec<WindowSource>,
    /// Indices into the input traces evaluated for this fold.
    pub test_traces: Vec<usize>,
    pub model: UNetModel,
}

impl FoldReport {
    /// Windows of the held-out subject that leaked into training or
    /// validation.
    pub fn leaked_windows(&self) -> usize {
        self.train_sources
            .iter()
            .chain(&self.val_sources)
            .filter(|s| s.subject_id == self.held_out_subject)
            .count()
    }
}

/// Subject-independent k-fold cross-validation: fold `i` trains on every
/// subject except the `i`-th (in ascending id order) and evaluates on all
/// of that subject's traces.
pub fn kfold_cv(
    traces: &[GaitTrace],
    k: usize,
    config: &ModelConfig,
    hyper: &TrainHyper,
    opts: &CvOptions,
) -> Result<Vec<FoldReport>> {
    let subjects: Vec<u32> = traces
        .iter()
        .map(|t| t.subject_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if subjects.len() != k {
        return Err(Error::config(format!(
            "{k}-fold cross-validation needs exactly {k} subjects, found {}",
            subjects.len()
        )));
    }
    subjects
        .par_iter()
        .enumerate()
        .map(|(fold_index, &held_out)| {
            let train_traces = traces
                .iter()
                .enumerate()
                .filter(|(_, t)| t.subject_id != held_out);
            let windows = training_windows(train_traces, opts.window)?;
            let outcome = train(&windows, config, hyper)?;
            let test_traces: Vec<usize> = traces
                .iter()
                .enumerate()
                .filter(|(_, t)| t.subject_id == held_out)
                .map(|(i, _)| i)
                .collect();
            let summary = evaluate(
                &outcome.model,
                test_traces.iter().map(|&i| &traces[i]),
                opts.window,
                opts.smooth_width,
            )?;
            log::info!(
                "fold {fold_index} (subject {held_out}): accuracy {:.4}",
                summary.accuracy
            );
            Ok(FoldReport {
                fold_index,
                held_out_subject: held_out,
                accuracy: summary.accuracy,
                loss_history: outcome.history.iter().map(|r| r.train_loss).collect(),
                val_accuracy_history: outcome.history.iter().map(|r| r.val_accuracy).collect(),
                timing: summary.timing,
                train_sources: outcome.train_sources,
                val_sources: outcome.val_sources,
                test_traces,
                model: outcome.model,
            })
        })
        .collect()
}

pub fn mean_accuracy(folds: &[FoldReport]) -> f64 {
    if folds.is_empty() {
        return 0.0;
    }
    folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64
}
