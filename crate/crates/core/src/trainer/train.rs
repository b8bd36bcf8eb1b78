use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelGrads, UNetModel};

use super::{cross_entropy, ModelAdam, Window, WindowSource};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHyper {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Share of windows held back for per-epoch validation.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        Self {
            batch_size: 100,
            epochs: 500,
            learning_rate: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            validation_fraction: 0.10,
            seed: 0,
        }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        // zero is accepted: it freezes the model, which is handy for audits
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate {} must be non-negative",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::config("adam betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights after the final epoch.
    pub model: UNetModel,
    pub history: Vec<EpochRecord>,
    pub train_sources: Vec<WindowSource>,
    pub val_sources: Vec<WindowSource>,
}

/// Trains a freshly built model on `windows`.
///
/// A seeded shuffle sets aside `validation_fraction` of the windows; the
/// rest are reshuffled every epoch and consumed in mini-batches. Per-window
/// gradients are computed in parallel and reduced in batch order, so the
/// result is bit-identical to a serial run.
pub fn train(windows: &[Window], config: &ModelConfig, hyper: &TrainHyper) -> Result<TrainOutcome> {
    hyper.validate()?;
    config.validate()?;
    if windows.len() < 2 {
        return Err(Error::data(format!(
            "need at least two windows to train and validate, got {}",
            windows.len()
        )));
    }
    for w in windows {
        config.check_length(w.samples.length())?;
    }
    let has = |class: u8| windows.iter().any(|w| w.labels.contains(&class));
    if !(has(0) && has(1)) {
        return Err(Error::data(
            "training windows must contain both stance and swing",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((windows.len() as f64 * hyper.validation_fraction).round() as usize)
        .clamp(1, windows.len() - 1);
    let mut val_idx = order[..n_val].to_vec();
    let mut train_idx = order[n_val..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();

    let mut model = UNetModel::build(config.clone(), hyper.seed)?;
    let mut adam = ModelAdam::new(&model);
    let mut history = Vec::with_capacity(hyper.epochs);

    for epoch in 0..hyper.epochs {
        train_idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in train_idx.chunks(hyper.batch_size) {
            let per_window = batch
                .par_iter()
                .map(|&i| window_gradient(&model, &windows[i]))
                .collect::<Result<Vec<_>>>()?;
            let mut grads = ModelGrads::zeros_like(&model);
            for (loss, g) in &per_window {
                loss_sum += loss;
                grads.add_assign(g);
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut model, &grads, hyper)?;
        }
        let val_accuracy = pooled_accuracy(&model, val_idx.iter().map(|&i| &windows[i]))?;
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / train_idx.len() as f64,
            val_accuracy,
        };
        log::debug!(
            "epoch {epoch}: loss {:.5} val acc {:.4}",
            rec.train_loss,
            rec.val_accuracy
        );
        history.push(rec);
    }

    Ok(TrainOutcome {
        model,
        history,
        train_sources: train_idx.iter().map(|&i| windows[i].source).collect(),
        val_sources: val_idx.iter().map(|&i| windows[i].source).collect(),
    })
}

fn window_gradient(model: &UNetModel, window: &Window) -> Result<(f64, ModelGrads)> {
    let (probs, cache) = model.forward_cached(&window.samples)?;
    let (loss, grad_logits) = cross_entropy(&probs, &window.labels)?;
    Ok((loss, model.backward(&cache, &grad_logits)?))
}

fn pooled_accuracy<'a>(
    model: &UNetModel,
    windows: impl Iterator<Item = &'a Window>,
) -> Result<f64> {
    let (mut hits, mut total) = (0usize, 0usize);
    for w in windows {
        let pred = model.predict_labels(&w.samples)?;
        hits += pred.iter().zip(&w.labels).filter(|(a, b)| a == b).count();
        total += w.labels.len();
    }
    Ok(if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    })
}
