use crate::error::{Error, Result};
use crate::model::{ModelGrads, UNetModel};

use super::TrainHyper;

/// First and second moment estimates for one parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One bias-corrected Adam update; `step` counts from 1.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hyper: &TrainHyper,
    step: u64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(Error::shape(format!(
            "adam: {} params, {} grads, state for {}",
            params.len(),
            grads.len(),
            state.len()
        )));
    }
    if step == 0 {
        return Err(Error::Usage("adam step index starts at 1".into()));
    }
    let (b1, b2) = (hyper.adam_beta1, hyper.adam_beta2);
    let step = i32::try_from(step).unwrap_or(i32::MAX);
    let bc1 = 1.0 - b1.powi(step);
    let bc2 = 1.0 - b2.powi(step);
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.adam_eps);
    }
    Ok(())
}

/// Adam over every weight and bias array of a model.
#[derive(Debug, Clone)]
pub struct ModelAdam {
    states: Vec<(AdamState, AdamState)>,
    step: u64,
}

impl ModelAdam {
    pub fn new(model: &UNetModel) -> Self {
        let states = model
            .layers()
            .iter()
            .map(|l| {
                (
                    AdamState::new(l.weights().len()),
                    AdamState::new(l.bias().len()),
                )
            })
            .collect();
        Self { states, step: 0 }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn step(
        &mut self,
        model: &mut UNetModel,
        grads: &ModelGrads,
        hyper: &TrainHyper,
    ) -> Result<()> {
        if grads.layers.len() != self.states.len() || model.layers().len() != self.states.len() {
            return Err(Error::shape("adam: gradient set does not match the model"));
        }
        self.step += 1;
        for ((layer, g), (sw, sb)) in model
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.states)
        {
            adam_step(layer.weights_mut(), g.weights(), sw, hyper, self.step)?;
            adam_step(layer.bias_mut(), g.bias(), sb, hyper, self.step)?;
        }
        Ok(())
    }
}
