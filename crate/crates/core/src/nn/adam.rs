use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::tensor::Tensor;
use super::{NnError, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second-moment accumulators, one pair per parameter, plus the step
/// counter that drives bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let m = params
            .iter()
            .map(|p| Tensor::zeros(p.value.shape().to_vec()))
            .collect::<Vec<_>>();
        let v = m.clone();
        Self {
            config,
            step: 0,
            m,
            v,
        }
    }
}

/// One Adam update over every parameter in the set. Gradients must have been
/// populated by `backward`; they are zeroed on the way out.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(NnError::Contract(format!(
            "optimizer state tracks {} parameters, set has {}",
            state.m.len(),
            params.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let cfg = state.config;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    for (i, p) in params.iter_mut().enumerate() {
        let (m, v) = (state.m[i].values_mut(), state.v[i].values_mut());
        let grads = p.grad.values_mut();
        let vals = p.value.values_mut();
        for k in 0..vals.len() {
            let g = grads[k];
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            vals[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            grads[k] = 0.0;
        }
    }
    Ok(())
}
