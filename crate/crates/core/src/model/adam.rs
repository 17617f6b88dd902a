//! Adam with decoupled weight decay and split learning rates.
//!
//! The text-encoder group (embedding table, text projection and its bias)
//! steps at `text_lr`; the image projection at `base_lr`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::params::{is_text_group, Gradients, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub base_lr: f64,
    pub text_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            base_lr: 1e-4,
            text_lr: 1e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.05,
        }
    }
}

/// Optimizer state: first/second moment accumulators shaped like the
/// parameters, the step counter, and the hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
    pub hyper: AdamHyper,
}

impl OptState {
    pub fn new(params: &ModelParams, hyper: AdamHyper) -> Self {
        OptState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            hyper,
        }
    }
}

/// One bias-corrected Adam step with decoupled weight decay. Returns the
/// updated parameters and state; inputs are untouched.
pub fn adam_step(
    params: &ModelParams,
    grads: &Gradients,
    state: &OptState,
) -> Result<(ModelParams, OptState)> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::Dimension(
            "params, gradients and moments must be shape-congruent".into(),
        ));
    }
    let h = state.hyper;
    let t = state.t + 1;
    let bias1 = 1.0 - h.beta1.powi(t as i32);
    let bias2 = 1.0 - h.beta2.powi(t as i32);

    let mut new_params = params.clone();
    let mut new_m = state.m.clone();
    let mut new_v = state.v.clone();
    {
        let p_tensors = new_params.tensors_mut();
        let m_tensors = new_m.tensors_mut();
        let v_tensors = new_v.tensors_mut();
        let g_tensors = grads.tensors();
        for (idx, (((p, m), v), g)) in p_tensors
            .into_iter()
            .zip(m_tensors)
            .zip(v_tensors)
            .zip(g_tensors)
            .enumerate()
        {
            let lr = if is_text_group(idx) { h.text_lr } else { h.base_lr };
            for i in 0..p.len() {
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= lr * (m_hat / (v_hat.sqrt() + h.epsilon) + h.weight_decay * p[i]);
            }
        }
    }
    Ok((
        new_params,
        OptState {
            m: new_m,
            v: new_v,
            t,
            hyper: h,
        },
    ))
}
