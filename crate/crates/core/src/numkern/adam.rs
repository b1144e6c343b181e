use super::ParamStore;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: ParamStore,
    pub v: ParamStore,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        Self { config, m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut ParamStore, grads: &ParamStore, state: &mut AdamState) -> Result<()> {
    params.check_layout(grads)?;
    params.check_layout(&state.m)?;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for i in 0..params.len() {
        let g = grads.at(i).data();
        let m = state.m.at_mut(i).data_mut();
        for (mk, gk) in m.iter_mut().zip(g) {
            *mk = beta1 * *mk + (1.0 - beta1) * gk;
        }
        let v = state.v.at_mut(i).data_mut();
        for (vk, gk) in v.iter_mut().zip(g) {
            *vk = beta2 * *vk + (1.0 - beta2) * gk * gk;
        }
        let m = state.m.at(i).data();
        let v = state.v.at(i).data();
        let p = params.at_mut(i).data_mut();
        for k in 0..p.len() {
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
