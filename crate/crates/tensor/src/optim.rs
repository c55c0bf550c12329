use std::collections::HashMap;

use crate::params::{ParamId, ParamStore};
use crate::tape::Gradients;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 2e-5,
            beta1: 0.9,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction and no weight decay.
pub struct Adam {
    config: AdamConfig,
    step: u64,
    moments: HashMap<ParamId, (Tensor, Tensor)>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            moments: HashMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let mut updates: Vec<_> = grads.params().collect();
        updates.sort_by_key(|(id, _)| *id);
        for (id, g) in updates {
            let (m, v) = self
                .moments
                .entry(id)
                .or_insert_with(|| (Tensor::zeros(g.shape()), Tensor::zeros(g.shape())));
            let param = store.get_mut(id);
            for (((p, &gi), mi), vi) in param
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
