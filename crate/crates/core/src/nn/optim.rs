use alloc::vec::Vec;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::invalid_arg;
use crate::math::sqrt;

/// Triangular cyclic learning rate: linear from `base_lr` up to `max_lr` over
/// the first half of each cycle and back down over the second half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicLr {
    pub base_lr: f64,
    pub max_lr: f64,
    pub cycle_length: u64,
}

impl CyclicLr {
    pub fn constant(lr: f64) -> Self {
        CyclicLr { base_lr: lr, max_lr: lr, cycle_length: 2 }
    }

    pub fn rate(&self, step: u64) -> f64 {
        let len = self.cycle_length.max(1);
        let pos = (step % len) as f64 / len as f64;
        let tri = 1.0 - (2.0 * pos - 1.0).abs();
        self.base_lr + (self.max_lr - self.base_lr) * tri
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub schedule: CyclicLr,
}

impl AdamConfig {
    pub fn new(schedule: CyclicLr) -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, schedule }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        Adam {
            config,
            first: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            second: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Learning rate the next update will use.
    pub fn current_lr(&self) -> f64 {
        self.config.schedule.rate(self.step)
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(invalid_arg!("adam: {} params, {} grads, {} moments", params.len(), grads.len(), self.first.len()));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(invalid_arg!("adam: param {:?} vs grad {:?}", p.shape(), g.shape()));
            }
            if !g.all_finite() {
                return Err(Error::TrainingDivergence { step: self.step });
            }
        }
        let lr = self.current_lr();
        self.step += 1;
        let AdamConfig { beta1, beta2, epsilon, .. } = self.config;
        let c1 = 1.0 - libm::pow(beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(beta2, self.step as f64);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.first.iter_mut().zip(self.second.iter_mut())) {
            let (pd, gd) = (p.data_mut(), g.data());
            for i in 0..gd.len() {
                let m_i = &mut m.data_mut()[i];
                *m_i = beta1 * *m_i + (1.0 - beta1) * gd[i];
                let mi = *m_i;
                let v_i = &mut v.data_mut()[i];
                *v_i = beta2 * *v_i + (1.0 - beta2) * gd[i] * gd[i];
                let m_hat = mi / c1;
                let v_hat = *v_i / c2;
                pd[i] -= lr * m_hat / (sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}
