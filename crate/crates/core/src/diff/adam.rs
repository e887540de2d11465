use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::params::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for every parameter of one [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(config: AdamConfig, params: &ParamSet<T>) -> Self {
        let zeros = || {
            params
                .ids()
                .map(|id| vec![T::zero(); params.get(id).len()])
                .collect()
        };
        AdamState {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    /// Applies the accumulated gradients with bias correction, then zeroes them.
    pub fn step(&mut self, params: &mut ParamSet<T>) {
        self.step += 1;
        let c = self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let correction1 = T::one() - b1.powi(self.step as i32);
        let correction2 = T::one() - b2.powi(self.step as i32);
        let lr = T::lit(c.lr);
        let eps = T::lit(c.epsilon);
        let (values, grads) = params.split_mut();
        for (((value, grad), m), v) in values
            .iter_mut()
            .zip(grads.iter_mut())
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for (((w, g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(grad.iter_mut())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = b1 * *m + (T::one() - b1) * *g;
                *v = b2 * *v + (T::one() - b2) * *g * *g;
                let m_hat = *m / correction1;
                let v_hat = *v / correction2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
                *g = T::zero();
            }
        }
    }
}
