use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moment buffers are matched to parameter
/// tensors by position, so callers must always pass tensors in one order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    pub steps: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            steps: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// Apply one update from the gradients stored on `params`. A non-finite
    /// gradient aborts before anything is modified.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        for (i, p) in params.iter().enumerate() {
            if let Some(g) = p.grad() {
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Divergence {
                        batch: 0,
                        reason: format!("non-finite gradient in parameter tensor {i}"),
                    });
                }
            }
        }
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::Shape {
                layer: "adam".into(),
                expected: self.m.len(),
                got: params.len(),
            });
        }
        self.steps += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.steps as i32);
        let bc2 = 1.0 - beta2.powi(self.steps as i32);
        for (i, p) in params.iter_mut().enumerate() {
            if self.m[i].len() != p.len() {
                return Err(Error::Shape {
                    layer: format!("adam tensor {i}"),
                    expected: self.m[i].len(),
                    got: p.len(),
                });
            }
            let zeros;
            let g: &[f64] = match p.grad() {
                Some(g) => g,
                None => {
                    zeros = vec![0.0; p.len()];
                    &zeros
                }
            };
            let g = g.to_vec();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let values = p.values_mut();
            for k in 0..values.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let mh = m[k] / bc1;
                let vh = v[k] / bc2;
                values[k] -= lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}
