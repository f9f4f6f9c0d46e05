use serde::{Deserialize, Serialize};

use super::{Module, Tensor};

/// `φ(Δt) = cos(Δt·ω + b)` with trainable frequencies `ω` and phases `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeEncoder {
    pub omega: Tensor,
    pub phase: Tensor,
}

impl TimeEncoder {
    /// Frequencies log-spaced over `[1e-4·2π/span, 10·2π/span]`, phases zero.
    pub fn new(dim: usize, span: f64) -> Self {
        let span = if span > 0.0 { span } else { 1.0 };
        let base = 2.0 * std::f64::consts::PI / span;
        let (lo, hi) = (1e-4 * base, 10.0 * base);
        let omega = (0..dim)
            .map(|i| {
                if dim == 1 {
                    lo
                } else {
                    lo * (hi / lo).powf(i as f64 / (dim - 1) as f64)
                }
            })
            .collect();
        Self {
            omega: Tensor::from_vec(&[dim], omega).expect("length matches"),
            phase: Tensor::zeros(&[dim]),
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn forward(&self, dt: f64) -> Vec<f64> {
        self.omega
            .values()
            .iter()
            .zip(self.phase.values())
            .map(|(w, b)| (dt * w + b).cos())
            .collect()
    }

    /// Accumulate `dω`, `db`; return `dL/dΔt`.
    pub fn backward(&mut self, dt: f64, dy: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = vec![0.0; d];
        for k in 0..d {
            s[k] = -(dt * self.omega.values()[k] + self.phase.values()[k]).sin() * dy[k];
        }
        let mut ddt = 0.0;
        {
            let (w, gw) = self.omega.split_mut();
            for k in 0..d {
                gw[k] += s[k] * dt;
                ddt += s[k] * w[k];
            }
        }
        for (gb, sk) in self.phase.grad_mut().iter_mut().zip(&s) {
            *gb += sk;
        }
        ddt
    }
}

impl Module for TimeEncoder {
    fn parameters(&self) -> Vec<&Tensor> {
        vec![&self.omega, &self.phase]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.omega, &mut self.phase]
    }
}
