//! Gated recurrent unit cell, gate order `[reset, update, candidate]`:
//!
//! ```text
//! r  = σ(W_ir m + b_ir + W_hr h + b_hr)
//! z  = σ(W_iz m + b_iz + W_hz h + b_hz)
//! n  = tanh(W_in m + b_in + r ⊙ (W_hn h + b_hn))
//! h' = (1 − z) ⊙ n + z ⊙ h
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Linear, Module, Tensor};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GruCell {
    /// `[3d, input]` input-side weights and biases.
    pub input: Linear,
    /// `[3d, d]` state-side weights and biases.
    pub hidden: Linear,
}

#[derive(Clone, Debug)]
pub struct GruCache {
    h: Vec<f64>,
    m: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    /// `W_hn h + b_hn`
    hn: Vec<f64>,
}

impl GruCell {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, state_dim: usize, rng: &mut R) -> Self {
        // Both sides use the state size for the init bound, as the usual GRU init does.
        let bound = 1.0 / (state_dim as f64).sqrt();
        let mk = |inp: usize, rng: &mut R| Linear {
            weight: Tensor::uniform(&[3 * state_dim, inp], bound, rng),
            bias: Some(Tensor::uniform(&[3 * state_dim], bound, rng)),
        };
        let input = mk(input_dim, rng);
        let hidden = mk(state_dim, rng);
        Self { input, hidden }
    }

    pub fn state_dim(&self) -> usize {
        self.hidden.input_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.input.input_dim()
    }

    pub fn forward(&self, h: &[f64], m: &[f64]) -> Result<(Vec<f64>, GruCache)> {
        let d = self.state_dim();
        if h.len() != d {
            return Err(Error::Shape {
                layer: "gru.state".into(),
                expected: d,
                got: h.len(),
            });
        }
        if m.len() != self.input_dim() {
            return Err(Error::Shape {
                layer: "gru.input".into(),
                expected: self.input_dim(),
                got: m.len(),
            });
        }
        let gi = self.input.forward(m);
        let gh = self.hidden.forward(h);
        let mut r = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut n = vec![0.0; d];
        let mut out = vec![0.0; d];
        for k in 0..d {
            r[k] = sigmoid(gi[k] + gh[k]);
            z[k] = sigmoid(gi[d + k] + gh[d + k]);
            n[k] = (gi[2 * d + k] + r[k] * gh[2 * d + k]).tanh();
            out[k] = (1.0 - z[k]) * n[k] + z[k] * h[k];
        }
        let cache = GruCache {
            h: h.to_vec(),
            m: m.to_vec(),
            r,
            z,
            n,
            hn: gh[2 * d..].to_vec(),
        };
        Ok((out, cache))
    }

    /// Returns `(dL/dh, dL/dm)`.
    pub fn backward(&mut self, c: &GruCache, dout: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.state_dim();
        let mut dgi = vec![0.0; 3 * d];
        let mut dgh = vec![0.0; 3 * d];
        let mut dh = vec![0.0; d];
        for k in 0..d {
            let g = dout[k];
            let dz = g * (c.h[k] - c.n[k]);
            let dn = g * (1.0 - c.z[k]);
            dh[k] = g * c.z[k];
            let dn_pre = dn * (1.0 - c.n[k] * c.n[k]);
            let dr = dn_pre * c.hn[k];
            let dr_pre = dr * c.r[k] * (1.0 - c.r[k]);
            let dz_pre = dz * c.z[k] * (1.0 - c.z[k]);
            dgi[k] = dr_pre;
            dgi[d + k] = dz_pre;
            dgi[2 * d + k] = dn_pre;
            dgh[k] = dr_pre;
            dgh[d + k] = dz_pre;
            dgh[2 * d + k] = dn_pre * c.r[k];
        }
        let dm = self.input.backward(&c.m, &dgi);
        let dh_gates = self.hidden.backward(&c.h, &dgh);
        for (a, b) in dh.iter_mut().zip(dh_gates) {
            *a += b;
        }
        (dh, dm)
    }
}

impl Module for GruCell {
    fn parameters(&self) -> Vec<&Tensor> {
        let mut p = self.input.parameters();
        p.extend(self.hidden.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.input.parameters_mut();
        p.extend(self.hidden.parameters_mut());
        p
    }
}
