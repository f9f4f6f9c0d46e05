use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Linear, Module, Tensor};
use crate::{Error, Result};

/// Softmax weights of one attention call (zero for masked neighbors).
#[derive(Clone, Debug, Default)]
pub struct AttentionCache {
    pub weights: Vec<f64>,
}

/// Scaled dot-product attention of `query` over the unmasked rows of
/// `keys`/`values`. With no unmasked neighbor the output is the zero vector
/// of length `value_dim`.
pub fn scaled_dot_attention(
    query: &[f64],
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    mask: &[bool],
    value_dim: usize,
) -> (Vec<f64>, AttentionCache) {
    let scale = 1.0 / (query.len() as f64).sqrt();
    let mut scores: Vec<f64> = keys
        .iter()
        .map(|k| k.iter().zip(query).map(|(a, b)| a * b).sum::<f64>() * scale)
        .collect();
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; value_dim];
    if max == f64::NEG_INFINITY {
        return (
            out,
            AttentionCache {
                weights: vec![0.0; keys.len()],
            },
        );
    }
    let mut total = 0.0;
    for (s, &m) in scores.iter_mut().zip(mask) {
        *s = if m { (*s - max).exp() } else { 0.0 };
        total += *s;
    }
    for (s, v) in scores.iter_mut().zip(values) {
        *s /= total;
        if *s != 0.0 {
            for (o, x) in out.iter_mut().zip(v) {
                *o += *s * x;
            }
        }
    }
    (out, AttentionCache { weights: scores })
}

/// Gradients `(dquery, dkeys, dvalues)` of [`scaled_dot_attention`].
pub fn scaled_dot_attention_backward(
    query: &[f64],
    keys: &[Vec<f64>],
    values: &[Vec<f64>],
    cache: &AttentionCache,
    dout: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let scale = 1.0 / (query.len() as f64).sqrt();
    let a = &cache.weights;
    let da: Vec<f64> = values
        .iter()
        .map(|v| v.iter().zip(dout).map(|(x, g)| x * g).sum())
        .collect();
    let mean: f64 = a.iter().zip(&da).map(|(x, y)| x * y).sum();
    let mut dq = vec![0.0; query.len()];
    let mut dk = Vec::with_capacity(keys.len());
    let mut dv = Vec::with_capacity(values.len());
    for j in 0..keys.len() {
        let ds = a[j] * (da[j] - mean) * scale;
        for (q, k) in dq.iter_mut().zip(&keys[j]) {
            *q += ds * k;
        }
        dk.push(query.iter().map(|q| ds * q).collect());
        dv.push(dout.iter().map(|g| a[j] * g).collect());
    }
    (dq, dk, dv)
}

/// Single-head temporal attention readout:
/// `emb = W_q x_q + b_q + W_o · attn(W_q x_q + b_q, W_k X, W_v X)`.
/// Without neighbors the embedding is the projected query alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
}

#[derive(Clone, Debug)]
pub struct TemporalAttentionCache {
    xq: Vec<f64>,
    xk: Vec<Vec<f64>>,
    q: Vec<f64>,
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    attn: Vec<f64>,
    inner: AttentionCache,
}

impl TemporalAttentionCache {
    pub fn weights(&self) -> &[f64] {
        &self.inner.weights
    }
}

impl TemporalAttention {
    pub fn new<R: Rng + ?Sized>(query_dim: usize, neighbor_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            query: Linear::new(query_dim, out_dim, true, rng),
            key: Linear::new(neighbor_dim, out_dim, false, rng),
            value: Linear::new(neighbor_dim, out_dim, false, rng),
            output: Linear::new(out_dim, out_dim, false, rng),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.query.output_dim()
    }

    pub fn forward(&self, xq: &[f64], xk: &[Vec<f64>]) -> Result<(Vec<f64>, TemporalAttentionCache)> {
        if xq.len() != self.query.input_dim() {
            return Err(Error::Shape {
                layer: "attention.query".into(),
                expected: self.query.input_dim(),
                got: xq.len(),
            });
        }
        if let Some(bad) = xk.iter().find(|x| x.len() != self.key.input_dim()) {
            return Err(Error::Shape {
                layer: "attention.key".into(),
                expected: self.key.input_dim(),
                got: bad.len(),
            });
        }
        let q = self.query.forward(xq);
        let keys: Vec<Vec<f64>> = xk.iter().map(|x| self.key.forward(x)).collect();
        let values: Vec<Vec<f64>> = xk.iter().map(|x| self.value.forward(x)).collect();
        let mask = vec![true; xk.len()];
        let (attn, inner) = scaled_dot_attention(&q, &keys, &values, &mask, self.out_dim());
        let mut emb = q.clone();
        if !xk.is_empty() {
            for (e, o) in emb.iter_mut().zip(self.output.forward(&attn)) {
                *e += o;
            }
        }
        Ok((
            emb,
            TemporalAttentionCache {
                xq: xq.to_vec(),
                xk: xk.to_vec(),
                q,
                keys,
                values,
                attn,
                inner,
            },
        ))
    }

    /// Returns `(dL/dx_q, dL/dX)`.
    pub fn backward(&mut self, c: &TemporalAttentionCache, demb: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut dq = demb.to_vec();
        let mut dxk = Vec::with_capacity(c.xk.len());
        if !c.xk.is_empty() {
            let dattn = self.output.backward(&c.attn, demb);
            let (dq_att, dkeys, dvalues) =
                scaled_dot_attention_backward(&c.q, &c.keys, &c.values, &c.inner, &dattn);
            for (a, b) in dq.iter_mut().zip(dq_att) {
                *a += b;
            }
            for j in 0..c.xk.len() {
                let mut g = self.key.backward(&c.xk[j], &dkeys[j]);
                for (a, b) in g.iter_mut().zip(self.value.backward(&c.xk[j], &dvalues[j])) {
                    *a += b;
                }
                dxk.push(g);
            }
        }
        let dxq = self.query.backward(&c.xq, &dq);
        (dxq, dxk)
    }
}

impl Module for TemporalAttention {
    fn parameters(&self) -> Vec<&Tensor> {
        [&self.query, &self.key, &self.value, &self.output]
            .into_iter()
            .flat_map(|l| l.parameters())
            .collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.query.parameters_mut();
        p.extend(self.key.parameters_mut());
        p.extend(self.value.parameters_mut());
        p.extend(self.output.parameters_mut());
        p
    }
}
