use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Module, Tensor};
use crate::{Error, Result};

/// Affine map `y = W x + b` with `W` of shape `[out, in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Option<Tensor>,
}

impl Linear {
    /// Weights and bias uniform in `±1/√in`.
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, bias: bool, rng: &mut R) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let weight = Tensor::uniform(&[output, input], bound, rng);
        let bias = bias.then(|| Tensor::uniform(&[output], bound, rng));
        Self { weight, bias }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn output_dim(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (out, inp) = (self.output_dim(), self.input_dim());
        debug_assert_eq!(x.len(), inp);
        let w = self.weight.values();
        let mut y = match &self.bias {
            Some(b) => b.values().to_vec(),
            None => vec![0.0; out],
        };
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &w[o * inp..(o + 1) * inp];
            *yo += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        y
    }

    /// Accumulate `dW += dy xᵀ`, `db += dy`; return `Wᵀ dy`.
    pub fn backward(&mut self, x: &[f64], dy: &[f64]) -> Vec<f64> {
        let inp = self.input_dim();
        let mut dx = vec![0.0; inp];
        let (w, gw) = self.weight.split_mut();
        for (o, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let row = &w[o * inp..(o + 1) * inp];
            let grow = &mut gw[o * inp..(o + 1) * inp];
            for i in 0..inp {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
        if let Some(b) = &mut self.bias {
            for (gb, g) in b.grad_mut().iter_mut().zip(dy) {
                *gb += g;
            }
        }
        dx
    }
}

impl Module for Linear {
    fn parameters(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.weight];
        if let Some(b) = &self.bias {
            p.push(b);
        }
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.weight];
        if let Some(b) = &mut self.bias {
            p.push(b);
        }
        p
    }
}

/// Layer sizes of an MLP with ReLU hidden layers and an identity output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
}

impl MlpShape {
    pub fn new(input_dim: usize, hidden_dims: &[usize], output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dims: hidden_dims.to_vec(),
            output_dim,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim];
        d.extend(&self.hidden_dims);
        d.push(self.output_dim);
        d
    }

    /// `in·h_1 + Σ h_i·h_{i+1} + h_L·out`.
    pub fn weight_count(&self) -> usize {
        self.dims().windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// `Σ h_i + out`.
    pub fn bias_count(&self) -> usize {
        self.hidden_dims.iter().sum::<usize>() + self.output_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.weight_count() + self.bias_count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims().contains(&0) {
            return Err(Error::Config(format!("MLP dimensions must be positive: {:?}", self.dims())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    name: String,
    shape: MlpShape,
    layers: Vec<Linear>,
}

/// Layer inputs (post-activation) and hidden pre-activations of one pass.
#[derive(Clone, Debug, Default)]
pub struct MlpCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(name: &str, shape: MlpShape, rng: &mut R) -> Result<Self> {
        shape.validate()?;
        let layers = shape
            .dims()
            .windows(2)
            .map(|w| Linear::new(w[0], w[1], true, rng))
            .collect();
        Ok(Self {
            name: name.to_string(),
            shape,
            layers,
        })
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.shape.input_dim {
            return Err(Error::Shape {
                layer: format!("{}.layer0", self.name),
                expected: self.shape.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        self.check_input(x)?;
        let mut cache = MlpCache::default();
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h);
            cache.inputs.push(std::mem::take(&mut h));
            if i < last {
                h = z.iter().map(|&v| v.max(0.0)).collect();
                cache.pre.push(z);
            } else {
                h = z;
            }
        }
        Ok((h, cache))
    }

    /// Forward pass without keeping a cache.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i < last {
                h.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Ok(h)
    }

    pub fn backward(&mut self, cache: &MlpCache, dy: &[f64]) -> Vec<f64> {
        let mut g = dy.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < self.layers.len() - 1 {
                for (gv, &z) in g.iter_mut().zip(&cache.pre[i]) {
                    if z <= 0.0 {
                        *gv = 0.0;
                    }
                }
            }
            g = self.layers[i].backward(&cache.inputs[i], &g);
        }
        g
    }
}

impl Module for Mlp {
    fn parameters(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.parameters()).collect()
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.parameters_mut()).collect()
    }
}
