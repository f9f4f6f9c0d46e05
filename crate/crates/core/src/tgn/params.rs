use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{GruCell, Mlp, MlpShape, Module, TemporalAttention, Tensor, TimeEncoder};
use crate::Result;

/// Dimensions of the model. Node count is not part of it; the memory
/// store is sized per stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TgnConfig {
    pub memory_dim: usize,
    pub embedding_dim: usize,
    pub time_dim: usize,
    pub edge_feat_dim: usize,
    pub message_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub neighbors: usize,
}

impl Default for TgnConfig {
    fn default() -> Self {
        Self {
            memory_dim: 16,
            embedding_dim: 16,
            time_dim: 8,
            edge_feat_dim: 0,
            message_hidden: vec![32],
            decoder_hidden: vec![32],
            neighbors: 10,
        }
    }
}

impl TgnConfig {
    pub fn message_shape(&self) -> MlpShape {
        MlpShape::new(
            2 * self.memory_dim + self.time_dim + self.edge_feat_dim,
            &self.message_hidden,
            self.memory_dim,
        )
    }

    pub fn query_dim(&self) -> usize {
        self.memory_dim + self.time_dim
    }

    pub fn neighbor_dim(&self) -> usize {
        self.memory_dim + self.edge_feat_dim + self.time_dim
    }

    pub fn decoder_shape(&self) -> MlpShape {
        MlpShape::new(2 * self.embedding_dim, &self.decoder_hidden, 1)
    }
}

/// Every trainable tensor of the model. Initialised in the fixed order
/// message, updater, readout, decoder from a single RNG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TgnParams {
    pub config: TgnConfig,
    pub message: Mlp,
    pub updater: GruCell,
    pub time: TimeEncoder,
    pub readout: TemporalAttention,
    pub decoder: Mlp,
}

impl TgnParams {
    pub fn new<R: Rng + ?Sized>(config: &TgnConfig, time_span: f64, rng: &mut R) -> Result<Self> {
        let message = Mlp::new("message", config.message_shape(), rng)?;
        let updater = GruCell::new(config.memory_dim, config.memory_dim, rng);
        let readout = TemporalAttention::new(config.query_dim(), config.neighbor_dim(), config.embedding_dim, rng);
        let decoder = Mlp::new("decoder", config.decoder_shape(), rng)?;
        Ok(Self {
            config: config.clone(),
            message,
            updater,
            time: TimeEncoder::new(config.time_dim, time_span),
            readout,
            decoder,
        })
    }
}

impl Module for TgnParams {
    fn parameters(&self) -> Vec<&Tensor> {
        let mut p = self.message.parameters();
        p.extend(self.updater.parameters());
        p.extend(self.time.parameters());
        p.extend(self.readout.parameters());
        p.extend(self.decoder.parameters());
        p
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.message.parameters_mut();
        p.extend(self.updater.parameters_mut());
        p.extend(self.time.parameters_mut());
        p.extend(self.readout.parameters_mut());
        p.extend(self.decoder.parameters_mut());
        p
    }
}

/// Instantiated size of one component next to its closed-form count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCount {
    pub name: String,
    pub actual: usize,
    pub closed_form_weights: usize,
    pub closed_form_biases: usize,
    /// Message-function weights when its input is sized `2·d_N + d_E`
    /// rather than from the memory and time widths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_convention_weights: Option<usize>,
}

impl ComponentCount {
    pub fn closed_form(&self) -> usize {
        self.closed_form_weights + self.closed_form_biases
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterReport {
    pub num_nodes: usize,
    pub components: Vec<ComponentCount>,
    pub total: usize,
    pub memory_fraction: f64,
}

impl ParameterReport {
    pub fn component(&self, name: &str) -> Option<&ComponentCount> {
        self.components.iter().find(|c| c.name == name)
    }
}

fn mlp_weights(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1]).sum()
}

/// Parameter totals for a model serving `num_nodes` nodes. The memory
/// store counts as parameters; everything else is read off `params`.
pub fn count_parameters(params: &TgnParams, num_nodes: usize) -> ParameterReport {
    let c = &params.config;
    let (dm, dn, dt, de) = (c.memory_dim, c.embedding_dim, c.time_dim, c.edge_feat_dim);
    let msg_dims = c.message_shape().dims();
    let mut embedding_dims = msg_dims.clone();
    embedding_dims[0] = 2 * dn + de;
    let dec_dims = c.decoder_shape().dims();
    let components = vec![
        ComponentCount {
            name: "memory".into(),
            actual: num_nodes * dm,
            closed_form_weights: num_nodes * dm,
            closed_form_biases: 0,
            embedding_convention_weights: None,
        },
        ComponentCount {
            name: "message".into(),
            actual: params.message.num_parameters(),
            closed_form_weights: mlp_weights(&msg_dims),
            closed_form_biases: msg_dims[1..].iter().sum(),
            embedding_convention_weights: Some(mlp_weights(&embedding_dims)),
        },
        ComponentCount {
            name: "updater".into(),
            actual: params.updater.num_parameters(),
            closed_form_weights: 3 * dm * (dm + dm),
            closed_form_biases: 6 * dm,
            embedding_convention_weights: None,
        },
        ComponentCount {
            name: "time_encoder".into(),
            actual: params.time.num_parameters(),
            closed_form_weights: dt,
            closed_form_biases: dt,
            embedding_convention_weights: None,
        },
        ComponentCount {
            name: "readout".into(),
            actual: params.readout.num_parameters(),
            closed_form_weights: (dm + dt) * dn + 2 * (dm + de + dt) * dn + dn * dn,
            closed_form_biases: dn,
            embedding_convention_weights: None,
        },
        ComponentCount {
            name: "decoder".into(),
            actual: params.decoder.num_parameters(),
            closed_form_weights: mlp_weights(&dec_dims),
            closed_form_biases: dec_dims[1..].iter().sum(),
            embedding_convention_weights: None,
        },
    ];
    let total: usize = components.iter().map(|c| c.actual).sum();
    ParameterReport {
        num_nodes,
        memory_fraction: if total == 0 { 0.0 } else { (num_nodes * dm) as f64 / total as f64 },
        components,
        total,
    }
}
