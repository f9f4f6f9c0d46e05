//! Memory-augmented temporal graph network.
//!
//! Per batch the engine (1) applies each node's pending message from an
//! earlier batch through the message MLP and GRU updater, (2) embeds the
//! batch's sources, destinations and negatives with one temporal-attention
//! layer over their most recent neighbors, (3) scores pairs with the MLP
//! decoder, and only after the caller has taken its optimizer step (4)
//! records the batch's own raw messages and neighbors. Predictions for a
//! batch therefore see nothing of that batch, while the gradient still
//! reaches the message function and updater through step (1).

mod engine;
mod memory;
mod messages;
mod neighbors;
mod params;

pub use engine::{BatchOutput, StructMapTerm, TgnState};
pub use memory::{update_memory, MemoryStore};
pub use messages::{build_raw_messages, compute_messages, NodeMessage, RawMessage};
pub use neighbors::{NeighborCache, NeighborEntry};
pub use params::{count_parameters, ComponentCount, ParameterReport, TgnConfig, TgnParams};
