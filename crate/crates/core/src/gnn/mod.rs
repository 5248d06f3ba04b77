//! Bipartite node state and the graph-convolutional policy/value network.

mod adam;
mod net;
mod params;
mod state;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use net::{forward_trace, gcnn_backward, gcnn_forward, masked_softmax, ForwardTrace};
pub use params::{Checkpoint, Dense, GcnnParams, Layout, ShapeEntry, DEFAULT_HIDDEN};
pub use state::{extract_state, extract_state_from, var_feat, BipartiteState, D_C, D_E, D_X};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnnError {
    #[error("no variable is masked in")]
    EmptyMask,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
