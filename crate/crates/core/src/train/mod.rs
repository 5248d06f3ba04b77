//! Learning pipeline: strong-branching data, value targets, imitation
//! pretraining, PPO and tree-search refinement.

mod dataset;
mod imitation;
mod losses;
mod mcts;
mod ppo;
mod targets;

pub use dataset::{
    collect_sb_data, read_dataset, write_dataset, CollectConfig, CollectReport, SbSample,
    DATASET_SCHEMA, DATASET_VERSION,
};
pub use imitation::{imitation_pretrain, top1_agreement, Agreement, ImitationConfig};
pub use losses::{distill_terms, imitation_terms, ppo_terms, LossTerms, PpoHyper};
pub use mcts::{
    mcts_backup, mcts_refine, mcts_search, qualifying_states, simulate_transition, ucb_score,
    ucb_select, Evaluator, MctsConfig, MctsNode, MctsStats, RefineConfig, Side,
};
pub use ppo::{collect_trajectories, ppo_samples, ppo_update, PpoConfig, PpoReport, PpoSample, Trajectory, TrajectoryStep};
pub use targets::{normalize_targets, value_targets_from_tree, TreeRecord};

use thiserror::Error;

use crate::bnb::BnbError;
use crate::branching::BranchError;
use crate::gnn::GnnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("no usable training samples")]
    EmptyDataset,
    #[error("trajectory tree has a cycle through node {0}")]
    CyclicTree(usize),
    #[error("non-finite loss or parameters; update discarded")]
    NumericalDivergence,
    #[error("variable {0} is not a candidate in this state")]
    ActionNotMasked(usize),
    #[error("no searched state reached {threshold} visits")]
    NoQualifyingStates { threshold: u64 },
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Bnb(#[from] BnbError),
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("dataset line {line}: {message}")]
    Schema { line: usize, message: String },
}
