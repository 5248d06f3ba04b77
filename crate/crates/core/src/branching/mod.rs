//! Variable selection strategies.

mod policy;
mod random;
mod strong;

pub use policy::{policy_select, sample_action, MctsBrancher, PolicyBrancher};
pub use random::{random_select, RandomBrancher};
pub use strong::{fsb_select, sb_score, sb_scores, FsbBrancher, SbScore, SB_EPS};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnb::{BnbNode, LpRunner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchError {
    #[error("no branching candidates")]
    EmptyCandidates,
    #[error("variable {0} is not a branching candidate")]
    NotACandidate(usize),
    #[error("strong branching LP for variable {0} hit its iteration limit twice")]
    LpAborted(usize),
    #[error("policy evaluation failed: {0}")]
    Policy(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchDecision {
    pub var: usize,
    /// Per-candidate scores, when the strategy computes them.
    pub aux: Option<BTreeMap<usize, f64>>,
}

impl BranchDecision {
    pub fn plain(var: usize) -> Self {
        Self { var, aux: None }
    }
}

/// What a strategy sees when asked to branch: the node and an LP runner
/// that charges any extra solves to the current run.
pub struct BranchContext<'a, 'r> {
    pub runner: &'a LpRunner<'r>,
    pub node: &'a BnbNode,
}

/// A branching strategy. Implementations own any RNG they use, so a fresh
/// clone is taken for every solve.
pub trait Brancher: Send {
    fn name(&self) -> &str;
    fn select(&mut self, ctx: &BranchContext<'_, '_>) -> Result<BranchDecision, BranchError>;
}

impl<B: Brancher + ?Sized> Brancher for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn select(&mut self, ctx: &BranchContext<'_, '_>) -> Result<BranchDecision, BranchError> {
        (**self).select(ctx)
    }
}

/// Index of the largest value, ties going to the earliest position.
pub fn argmax_first(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|b| b.0)
}
