use rand::Rng;

use super::{BranchContext, BranchDecision, BranchError, Brancher};
use crate::rng::{seeded, SolverRng};

/// Uniform choice over `candidates`.
pub fn random_select(candidates: &[usize], rng: &mut SolverRng) -> Result<BranchDecision, BranchError> {
    if candidates.is_empty() {
        return Err(BranchError::EmptyCandidates);
    }
    Ok(BranchDecision::plain(candidates[rng.gen_range(0..candidates.len())]))
}

#[derive(Clone)]
pub struct RandomBrancher {
    rng: SolverRng,
}

impl RandomBrancher {
    pub fn new(seed: u64) -> Self {
        Self { rng: seeded(seed) }
    }
}

impl Brancher for RandomBrancher {
    fn name(&self) -> &str {
        "random"
    }

    fn select(&mut self, ctx: &BranchContext<'_, '_>) -> Result<BranchDecision, BranchError> {
        random_select(&ctx.node.candidates, &mut self.rng)
    }
}
