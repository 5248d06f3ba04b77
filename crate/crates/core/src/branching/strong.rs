use std::collections::BTreeMap;

use super::{argmax_first, BranchContext, BranchDecision, BranchError, Brancher};
use crate::bnb::{branch_deltas, child_bound, reward_cap, BnbNode, LpRunner};
use crate::milp::{BoundDelta, LpSolution, LpStatus};

/// Floor applied to each side's gain before taking the product.
pub const SB_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbScore {
    pub down: f64,
    pub up: f64,
    pub score: f64,
}

impl SbScore {
    pub fn from_gains(down: f64, up: f64) -> Self {
        Self { down, up, score: down.max(SB_EPS) * up.max(SB_EPS) }
    }
}

fn probe(runner: &LpRunner<'_>, deltas: &[BoundDelta], j: usize) -> Result<LpSolution, BranchError> {
    let lp = runner.solve(deltas);
    if lp.status != LpStatus::IterationLimit {
        return Ok(lp);
    }
    let lp = runner.solve_with_limit(deltas, runner.iter_limit.saturating_mul(4));
    if lp.status == LpStatus::IterationLimit {
        return Err(BranchError::LpAborted(j));
    }
    Ok(lp)
}

/// Strong-branching score of `j`: both child LPs are solved but not kept.
pub fn sb_score(runner: &LpRunner<'_>, node: &BnbNode, j: usize) -> Result<SbScore, BranchError> {
    let (ld, rd) = branch_deltas(node, j, runner.int_tol);
    let parent = node.dual_bound;
    let cap = reward_cap(parent);
    let gain = |lp: &LpSolution| {
        let b = child_bound(lp, parent);
        if b == f64::INFINITY {
            cap
        } else {
            b - parent
        }
    };
    let down = gain(&probe(runner, &ld, j)?);
    let up = gain(&probe(runner, &rd, j)?);
    Ok(SbScore::from_gains(down, up))
}

/// Scores of every candidate of `node`, keyed by variable.
pub fn sb_scores(runner: &LpRunner<'_>, node: &BnbNode) -> Result<BTreeMap<usize, f64>, BranchError> {
    node.candidates
        .iter()
        .map(|&j| sb_score(runner, node, j).map(|s| (j, s.score)))
        .collect()
}

/// Full strong branching: the candidate with the best score, ties going to
/// the smallest index. All scores are returned in `aux`.
pub fn fsb_select(runner: &LpRunner<'_>, node: &BnbNode) -> Result<BranchDecision, BranchError> {
    if node.candidates.is_empty() {
        return Err(BranchError::EmptyCandidates);
    }
    let scores = sb_scores(runner, node)?;
    let keys: Vec<usize> = scores.keys().copied().collect();
    let best = argmax_first(scores.values().copied()).expect("nonempty");
    Ok(BranchDecision { var: keys[best], aux: Some(scores) })
}

#[derive(Clone, Default)]
pub struct FsbBrancher;

impl Brancher for FsbBrancher {
    fn name(&self) -> &str {
        "fsb"
    }

    fn select(&mut self, ctx: &BranchContext<'_, '_>) -> Result<BranchDecision, BranchError> {
        fsb_select(ctx.runner, ctx.node)
    }
}
