use std::sync::Arc;

use rand::Rng;

use super::{argmax_first, BranchContext, BranchDecision, BranchError, Brancher};
use crate::gnn::{extract_state, gcnn_forward, BipartiteState, GcnnParams, GnnError};
use crate::rng::{seeded, SolverRng};
use crate::train::{mcts_search, MctsConfig};

fn policy_err(e: GnnError) -> BranchError {
    match e {
        GnnError::EmptyMask => BranchError::EmptyCandidates,
        other => BranchError::Policy(other.to_string()),
    }
}

/// Highest-probability masked variable, ties going to the smallest index.
pub fn policy_select(state: &BipartiteState, params: &GcnnParams) -> Result<BranchDecision, BranchError> {
    let (pi, _, _) = gcnn_forward(state, params).map_err(policy_err)?;
    Ok(argmax_decision(state, &pi))
}

fn argmax_decision(state: &BipartiteState, pi: &[f64]) -> BranchDecision {
    let cands = state.candidates();
    let best = argmax_first(cands.iter().map(|&q| pi[q])).expect("mask is nonempty");
    BranchDecision {
        var: cands[best],
        aux: Some(cands.iter().map(|&q| (q, pi[q])).collect()),
    }
}

/// Draws a masked variable with probability `pi`.
pub fn sample_action(pi: &[f64], mask: &[bool], rng: &mut SolverRng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (q, (&p, &m)) in pi.iter().zip(mask).enumerate() {
        if !m {
            continue;
        }
        acc += p;
        last = Some(q);
        if u < acc {
            return q;
        }
    }
    last.expect("mask is nonempty")
}

#[derive(Clone)]
enum Mode {
    Greedy,
    Sample(SolverRng),
}

/// Branches with the network policy, greedily or by sampling.
#[derive(Clone)]
pub struct PolicyBrancher {
    params: Arc<GcnnParams>,
    mode: Mode,
}

impl PolicyBrancher {
    pub fn greedy(params: Arc<GcnnParams>) -> Self {
        Self { params, mode: Mode::Greedy }
    }

    pub fn sampling(params: Arc<GcnnParams>, seed: u64) -> Self {
        Self { params, mode: Mode::Sample(seeded(seed)) }
    }
}

impl Brancher for PolicyBrancher {
    fn name(&self) -> &str {
        "policy"
    }

    fn select(&mut self, ctx: &BranchContext<'_, '_>) -> Result<BranchDecision, BranchError> {
        let state = extract_state(ctx.runner.inst, ctx.node);
        let (pi, _, _) = gcnn_forward(&state, &self.params).map_err(policy_err)?;
        match &mut self.mode {
            Mode::Greedy => Ok(argmax_decision(&state, &pi)),
            Mode::Sample(rng) => {
                let var = sample_action(&pi, &state.mask, rng);
                Ok(BranchDecision { var, aux: Some(state.candidates().iter().map(|&q| (q, pi[q])).collect()) })
            }
        }
    }
}

/// Runs a tree search over simulated branchings at every node and takes
/// the action with the best root value.
#[derive(Clone)]
pub struct MctsBrancher {
    params: Arc<GcnnParams>,
    config: MctsConfig,
    calls: u64,
}

impl MctsBrancher {
    pub fn new(params: Arc<GcnnParams>, config: MctsConfig) -> Self {
        Self { params, config, calls: 0 }
    }
}

impl Brancher for MctsBrancher {
    fn name(&self) -> &str {
        "policy+mcts"
    }

    fn select(&mut self, ctx: &BranchContext<'_, '_>) -> Result<BranchDecision, BranchError> {
        let state = extract_state(ctx.runner.inst, ctx.node);
        let config = MctsConfig { seed: crate::rng::derive_seed(self.config.seed, self.calls), ..self.config };
        self.calls += 1;
        let search = mcts_search(&state, self.params.as_ref(), &config).map_err(|e| match e {
            crate::train::TrainError::Gnn(g) => policy_err(g),
            other => BranchError::Policy(other.to_string()),
        })?;
        let root = search.root();
        Ok(BranchDecision {
            var: search.best_action,
            aux: Some(root.actions.iter().zip(&root.q).map(|(&a, &q)| (a, q)).collect()),
        })
    }
}
