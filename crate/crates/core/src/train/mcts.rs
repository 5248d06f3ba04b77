use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::imitation::batch_gradient;
use super::losses::distill_terms;
use super::TrainError;
use crate::gnn::{adam_step, gcnn_forward, var_feat, AdamConfig, AdamState, BipartiteState, GcnnParams, GnnError};
use crate::rng::{seeded, SolverRng};

/// Anything that maps a state to a policy over its variables and a value.
pub trait Evaluator {
    fn evaluate(&self, state: &BipartiteState) -> Result<(Vec<f64>, f64), GnnError>;
}

impl Evaluator for GcnnParams {
    fn evaluate(&self, state: &BipartiteState) -> Result<(Vec<f64>, f64), GnnError> {
        let (pi, v, _) = gcnn_forward(state, self)?;
        Ok((pi, v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn draw(rng: &mut SolverRng) -> Self {
        if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// The state after branching `action` to `side`, approximated in feature
/// space: the variable's value snaps to the matching integer, its
/// fractionality drops to 0, the bound flag for that side is set and it
/// leaves the candidate set.
pub fn simulate_transition(state: &BipartiteState, action: usize, side: Side) -> Result<BipartiteState, TrainError> {
    if action >= state.n || !state.mask[action] {
        return Err(TrainError::ActionNotMasked(action));
    }
    let mut next = state.clone();
    let f = next.var_mut(action);
    f[var_feat::FRAC] = 0.0;
    match side {
        Side::Left => {
            f[var_feat::VALUE] = f[var_feat::VALUE].floor();
            f[var_feat::AT_LB] = 1.0;
        }
        Side::Right => {
            f[var_feat::VALUE] = f[var_feat::VALUE].ceil();
            f[var_feat::AT_UB] = 1.0;
        }
    }
    next.mask[action] = false;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MctsConfig {
    pub k: usize,
    pub max_depth: usize,
    pub n_sims: usize,
    pub c_explore: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for MctsConfig {
    fn default() -> Self {
        Self { k: 10, max_depth: 3, n_sims: 1000, c_explore: 2.0, gamma: 0.99, seed: 0 }
    }
}

/// One state in the search tree. `actions` are the top-k candidates by
/// prior in ascending variable order; `prior`, `q` and `n` run parallel to
/// it and are empty until the node is initialized.
#[derive(Clone, Debug, PartialEq)]
pub struct MctsNode {
    pub state: BipartiteState,
    pub depth: usize,
    /// Value estimate of this state (0 when no candidate is left).
    pub value: f64,
    pub actions: Vec<usize>,
    pub prior: Vec<f64>,
    pub q: Vec<f64>,
    pub n: Vec<u64>,
    children: HashMap<(usize, Side), usize>,
    init_values: HashMap<(usize, Side), f64>,
}

impl MctsNode {
    fn new(state: BipartiteState, depth: usize, value: f64) -> Self {
        Self {
            state,
            depth,
            value,
            actions: Vec::new(),
            prior: Vec::new(),
            q: Vec::new(),
            n: Vec::new(),
            children: HashMap::new(),
            init_values: HashMap::new(),
        }
    }

    pub fn is_initialized(&self) -> bool {
        !self.actions.is_empty()
    }

    pub fn total_visits(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Visits beyond the one each action starts with.
    pub fn extra_visits(&self) -> u64 {
        self.total_visits().saturating_sub(self.actions.len() as u64)
    }

    /// Action with the highest `Q`, ties going to the smallest index.
    pub fn best_action(&self) -> Option<usize> {
        crate::branching::argmax_first(self.q.iter().copied()).map(|i| self.actions[i])
    }

    pub fn child(&self, slot: usize, side: Side) -> Option<usize> {
        self.children.get(&(slot, side)).copied()
    }
}

/// A finished search: node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct MctsStats {
    pub nodes: Vec<MctsNode>,
    pub config: MctsConfig,
    pub best_action: usize,
}

impl MctsStats {
    pub fn root(&self) -> &MctsNode {
        &self.nodes[0]
    }
}

/// `Q + c * prior * sqrt(ln(1 + sum N) / (N + 1))` for every action slot.
pub fn ucb_score(node: &MctsNode, c_explore: f64) -> Vec<f64> {
    let total = node.total_visits() as f64;
    let log_term = (1.0 + total).ln();
    (0..node.actions.len())
        .map(|i| node.q[i] + c_explore * node.prior[i] * (log_term / (node.n[i] as f64 + 1.0)).sqrt())
        .collect()
}

/// Slot of the action maximizing the upper confidence score, ties going to
/// the smallest index.
pub fn ucb_select(node: &MctsNode, c_explore: f64) -> usize {
    crate::branching::argmax_first(ucb_score(node, c_explore)).expect("node has actions")
}

/// Applies the running-average update along a simulated path. `path[t]`
/// is a `(node, slot)` pair and `values[t]` the value of the state reached
/// by step `t`; the return credited to step `tau` is
/// `sum_{t >= tau} gamma^(t - tau) * values[t]`.
pub fn mcts_backup(nodes: &mut [MctsNode], path: &[(usize, usize)], values: &[f64], gamma: f64) {
    assert_eq!(path.len(), values.len());
    let mut ret = 0.0;
    for tau in (0..path.len()).rev() {
        ret = values[tau] + gamma * ret;
        let (id, slot) = path[tau];
        let node = &mut nodes[id];
        let n = node.n[slot] as f64;
        node.q[slot] += (ret - node.q[slot]) / (n + 1.0);
        node.n[slot] += 1;
    }
}

fn state_value(eval: &dyn Evaluator, state: &BipartiteState) -> Result<f64, TrainError> {
    if !state.mask.iter().any(|&b| b) {
        return Ok(0.0);
    }
    Ok(eval.evaluate(state)?.1)
}

struct Search<'a> {
    eval: &'a dyn Evaluator,
    config: MctsConfig,
    rng: SolverRng,
    nodes: Vec<MctsNode>,
}

impl Search<'_> {
    /// Restricts the node to its top-k actions and seeds each with
    /// `Q = gamma * V(s')` for a randomly drawn side and `N = 1`.
    fn initialize(&mut self, id: usize) -> Result<(), TrainError> {
        let state = &self.nodes[id].state;
        let (pi, _) = self.eval.evaluate(state)?;
        let mut cands = state.candidates();
        cands.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
        cands.truncate(self.config.k.max(1));
        cands.sort_unstable();
        let mut q = Vec::with_capacity(cands.len());
        let mut init_values = HashMap::new();
        for (slot, &a) in cands.iter().enumerate() {
            let side = Side::draw(&mut self.rng);
            let next = simulate_transition(&self.nodes[id].state, a, side)?;
            let v = state_value(self.eval, &next)?;
            init_values.insert((slot, side), v);
            q.push(self.config.gamma * v);
        }
        let node = &mut self.nodes[id];
        node.prior = cands.iter().map(|&a| pi[a]).collect();
        node.n = vec![1; cands.len()];
        node.q = q;
        node.actions = cands;
        node.init_values = init_values;
        Ok(())
    }

    fn simulate(&mut self) -> Result<(), TrainError> {
        let mut cur = 0;
        let mut path = Vec::new();
        let mut values = Vec::new();
        loop {
            let node = &self.nodes[cur];
            if node.depth >= self.config.max_depth || node.actions.is_empty() {
                break;
            }
            let slot = ucb_select(node, self.config.c_explore);
            let side = Side::draw(&mut self.rng);
            path.push((cur, slot));
            if let Some(child) = node.child(slot, side) {
                values.push(self.nodes[child].value);
                cur = child;
                continue;
            }
            let next = simulate_transition(&node.state, node.actions[slot], side)?;
            let value = match node.init_values.get(&(slot, side)) {
                Some(&v) => v,
                None => state_value(self.eval, &next)?,
            };
            let depth = node.depth + 1;
            let expandable = depth < self.config.max_depth && next.mask.iter().any(|&b| b);
            let child = self.nodes.len();
            self.nodes.push(MctsNode::new(next, depth, value));
            self.nodes[cur].children.insert((slot, side), child);
            if expandable {
                self.initialize(child)?;
            }
            values.push(value);
            break;
        }
        mcts_backup(&mut self.nodes, &path, &values, self.config.gamma);
        Ok(())
    }
}

/// Tree search over simulated branchings from `root`. Rewards inside the
/// simulation are zero, so returns are discounted sums of value estimates.
pub fn mcts_search(root: &BipartiteState, eval: &dyn Evaluator, config: &MctsConfig) -> Result<MctsStats, TrainError> {
    if !root.mask.iter().any(|&b| b) {
        return Err(TrainError::Gnn(GnnError::EmptyMask));
    }
    let value = state_value(eval, root)?;
    let mut search = Search {
        eval,
        config: *config,
        rng: seeded(config.seed),
        nodes: vec![MctsNode::new(root.clone(), 0, value)],
    };
    search.initialize(0)?;
    for _ in 0..config.n_sims {
        search.simulate()?;
    }
    let best_action = search.nodes[0].best_action().expect("root has actions");
    Ok(MctsStats { nodes: search.nodes, config: *config, best_action })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub visit_threshold: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { visit_threshold: 10, epochs: 10, batch_size: 32, adam: AdamConfig::default(), seed: 0 }
    }
}

/// Distills the argmax-Q action of every tree node with at least
/// `visit_threshold` visits past initialization into the policy by
/// cross-entropy. Returns the refined parameters and per-epoch mean loss.
pub fn mcts_refine(
    params: &GcnnParams,
    searches: &[MctsStats],
    config: &RefineConfig,
) -> Result<(GcnnParams, Vec<f64>), TrainError> {
    let targets: Vec<(&BipartiteState, usize)> = searches
        .iter()
        .flat_map(|s| s.nodes.iter())
        .filter(|n| n.is_initialized() && n.extra_visits() >= config.visit_threshold)
        .map(|n| (&n.state, n.best_action().expect("initialized")))
        .collect();
    if targets.is_empty() {
        return Err(TrainError::NoQualifyingStates { threshold: config.visit_threshold });
    }
    let mut theta = params.clone();
    let mut adam = AdamState::new(theta.len());
    let mut rng = seeded(config.seed);
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            let (grad, loss) =
                batch_gradient(&theta, batch, |i| targets[i].0, |i, pi, _| distill_terms(pi, targets[i].1))?;
            sum += loss * batch.len() as f64;
            adam_step(&mut theta.data, &grad.data, &mut adam, &config.adam);
            if !theta.is_finite() {
                return Err(TrainError::NumericalDivergence);
            }
        }
        curve.push(sum / targets.len() as f64);
    }
    Ok((theta, curve))
}

/// Number of searched states that pass the visit threshold.
pub fn qualifying_states(searches: &[MctsStats], threshold: u64) -> usize {
    searches
        .iter()
        .flat_map(|s| s.nodes.iter())
        .filter(|n| n.is_initialized() && n.extra_visits() >= threshold)
        .count()
}
