use std::cell::Cell;
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use super::clock::Clock;
use crate::milp::{
    fractional_candidates, lp_relax_solve, BoundDelta, LpSolution, LpStatus, MilpInstance,
};

/// Solves LP relaxations for one B&B run and charges each solve to the clock.
pub struct LpRunner<'a> {
    pub inst: &'a MilpInstance,
    pub clock: &'a dyn Clock,
    pub iter_limit: usize,
    pub int_tol: f64,
    solves: Cell<usize>,
}

impl<'a> LpRunner<'a> {
    pub fn new(inst: &'a MilpInstance, clock: &'a dyn Clock, iter_limit: usize, int_tol: f64) -> Self {
        Self { inst, clock, iter_limit, int_tol, solves: Cell::new(0) }
    }

    pub fn solve(&self, deltas: &[BoundDelta]) -> LpSolution {
        self.solve_with_limit(deltas, self.iter_limit)
    }

    pub fn solve_with_limit(&self, deltas: &[BoundDelta], limit: usize) -> LpSolution {
        let sol = lp_relax_solve(self.inst, deltas, limit);
        self.solves.set(self.solves.get() + 1);
        self.clock.on_lp_solve();
        sol
    }

    /// Number of LPs solved so far, strong-branching probes included.
    pub fn solves(&self) -> usize {
        self.solves.get()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub deltas: Vec<BoundDelta>,
    pub lp: LpSolution,
    pub dual_bound: f64,
    pub candidates: Vec<usize>,
    /// Bound inherited from the parent, used when the LP hits its pivot limit.
    pub parent_bound: f64,
    pub retried: bool,
}

impl BnbNode {
    pub fn new(
        runner: &LpRunner<'_>,
        id: usize,
        parent: Option<usize>,
        depth: usize,
        deltas: Vec<BoundDelta>,
        parent_bound: f64,
    ) -> Self {
        let lp = runner.solve(&deltas);
        let mut node = Self {
            id,
            parent,
            depth,
            deltas,
            lp: LpSolution {
                status: LpStatus::IterationLimit,
                x: Vec::new(),
                objective: f64::NAN,
                duals: Vec::new(),
                iterations: 0,
            },
            dual_bound: parent_bound,
            candidates: Vec::new(),
            parent_bound,
            retried: false,
        };
        node.set_lp(lp, runner);
        node
    }

    pub(crate) fn set_lp(&mut self, lp: LpSolution, runner: &LpRunner<'_>) {
        self.dual_bound = child_bound(&lp, self.parent_bound);
        self.candidates = if lp.is_optimal() {
            fractional_candidates(&lp.x, &runner.inst.integers, runner.int_tol)
        } else {
            Vec::new()
        };
        self.lp = lp;
    }

    pub fn is_infeasible(&self) -> bool {
        self.lp.status == LpStatus::Infeasible
    }

    /// Local bounds of every variable at this node.
    pub fn local_bounds(&self, inst: &MilpInstance) -> (Vec<f64>, Vec<f64>) {
        crate::milp::apply_deltas(inst, &self.deltas)
    }
}

/// Dual bound implied by an LP result.
pub fn child_bound(lp: &LpSolution, parent_bound: f64) -> f64 {
    match lp.status {
        LpStatus::Optimal => lp.objective,
        LpStatus::Infeasible => f64::INFINITY,
        LpStatus::Unbounded => f64::NEG_INFINITY,
        LpStatus::IterationLimit => parent_bound,
    }
}

/// Floor of `v`, snapping values within `tol` of an integer onto it.
fn floor_tol(v: f64, tol: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= tol {
        r
    } else {
        v.floor()
    }
}

/// The two children of branching on `j`: `x_j <= floor(x*_j)` on the left,
/// `x_j >= ceil(x*_j)` on the right, both with their LPs solved.
pub fn apply_branch(
    runner: &LpRunner<'_>,
    node: &BnbNode,
    j: usize,
    left_id: usize,
    right_id: usize,
) -> (BnbNode, BnbNode) {
    let (ld, rd) = branch_deltas(node, j, runner.int_tol);
    let left = BnbNode::new(runner, left_id, Some(node.id), node.depth + 1, ld, node.dual_bound);
    let right = BnbNode::new(runner, right_id, Some(node.id), node.depth + 1, rd, node.dual_bound);
    (left, right)
}

/// Delta sequences of the two children of branching `node` on `j`.
pub fn branch_deltas(node: &BnbNode, j: usize, int_tol: f64) -> (Vec<BoundDelta>, Vec<BoundDelta>) {
    let v = node.lp.x[j];
    let lo = floor_tol(v, int_tol);
    let hi = if (v - lo).abs() <= int_tol { lo + 1.0 } else { v.ceil() };
    let mut left = node.deltas.clone();
    left.push(BoundDelta::upper(j, lo));
    let mut right = node.deltas.clone();
    right.push(BoundDelta::lower(j, hi));
    (left, right)
}

/// Bound used in place of `+inf` for an infeasible child.
pub fn reward_cap(parent_bound: f64) -> f64 {
    10.0 * (1.0 + parent_bound.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reward {
    pub value: f64,
    /// Both children infeasible: the value is the cap and the record should
    /// not be used for value fitting.
    pub both_infeasible: bool,
}

/// Improvement of the local dual bound after a branching.
pub fn local_reward(parent: &BnbNode, left: &BnbNode, right: &BnbNode) -> Reward {
    reward_from_bounds(parent.dual_bound, left.dual_bound, right.dual_bound)
}

pub fn reward_from_bounds(parent: f64, left: f64, right: f64) -> Reward {
    let cap = reward_cap(parent);
    let clamp = |b: f64| if b == f64::INFINITY { parent + cap } else { b };
    let value = clamp(left).min(clamp(right)) - parent;
    Reward { value, both_infeasible: left == f64::INFINITY && right == f64::INFINITY }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Unexpanded nodes ordered by dual bound, then by id.
#[derive(Default)]
pub struct OpenSet {
    heap: BinaryHeap<Reverse<Key>>,
    nodes: HashMap<usize, BnbNode>,
}

impl OpenSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: BnbNode) {
        self.heap.push(Reverse(Key(node.dual_bound, node.id)));
        self.nodes.insert(node.id, node);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn min_bound(&self) -> Option<f64> {
        self.heap.peek().map(|r| r.0 .0)
    }

    pub fn iter(&self) -> impl Iterator<Item = &BnbNode> {
        self.nodes.values()
    }
}

/// Removes and returns the node with the smallest dual bound, ties going to
/// the smallest id.
pub fn select_next_node(open: &mut OpenSet) -> Option<BnbNode> {
    let Reverse(Key(_, id)) = open.heap.pop()?;
    open.nodes.remove(&id)
}
