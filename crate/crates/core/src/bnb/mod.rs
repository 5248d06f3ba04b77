//! Best-bound branch and bound over the LP relaxation.

mod clock;
mod log;
mod node;
mod trace;

pub use clock::{Clock, ClockKind, FakeClock, WallClock};
pub use log::{read_trajectory_log, TrajectoryLog, TrajectoryRecord};
pub use node::{
    apply_branch, branch_deltas, child_bound, local_reward, reward_cap, reward_from_bounds,
    select_next_node, BnbNode, LpRunner, OpenSet, Reward,
};
pub use trace::{dual_integral_score, DualBoundTrace, ScoreError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branching::{BranchContext, BranchDecision, BranchError, Brancher};
use crate::milp::{default_iter_limit, LpStatus, MilpInstance, INT_TOL};

/// Slack allowed when comparing a node bound against the incumbent.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnbError {
    #[error("solve aborted: {0}")]
    SolveAborted(String),
    #[error(transparent)]
    Branch(#[from] BranchError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub node_limit: usize,
    pub time_limit_s: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { node_limit: usize::MAX, time_limit_s: f64::INFINITY }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub limits: Limits,
    /// Pivot budget per LP; `None` uses [`default_iter_limit`].
    pub iter_limit: Option<usize>,
    pub int_tol: f64,
    pub record_log: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { limits: Limits::default(), iter_limit: None, int_tol: INT_TOL, record_log: false }
    }
}

impl SolveConfig {
    pub fn with_limits(limits: Limits) -> Self {
        Self { limits, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    /// The open set emptied without finding a feasible point.
    Infeasible,
    NodeLimit,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLogEntry {
    pub node: usize,
    pub action: usize,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_visited: usize,
    pub lp_solves: usize,
    pub wall_time_s: f64,
    pub status: SolveStatus,
    pub incumbent: Option<Incumbent>,
    pub trace: DualBoundTrace,
    pub per_node_log: Option<Vec<NodeLogEntry>>,
}

/// One branching step as seen by an observer.
pub struct Expansion<'a> {
    pub inst: &'a MilpInstance,
    pub node: &'a BnbNode,
    pub decision: &'a BranchDecision,
    pub left: &'a BnbNode,
    pub right: &'a BnbNode,
    pub reward: Reward,
    pub global_bound: f64,
    pub t: f64,
}

/// Hooks into the search; every method defaults to doing nothing.
pub trait SolveObserver {
    fn on_expand(&mut self, _ev: &Expansion<'_>) {}
    fn on_prune(&mut self, _node: &BnbNode, _incumbent: f64) {}
    fn on_incumbent(&mut self, _node: &BnbNode, _objective: f64) {}
}

impl SolveObserver for () {}

pub fn bnb_solve<B: Brancher + ?Sized>(
    inst: &MilpInstance,
    brancher: &mut B,
    config: &SolveConfig,
    clock: &dyn Clock,
) -> Result<SolveStats, BnbError> {
    bnb_solve_observed(inst, brancher, config, clock, &mut ())
}

pub fn bnb_solve_observed<B: Brancher + ?Sized>(
    inst: &MilpInstance,
    brancher: &mut B,
    config: &SolveConfig,
    clock: &dyn Clock,
    observer: &mut dyn SolveObserver,
) -> Result<SolveStats, BnbError> {
    let iter_limit = config.iter_limit.unwrap_or_else(|| default_iter_limit(inst));
    let runner = LpRunner::new(inst, clock, iter_limit, config.int_tol);
    let limits = config.limits;

    let mut root = BnbNode::new(&runner, 0, None, 0, Vec::new(), f64::NEG_INFINITY);
    resolve_if_limited(&runner, &mut root)?;
    if root.lp.status == LpStatus::Unbounded {
        return Err(BnbError::SolveAborted("LP relaxation is unbounded".into()));
    }

    let mut trace = DualBoundTrace::new();
    trace.record(0.0, root.dual_bound);
    let mut nodes_visited = 1;
    let mut next_id = 1;
    let mut incumbent: Option<Incumbent> = None;
    let mut log = config.record_log.then(Vec::new);
    let mut open = OpenSet::new();
    open.push(root);

    let status = loop {
        if open.is_empty() {
            break if incumbent.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible };
        }
        if nodes_visited >= limits.node_limit {
            break SolveStatus::NodeLimit;
        }
        if clock.now() >= limits.time_limit_s {
            break SolveStatus::TimeLimit;
        }
        let mut node = select_next_node(&mut open).expect("open set is nonempty");
        let inc_obj = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);

        if node.dual_bound >= inc_obj - PRUNE_TOL || node.is_infeasible() {
            observer.on_prune(&node, inc_obj);
            record_bound(&mut trace, &open, &incumbent, clock);
            continue;
        }
        if node.lp.status == LpStatus::IterationLimit {
            // Requeue with the re-solved bound so best-bound order holds.
            resolve_if_limited(&runner, &mut node)?;
            open.push(node);
            continue;
        }

        if node.candidates.is_empty() {
            let x: Vec<f64> = node
                .lp
                .x
                .iter()
                .enumerate()
                .map(|(j, &v)| if inst.is_integer(j) { v.round() } else { v })
                .collect();
            let objective = inst.objective_value(&x);
            if objective < inc_obj {
                observer.on_incumbent(&node, objective);
                incumbent = Some(Incumbent { x, objective });
            }
            record_bound(&mut trace, &open, &incumbent, clock);
            continue;
        }

        let decision = brancher.select(&BranchContext { runner: &runner, node: &node })?;
        if !node.candidates.contains(&decision.var) {
            return Err(BranchError::NotACandidate(decision.var).into());
        }
        let (left, right) = apply_branch(&runner, &node, decision.var, next_id, next_id + 1);
        next_id += 2;
        nodes_visited += 2;
        let reward = local_reward(&node, &left, &right);
        if let Some(log) = log.as_mut() {
            log.push(NodeLogEntry { node: node.id, action: decision.var, reward: reward.value });
        }

        let inc_obj = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
        let mut global = inc_obj;
        for child in [&left, &right] {
            if !child.is_infeasible() {
                global = global.min(child.dual_bound);
            }
        }
        if let Some(b) = open.min_bound() {
            global = global.min(b);
        }
        observer.on_expand(&Expansion {
            inst,
            node: &node,
            decision: &decision,
            left: &left,
            right: &right,
            reward,
            global_bound: global,
            t: clock.now(),
        });
        for child in [left, right] {
            if child.is_infeasible() {
                observer.on_prune(&child, inc_obj);
            } else {
                open.push(child);
            }
        }
        record_bound(&mut trace, &open, &incumbent, clock);
    };

    Ok(SolveStats {
        nodes_visited,
        lp_solves: runner.solves(),
        wall_time_s: clock.now(),
        status,
        incumbent,
        trace,
        per_node_log: log,
    })
}

/// Re-solves a node whose LP hit the pivot limit once, with four times the
/// budget. A second failure aborts the solve.
fn resolve_if_limited(runner: &LpRunner<'_>, node: &mut BnbNode) -> Result<(), BnbError> {
    if node.lp.status != LpStatus::IterationLimit {
        return Ok(());
    }
    if node.retried {
        return Err(BnbError::SolveAborted(format!("node {} LP hit the pivot limit twice", node.id)));
    }
    node.retried = true;
    let lp = runner.solve_with_limit(&node.deltas, runner.iter_limit.saturating_mul(4));
    if lp.status == LpStatus::IterationLimit {
        return Err(BnbError::SolveAborted(format!("node {} LP hit the pivot limit twice", node.id)));
    }
    node.set_lp(lp, runner);
    Ok(())
}

fn record_bound(trace: &mut DualBoundTrace, open: &OpenSet, incumbent: &Option<Incumbent>, clock: &dyn Clock) {
    let inc = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective);
    let z = open.min_bound().map_or(inc, |b| b.min(inc));
    trace.record(clock.now(), z);
}
