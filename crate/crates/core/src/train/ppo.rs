use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::imitation::batch_gradient;
use super::losses::{ppo_terms, PpoHyper};
use super::targets::{normalize_targets, value_targets_from_tree, TreeRecord};
use super::TrainError;
use crate::bnb::{bnb_solve_observed, Expansion, FakeClock, Limits, SolveConfig, SolveObserver};
use crate::branching::PolicyBrancher;
use crate::gnn::{adam_step, extract_state, gcnn_forward, AdamConfig, AdamState, BipartiteState, GcnnParams};
use crate::milp::MilpInstance;
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub record: TreeRecord,
    pub state: BipartiteState,
    /// Probability the rollout policy gave the taken action.
    pub pi_old: f64,
}

/// Expansions of one policy rollout, in expansion order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub instance: String,
    pub root_bound: f64,
    pub steps: Vec<TrajectoryStep>,
}

#[derive(Default)]
struct Rollout {
    steps: Vec<TrajectoryStep>,
    root_bound: Option<f64>,
}

impl SolveObserver for Rollout {
    fn on_expand(&mut self, ev: &Expansion<'_>) {
        if self.root_bound.is_none() {
            self.root_bound = Some(ev.node.dual_bound);
        }
        let pi_old = ev
            .decision
            .aux
            .as_ref()
            .and_then(|a| a.get(&ev.decision.var).copied())
            .unwrap_or(f64::NAN);
        self.steps.push(TrajectoryStep {
            record: TreeRecord {
                node: ev.node.id,
                action: ev.decision.var,
                reward: ev.reward.value,
                children: [ev.left.id, ev.right.id],
                excluded: ev.reward.both_infeasible,
            },
            state: extract_state(ev.inst, ev.node),
            pi_old,
        });
    }
}

/// One sampled rollout of the policy per instance, at most `node_cap`
/// expansions each. Instances run in parallel against the same snapshot.
pub fn collect_trajectories(
    instances: &[MilpInstance],
    params: &GcnnParams,
    node_cap: usize,
    seed: u64,
) -> Result<Vec<Trajectory>, TrainError> {
    let snapshot = Arc::new(params.clone());
    instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            let mut brancher = PolicyBrancher::sampling(snapshot.clone(), derive_seed(seed, i as u64));
            let mut obs = Rollout::default();
            let config =
                SolveConfig::with_limits(Limits { node_limit: 2 * node_cap + 1, time_limit_s: f64::INFINITY });
            bnb_solve_observed(inst, &mut brancher, &config, &FakeClock::new(), &mut obs)?;
            Ok(Trajectory { instance: inst.name.clone(), root_bound: obs.root_bound.unwrap_or(0.0), steps: obs.steps })
        })
        .collect()
}

/// A training sample for the clipped objective. `advantage` is the value
/// target minus the snapshot's value estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoSample {
    pub state: BipartiteState,
    pub action: usize,
    pub pi_old: f64,
    pub advantage: f64,
    pub target: f64,
}

/// Turns rollouts into samples: normalized value targets from each tree,
/// advantages against `params_old`.
pub fn ppo_samples(trajectories: &[Trajectory], params_old: &GcnnParams, gamma: f64) -> Result<Vec<PpoSample>, TrainError> {
    let mut out = Vec::new();
    for traj in trajectories {
        let records: Vec<TreeRecord> = traj.steps.iter().map(|s| s.record.clone()).collect();
        let mut values = value_targets_from_tree(&records, gamma)?;
        normalize_targets(&mut values, traj.root_bound);
        for step in &traj.steps {
            if step.record.excluded {
                continue;
            }
            let target = values[&step.record.node];
            let (pi, v, _) = gcnn_forward(&step.state, params_old)?;
            let pi_old = if step.pi_old.is_finite() { step.pi_old } else { pi[step.record.action] };
            out.push(PpoSample {
                state: step.state.clone(),
                action: step.record.action,
                pi_old,
                advantage: target - v,
                target,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub hyper: PpoHyper,
    pub gamma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            hyper: PpoHyper::default(),
            gamma: 0.99,
            epochs: 4,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoReport {
    /// Mean objective over each epoch's minibatches.
    pub objective: Vec<f64>,
    pub samples: usize,
}

/// Gradient ascent on the mean clipped objective. On a non-finite loss or
/// parameter the update is abandoned and the caller keeps `params`.
pub fn ppo_update(samples: &[PpoSample], params: &GcnnParams, config: &PpoConfig) -> Result<(GcnnParams, PpoReport), TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut theta = params.clone();
    let mut adam = AdamState::new(theta.len());
    let mut rng = seeded(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            let (grad, objective) = batch_gradient(
                &theta,
                batch,
                |i| &samples[i].state,
                |i, pi, v| {
                    let s = &samples[i];
                    let mut t = ppo_terms(pi, &s.state.mask, v, s.action, s.pi_old, s.advantage, s.target, &config.hyper);
                    // Adam descends, so hand it the negated objective.
                    t.dpi.iter_mut().for_each(|d| *d = -*d);
                    t.dv = -t.dv;
                    t
                },
            )?;
            sum += objective * batch.len() as f64;
            adam_step(&mut theta.data, &grad.data, &mut adam, &config.adam);
            if !theta.is_finite() {
                return Err(TrainError::NumericalDivergence);
            }
        }
        curve.push(sum / samples.len() as f64);
    }
    Ok((theta, PpoReport { objective: curve, samples: samples.len() }))
}
