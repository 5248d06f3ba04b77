use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::targets::{normalize_targets, value_targets_from_tree, TreeRecord};
use super::TrainError;
use crate::bnb::{bnb_solve_observed, Expansion, FakeClock, Limits, SolveConfig, SolveObserver};
use crate::branching::FsbBrancher;
use crate::gnn::{extract_state, BipartiteState};
use crate::milp::MilpInstance;

pub const DATASET_SCHEMA: &str = "branchwise-sb-samples";
pub const DATASET_VERSION: u32 = 1;

/// One strong-branching expansion recorded for imitation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbSample {
    pub id: usize,
    pub instance: String,
    pub node: usize,
    pub state: BipartiteState,
    pub sb_scores: BTreeMap<usize, f64>,
    pub action: usize,
    pub reward: f64,
    /// Sample ids of the expanded children, when both were expanded.
    pub children_refs: Option<(usize, usize)>,
    pub is_leaf: bool,
    pub excluded: bool,
    /// State value normalized by `1 + |root bound|`.
    pub value_target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    /// Maximum expansions recorded per instance.
    pub node_cap: usize,
    pub gamma: f64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self { node_cap: 50, gamma: 0.99 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CollectReport {
    pub samples: Vec<SbSample>,
    /// Instances whose solve failed, with the reason.
    pub skipped: Vec<(String, String)>,
}

struct Recorder {
    steps: Vec<(TreeRecord, BipartiteState, BTreeMap<usize, f64>)>,
    root_bound: Option<f64>,
}

impl SolveObserver for Recorder {
    fn on_expand(&mut self, ev: &Expansion<'_>) {
        if self.root_bound.is_none() {
            self.root_bound = Some(ev.node.dual_bound);
        }
        let rec = TreeRecord {
            node: ev.node.id,
            action: ev.decision.var,
            reward: ev.reward.value,
            children: [ev.left.id, ev.right.id],
            excluded: ev.reward.both_infeasible,
        };
        let scores = ev.decision.aux.clone().unwrap_or_default();
        self.steps.push((rec, extract_state(ev.inst, ev.node), scores));
    }
}

fn collect_one(inst: &MilpInstance, config: &CollectConfig) -> Result<Vec<SbSample>, TrainError> {
    let mut rec = Recorder { steps: Vec::new(), root_bound: None };
    let solve = SolveConfig::with_limits(Limits {
        node_limit: 2 * config.node_cap + 1,
        time_limit_s: f64::INFINITY,
    });
    bnb_solve_observed(inst, &mut FsbBrancher, &solve, &FakeClock::new(), &mut rec)?;
    let records: Vec<TreeRecord> = rec.steps.iter().map(|s| s.0.clone()).collect();
    let mut values = value_targets_from_tree(&records, config.gamma)?;
    normalize_targets(&mut values, rec.root_bound.unwrap_or(0.0));
    let index: std::collections::HashMap<usize, usize> =
        records.iter().enumerate().map(|(i, r)| (r.node, i)).collect();
    Ok(rec
        .steps
        .into_iter()
        .map(|(r, state, sb_scores)| {
            let refs = (index.get(&r.children[0]).copied(), index.get(&r.children[1]).copied());
            SbSample {
                id: 0,
                instance: inst.name.clone(),
                node: r.node,
                state,
                sb_scores,
                action: r.action,
                reward: r.reward,
                children_refs: match refs {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                },
                is_leaf: refs.0.is_none() && refs.1.is_none(),
                excluded: r.excluded,
                value_target: values[&r.node],
            }
        })
        .collect())
}

/// Runs full strong branching on every instance (in parallel) and records
/// each expansion. Sample ids are global and follow instance order;
/// `children_refs` are rebased onto them.
pub fn collect_sb_data(instances: &[MilpInstance], config: &CollectConfig) -> CollectReport {
    let results: Vec<Result<Vec<SbSample>, TrainError>> =
        instances.par_iter().map(|inst| collect_one(inst, config)).collect();
    let mut report = CollectReport::default();
    for (inst, res) in instances.iter().zip(results) {
        match res {
            Ok(samples) => {
                let base = report.samples.len();
                for mut s in samples {
                    s.id = report.samples.len();
                    s.children_refs = s.children_refs.map(|(a, b)| (a + base, b + base));
                    report.samples.push(s);
                }
            }
            Err(e) => report.skipped.push((inst.name.clone(), e.to_string())),
        }
    }
    report
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
    count: usize,
}

pub fn write_dataset(samples: &[SbSample], mut out: impl Write) -> std::io::Result<()> {
    let header = Header { schema: DATASET_SCHEMA.into(), version: DATASET_VERSION, count: samples.len() };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for s in samples {
        writeln!(out, "{}", serde_json::to_string(s)?)?;
    }
    out.flush()
}

pub fn read_dataset(input: impl BufRead) -> Result<Vec<SbSample>, TrainError> {
    let mut lines = input.lines().enumerate();
    let io = |e: std::io::Error| TrainError::Io { path: "dataset".into(), message: e.to_string() };
    let (_, first) = lines.next().ok_or(TrainError::Schema { line: 1, message: "missing header".into() })?;
    let header: Header = serde_json::from_str(&first.map_err(io)?)
        .map_err(|e| TrainError::Schema { line: 1, message: e.to_string() })?;
    if header.schema != DATASET_SCHEMA || header.version != DATASET_VERSION {
        return Err(TrainError::Schema {
            line: 1,
            message: format!("unsupported dataset {} v{}", header.schema, header.version),
        });
    }
    let mut samples = Vec::with_capacity(header.count);
    for (i, line) in lines {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        samples.push(
            serde_json::from_str(&line).map_err(|e| TrainError::Schema { line: i + 1, message: e.to_string() })?,
        );
    }
    if samples.len() != header.count {
        return Err(TrainError::Schema {
            line: samples.len() + 1,
            message: format!("header promises {} samples, found {}", header.count, samples.len()),
        });
    }
    Ok(samples)
}
