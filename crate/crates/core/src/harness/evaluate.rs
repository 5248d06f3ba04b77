use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{StrategyConfig, StrategyKind};
use super::manifest::write_atomic;
use super::{load_checkpoint, load_instance, Experiment, HarnessError, Split, StageOutcome};
use crate::bnb::{bnb_solve, dual_integral_score, ClockKind, SolveConfig, SolveStats};
use crate::branching::{Brancher, FsbBrancher, MctsBrancher, PolicyBrancher, RandomBrancher};
use crate::gnn::GcnnParams;
use crate::milp::MilpInstance;
use crate::rng::derive_seed;

pub const CSV_HEADER: &str = "family,instance,strategy,seed,nodes,time_s,score,status";

/// One CSV line. Failed solves keep only their keys and status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub family: String,
    pub instance: String,
    pub strategy: String,
    pub seed: u64,
    pub nodes: Option<usize>,
    pub time_s: Option<f64>,
    pub score: Option<f64>,
    pub status: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation; 0 with fewer than two runs.
    pub std: f64,
}

impl MetricStats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, std })
    }
}

/// Aggregate of one (strategy, family) pair over instances and seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub strategy: String,
    pub family: String,
    pub runs: usize,
    pub failed: usize,
    pub nodes: Option<MetricStats>,
    pub time_s: Option<MetricStats>,
    pub score: Option<MetricStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutcome {
    pub stage: StageOutcome,
    pub rows: Vec<RunRow>,
    pub summary: Vec<SummaryCell>,
    pub csv: PathBuf,
    pub markdown: PathBuf,
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Rows in the order given, preceded by the clock stamp and the header.
pub fn write_csv(rows: &[RunRow], clock: ClockKind) -> String {
    let mut out = format!("# clock: {}\n{CSV_HEADER}\n", clock.label());
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.instance,
            r.strategy,
            r.seed,
            fmt_opt(&r.nodes),
            fmt_opt(&r.time_s),
            fmt_opt(&r.score),
            r.status
        );
    }
    out
}

pub fn parse_csv(text: &str) -> Result<(String, Vec<RunRow>), HarnessError> {
    let bad = |line: usize, msg: &str| HarnessError::Config { field: format!("csv line {line}"), message: msg.to_string() };
    let mut lines = text.lines().enumerate();
    let clock = match lines.next() {
        Some((_, l)) => l.strip_prefix("# clock: ").ok_or_else(|| bad(1, "missing clock stamp"))?.to_string(),
        None => return Err(bad(1, "empty file")),
    };
    match lines.next() {
        Some((_, l)) if l == CSV_HEADER => {}
        _ => return Err(bad(2, "unexpected header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(i + 1, "expected 8 fields"));
        }
        let opt_f64 = |s: &str| -> Result<Option<f64>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(i + 1, "bad number"))
            }
        };
        rows.push(RunRow {
            family: f[0].to_string(),
            instance: f[1].to_string(),
            strategy: f[2].to_string(),
            seed: f[3].parse().map_err(|_| bad(i + 1, "bad seed"))?,
            nodes: if f[4].is_empty() { None } else { Some(f[4].parse().map_err(|_| bad(i + 1, "bad nodes"))?) },
            time_s: opt_f64(f[5])?,
            score: opt_f64(f[6])?,
            status: f[7].to_string(),
        });
    }
    Ok((clock, rows))
}

/// Mean and spread per (strategy, family), in the given orders.
pub fn summarize(rows: &[RunRow], strategies: &[String], families: &[String]) -> Vec<SummaryCell> {
    let mut out = Vec::new();
    for s in strategies {
        for f in families {
            let cell: Vec<&RunRow> = rows.iter().filter(|r| &r.strategy == s && &r.family == f).collect();
            let ok: Vec<&RunRow> = cell.iter().copied().filter(|r| r.status != "failed").collect();
            let col = |g: fn(&RunRow) -> Option<f64>| MetricStats::of(&ok.iter().filter_map(|r| g(r)).collect::<Vec<_>>());
            out.push(SummaryCell {
                strategy: s.clone(),
                family: f.clone(),
                runs: cell.len(),
                failed: cell.len() - ok.len(),
                nodes: col(|r| r.nodes.map(|n| n as f64)),
                time_s: col(|r| r.time_s),
                score: col(|r| r.score),
            });
        }
    }
    out
}

/// Three tables (nodes, time, score) with strategies as rows and families
/// as columns. Cells read `mean (std)`; the last column counts failed runs.
pub fn markdown_tables(summary: &[SummaryCell], strategies: &[String], families: &[String], clock: ClockKind) -> String {
    let lookup: HashMap<(&str, &str), &SummaryCell> =
        summary.iter().map(|c| ((c.strategy.as_str(), c.family.as_str()), c)).collect();
    let mut out = format!("Clock: {}. Means over instances and seeds; std in parentheses.\n", clock.label());
    let metrics: [(&str, fn(&SummaryCell) -> Option<MetricStats>); 3] =
        [("Nodes", |c| c.nodes), ("Time (s)", |c| c.time_s), ("Score", |c| c.score)];
    for (title, get) in metrics {
        let _ = write!(out, "\n### {title}\n\n| strategy |");
        for f in families {
            let _ = write!(out, " {f} |");
        }
        out.push_str(" failed |\n|---|");
        out.push_str(&"---|".repeat(families.len() + 1));
        out.push('\n');
        for s in strategies {
            let _ = write!(out, "| {s} |");
            let mut failed = 0;
            for f in families {
                let cell = lookup.get(&(s.as_str(), f.as_str()));
                failed += cell.map_or(0, |c| c.failed);
                match cell.and_then(|c| get(c)) {
                    Some(m) => {
                        let _ = write!(out, " {} ({:.3}) |", fmt_mean(m.mean), m.std);
                    }
                    None => out.push_str(" - |"),
                }
            }
            let _ = writeln!(out, " {failed} |");
        }
    }
    out
}

/// Ten decimals, trailing zeros dropped: readable, and within 1e-9 of the
/// exact mean.
fn fmt_mean(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

enum Policy {
    None,
    Params(Arc<GcnnParams>),
}

fn brancher_for(
    strategy: &StrategyConfig,
    policy: &Policy,
    exp: &Experiment,
    seed: u64,
    instance_index: usize,
) -> Box<dyn Brancher> {
    match (strategy.kind, policy) {
        (StrategyKind::Random, _) => Box::new(RandomBrancher::new(derive_seed(seed, instance_index as u64))),
        (StrategyKind::Fsb, _) => Box::new(FsbBrancher),
        (StrategyKind::Policy, Policy::Params(p)) => Box::new(PolicyBrancher::greedy(p.clone())),
        (StrategyKind::PolicyMcts, Policy::Params(p)) => {
            let cfg = crate::train::MctsConfig { seed: derive_seed(seed, instance_index as u64), ..exp.config.training.mcts.search };
            Box::new(MctsBrancher::new(p.clone(), cfg))
        }
        _ => unreachable!("learned strategies carry parameters"),
    }
}

struct Cell<'a> {
    family: &'a str,
    instance: &'a MilpInstance,
    index: usize,
    strategy: usize,
    seed: u64,
}

pub(super) fn run(exp: &Experiment) -> Result<EvalOutcome, HarnessError> {
    let cfg = &exp.config;
    let test = exp.instance_paths(Split::Test);
    let mut inputs: Vec<PathBuf> = test.iter().map(|t| t.1.clone()).collect();
    let mut policies = Vec::new();
    for s in &cfg.strategies {
        match &s.checkpoint {
            Some(r) if matches!(s.kind, StrategyKind::Policy | StrategyKind::PolicyMcts) => {
                let path = exp.checkpoint_path(r);
                policies.push(Policy::Params(Arc::new(load_checkpoint(&path)?.params)));
                inputs.push(path);
            }
            _ => policies.push(Policy::None),
        }
    }
    let mut rows = Vec::new();
    let stage = exp.run_stage("evaluate", &inputs, || {
        let instances: Vec<MilpInstance> = test.iter().map(|(_, p)| load_instance(p)).collect::<Result<_, _>>()?;
        let mut cells = Vec::new();
        for (index, ((family, _), inst)) in test.iter().zip(&instances).enumerate() {
            for strategy in 0..cfg.strategies.len() {
                for &seed in &cfg.seeds {
                    cells.push(Cell { family, instance: inst, index, strategy, seed });
                }
            }
        }
        let solve = SolveConfig::with_limits(cfg.limits.solver_limits());
        let results: Vec<Result<SolveStats, String>> = cells
            .par_iter()
            .map(|c| {
                let mut b = brancher_for(&cfg.strategies[c.strategy], &policies[c.strategy], exp, c.seed, c.index);
                let clock = cfg.clock.make();
                bnb_solve(c.instance, &mut b, &solve, clock.as_ref()).map_err(|e| e.to_string())
            })
            .collect();

        // Reference optimum per instance: the best incumbent any run found,
        // else the best final dual bound.
        let mut reference: BTreeMap<usize, f64> = BTreeMap::new();
        for (c, r) in cells.iter().zip(&results) {
            if let Ok(st) = r {
                if let Some(inc) = &st.incumbent {
                    let e = reference.entry(c.index).or_insert(f64::INFINITY);
                    *e = e.min(inc.objective);
                }
            }
        }
        let mut fallback: BTreeMap<usize, f64> = BTreeMap::new();
        for (c, r) in cells.iter().zip(&results) {
            if let Ok(st) = r {
                if !reference.contains_key(&c.index) {
                    let z = st.trace.last_bound().unwrap_or(f64::NEG_INFINITY);
                    let e = fallback.entry(c.index).or_insert(f64::NEG_INFINITY);
                    *e = e.max(z);
                }
            }
        }
        reference.extend(fallback);

        let mut failures = Vec::new();
        for (c, r) in cells.iter().zip(results) {
            let strategy = cfg.strategies[c.strategy].label.clone();
            let row = match r {
                Ok(st) => RunRow {
                    family: c.family.to_string(),
                    instance: c.instance.name.clone(),
                    strategy,
                    seed: c.seed,
                    nodes: Some(st.nodes_visited),
                    time_s: Some(st.wall_time_s),
                    score: dual_integral_score(&st.trace, cfg.limits.score_t, reference[&c.index]).ok(),
                    status: status_label(&st),
                },
                Err(e) => {
                    failures.push(format!("{} / {strategy} / seed {}: {e}", c.instance.name, c.seed));
                    RunRow {
                        family: c.family.to_string(),
                        instance: c.instance.name.clone(),
                        strategy,
                        seed: c.seed,
                        nodes: None,
                        time_s: None,
                        score: None,
                        status: "failed".into(),
                    }
                }
            };
            rows.push(row);
        }
        rows.sort_by(|a, b| {
            (&a.family, &a.instance, &a.strategy, a.seed).cmp(&(&b.family, &b.instance, &b.strategy, b.seed))
        });
        let (strategies, families) = orders(exp);
        let summary = summarize(&rows, &strategies, &families);
        let csv = exp.dirs.csv();
        let md = exp.dirs.markdown();
        write_atomic(&csv, write_csv(&rows, cfg.clock).as_bytes())?;
        write_atomic(&md, markdown_tables(&summary, &strategies, &families, cfg.clock).as_bytes())?;
        Ok((vec![csv, md], serde_json::json!({ "runs": rows.len(), "failures": failures })))
    })?;
    if stage.skipped {
        let text = std::fs::read_to_string(exp.dirs.csv()).map_err(|e| super::manifest::io_err(&exp.dirs.csv(), e))?;
        rows = parse_csv(&text)?.1;
    }
    let (strategies, families) = orders(exp);
    let summary = summarize(&rows, &strategies, &families);
    Ok(EvalOutcome { stage, rows, summary, csv: exp.dirs.csv(), markdown: exp.dirs.markdown() })
}

fn orders(exp: &Experiment) -> (Vec<String>, Vec<String>) {
    (
        exp.config.strategies.iter().map(|s| s.label.clone()).collect(),
        exp.config.families.iter().map(|f| f.name.clone()).collect(),
    )
}

fn status_label(st: &SolveStats) -> String {
    match st.status {
        crate::bnb::SolveStatus::Optimal => "optimal",
        crate::bnb::SolveStatus::Infeasible => "infeasible",
        crate::bnb::SolveStatus::NodeLimit => "node_limit",
        crate::bnb::SolveStatus::TimeLimit => "time_limit",
    }
    .to_string()
}
