use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BnbNode, Expansion, SolveObserver};

/// One line of the per-expansion trajectory log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub node: usize,
    pub depth: usize,
    pub action: usize,
    pub reward: f64,
    /// Local dual bound of the expanded node.
    pub dual_bound: f64,
    pub t: f64,
    pub children: [usize; 2],
    /// Both children infeasible; the reward is the cap.
    #[serde(default)]
    pub excluded: bool,
}

impl TrajectoryRecord {
    pub fn from_expansion(ev: &Expansion<'_>) -> Self {
        Self {
            node: ev.node.id,
            depth: ev.node.depth,
            action: ev.decision.var,
            reward: ev.reward.value,
            dual_bound: ev.node.dual_bound,
            t: ev.t,
            children: [ev.left.id, ev.right.id],
            excluded: ev.reward.both_infeasible,
        }
    }
}

/// Observer that writes one JSON object per expansion.
pub struct TrajectoryLog<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> TrajectoryLog<W> {
    pub fn new(out: W) -> Self {
        Self { out, error: None }
    }

    /// Flushes and returns the writer, or the first write error.
    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> SolveObserver for TrajectoryLog<W> {
    fn on_expand(&mut self, ev: &Expansion<'_>) {
        if self.error.is_some() {
            return;
        }
        let rec = TrajectoryRecord::from_expansion(ev);
        let line = serde_json::to_string(&rec).expect("record serializes");
        if let Err(e) = writeln!(self.out, "{line}") {
            self.error = Some(e);
        }
    }

    fn on_prune(&mut self, _node: &BnbNode, _incumbent: f64) {}
}

pub fn read_trajectory_log(input: impl BufRead) -> io::Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(out)
}
