use rand::Rng;

use crate::milp::{RawMilp, RowSense, Sense};
use crate::rng::SolverRng;

/// Maximum independent set on a Barabasi-Albert graph: a clique on the
/// first `affinity` nodes, then every new node attaches to `affinity`
/// distinct existing nodes chosen proportionally to degree.
pub(super) fn generate(rng: &mut SolverRng, nodes: usize, affinity: usize) -> RawMilp {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut degree = vec![0usize; nodes];
    for u in 0..affinity {
        for v in u + 1..affinity {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    for new in affinity..nodes {
        let mut targets: Vec<usize> = Vec::with_capacity(affinity);
        while targets.len() < affinity {
            let total: usize = (0..new).filter(|v| !targets.contains(v)).map(|v| degree[v]).sum();
            let pick = if total == 0 {
                let free: Vec<usize> = (0..new).filter(|v| !targets.contains(v)).collect();
                free[rng.gen_range(0..free.len())]
            } else {
                let mut r = rng.gen_range(0..total);
                let mut chosen = 0;
                for v in (0..new).filter(|v| !targets.contains(v)) {
                    if r < degree[v] {
                        chosen = v;
                        break;
                    }
                    r -= degree[v];
                }
                chosen
            };
            targets.push(pick);
        }
        targets.sort_unstable();
        for &t in &targets {
            edges.push((t, new));
            degree[t] += 1;
            degree[new] += 1;
        }
    }

    let mut raw = RawMilp::new("indset", Sense::Maximize, vec![1.0; nodes]);
    for (u, v) in edges {
        raw = raw.row(vec![(u, 1.0), (v, 1.0)], RowSense::Le, 1.0);
    }
    for v in 0..nodes {
        raw = raw.bounds(v, 0.0, 1.0).integer(v);
    }
    raw
}
