use serde::{Deserialize, Serialize};

use crate::bnb::BnbNode;
use crate::milp::{apply_deltas, LpSolution, MilpInstance};

pub const D_X: usize = 8;
pub const D_C: usize = 4;
pub const D_E: usize = 1;

/// Variable feature slots.
pub mod var_feat {
    pub const COST: usize = 0;
    pub const HAS_LB: usize = 1;
    pub const HAS_UB: usize = 2;
    pub const IS_INT: usize = 3;
    pub const VALUE: usize = 4;
    pub const FRAC: usize = 5;
    pub const AT_LB: usize = 6;
    pub const AT_UB: usize = 7;
}

const CLIP: f64 = 10.0;
const AT_BOUND_TOL: f64 = 1e-6;

/// Variables and constraints of a node as a bipartite graph.
///
/// `x` and `c` are row-major feature matrices; `edges` holds
/// `(row, col, feature)` for every nonzero of `A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BipartiteState {
    pub n: usize,
    pub m: usize,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
    pub mask: Vec<bool>,
}

impl BipartiteState {
    pub fn var(&self, q: usize) -> &[f64] {
        &self.x[q * D_X..(q + 1) * D_X]
    }

    pub fn var_mut(&mut self, q: usize) -> &mut [f64] {
        &mut self.x[q * D_X..(q + 1) * D_X]
    }

    pub fn con(&self, p: usize) -> &[f64] {
        &self.c[p * D_C..(p + 1) * D_C]
    }

    /// Masked variables in ascending order.
    pub fn candidates(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.mask[q]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.c).all(|v| v.is_finite())
            && self.edges.iter().all(|e| e.2.is_finite())
    }
}

/// Features of a B&B node, using its local bounds and LP solution.
pub fn extract_state(inst: &MilpInstance, node: &BnbNode) -> BipartiteState {
    let (lower, upper) = apply_deltas(inst, &node.deltas);
    extract_state_from(inst, &lower, &upper, &node.lp, &node.candidates)
}

pub fn extract_state_from(
    inst: &MilpInstance,
    lower: &[f64],
    upper: &[f64],
    lp: &LpSolution,
    candidates: &[usize],
) -> BipartiteState {
    let n = inst.num_vars;
    let m = inst.num_cons;
    let c_norm = inst.objective.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut is_int = vec![false; n];
    for &j in &inst.integers {
        is_int[j] = true;
    }
    let flag = |b: bool| if b { 1.0 } else { 0.0 };

    let mut x = Vec::with_capacity(n * D_X);
    for q in 0..n {
        let v = lp.x[q];
        x.extend_from_slice(&[
            inst.objective[q] / (1.0 + c_norm),
            flag(lower[q].is_finite()),
            flag(upper[q].is_finite()),
            flag(is_int[q]),
            v.clamp(-CLIP, CLIP),
            (v - v.round()).abs(),
            flag(lower[q].is_finite() && (v - lower[q]).abs() <= AT_BOUND_TOL),
            flag(upper[q].is_finite() && (v - upper[q]).abs() <= AT_BOUND_TOL),
        ]);
    }

    let mut row_norm = vec![0.0; m];
    let mut row_dot_c = vec![0.0; m];
    let mut row_act = vec![0.0; m];
    for &(r, q, a) in &inst.entries {
        row_norm[r] += a * a;
        row_dot_c[r] += a * inst.objective[q];
        row_act[r] += a * lp.x[q];
    }
    for v in &mut row_norm {
        *v = v.sqrt();
    }
    let mut c = Vec::with_capacity(m * D_C);
    for p in 0..m {
        let b = inst.rhs[p];
        let cosine = if row_norm[p] > 0.0 && c_norm > 0.0 {
            row_dot_c[p] / (row_norm[p] * c_norm)
        } else {
            0.0
        };
        c.extend_from_slice(&[
            b / (1.0 + row_norm[p]),
            ((b - row_act[p]) / (1.0 + b.abs())).clamp(-CLIP, CLIP),
            lp.duals.get(p).copied().unwrap_or(0.0).clamp(-CLIP, CLIP),
            cosine,
        ]);
    }

    let edges = inst
        .entries
        .iter()
        .map(|&(r, q, a)| (r, q, a / (1.0 + row_norm[r])))
        .collect();
    let mut mask = vec![false; n];
    for &j in candidates {
        mask[j] = true;
    }
    BipartiteState { n, m, x, c, edges, mask }
}
