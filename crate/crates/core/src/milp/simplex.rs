//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row `A_i x <= b_i` gets a slack `s_i >= 0`. Rows whose slack would
//! start negative get an artificial column instead and phase 1 minimizes the
//! sum of artificials. Pricing uses Devex reference weights (largest
//! `d_j^2 / w_j`) until the number of degenerate pivots exceeds `3 (n + m)`,
//! after which Bland's smallest-index rule is used for the remainder of the
//! solve, which rules out cycling.

use serde::{Deserialize, Serialize};

use super::instance::{apply_deltas, BoundDelta, MilpInstance};

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-6;
/// Minimum magnitude of a usable pivot element.
pub const PIVOT_TOL: f64 = 1e-9;
/// Reduced-cost threshold for an improving column.
pub const OPT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Result of one LP relaxation solve. `x`, `objective` and `duals` are only
/// meaningful when `status` is `Optimal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn empty(status: LpStatus, n: usize, m: usize, iterations: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: match status {
                LpStatus::Infeasible => f64::INFINITY,
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::NAN,
            },
            duals: vec![0.0; m],
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// A pivot budget that comfortably covers desk-scale instances.
pub fn default_iter_limit(inst: &MilpInstance) -> usize {
    20 * (inst.num_vars + inst.num_cons) + 1000
}

/// Solves the LP relaxation of `inst` with its bounds tightened by `deltas`.
pub fn lp_relax_solve(inst: &MilpInstance, deltas: &[BoundDelta], iter_limit: usize) -> LpSolution {
    let (lower, upper) = apply_deltas(inst, deltas);
    solve_with_bounds(inst, &lower, &upper, iter_limit)
}

/// Solves the LP relaxation of `inst` with explicit variable bounds.
pub fn solve_with_bounds(
    inst: &MilpInstance,
    lower: &[f64],
    upper: &[f64],
    iter_limit: usize,
) -> LpSolution {
    let n = inst.num_vars;
    let m = inst.num_cons;
    let lo = lower.to_vec();
    let mut up = upper.to_vec();
    for j in 0..n {
        if lo[j] > up[j] {
            if lo[j] - up[j] > FEAS_TOL {
                return LpSolution::empty(LpStatus::Infeasible, n, m, 0);
            }
            up[j] = lo[j];
        }
    }
    Tableau::build(inst, lo, up, iter_limit).run(inst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
    Free,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
    Continue,
}

struct Tableau {
    n: usize,
    m: usize,
    nc: usize,
    /// `m x nc` row-major, equal to `B^-1 [A | I | art]`.
    t: Vec<f64>,
    /// Reduced costs of every column under the current phase costs.
    d: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    b: Vec<f64>,
    /// Row the artificial column was created for, indexed by `col - n - m`.
    art_rows: Vec<usize>,
    iterations: usize,
    limit: usize,
    degenerate: usize,
    bland: bool,
    pivot_row: Vec<f64>,
    nz: Vec<usize>,
    /// Devex reference weights.
    weights: Vec<f64>,
}

impl Tableau {
    fn build(inst: &MilpInstance, lo: Vec<f64>, up: Vec<f64>, limit: usize) -> Self {
        let n = inst.num_vars;
        let m = inst.num_cons;

        let mut x = vec![0.0; n + m];
        let mut state = vec![ColState::Lower; n + m];
        for j in 0..n {
            if lo[j].is_finite() {
                x[j] = lo[j];
            } else if up[j].is_finite() {
                x[j] = up[j];
                state[j] = ColState::Upper;
            } else {
                state[j] = ColState::Free;
            }
        }
        let mut residual = inst.rhs.clone();
        for &(r, c, v) in &inst.entries {
            residual[r] -= v * x[c];
        }
        let art_rows: Vec<usize> = (0..m).filter(|&i| residual[i] < 0.0).collect();
        let nc = n + m + art_rows.len();

        let mut t = vec![0.0; m * nc];
        for &(r, c, v) in &inst.entries {
            t[r * nc + c] = v;
        }
        for i in 0..m {
            t[i * nc + n + i] = 1.0;
        }
        let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        let mut lo_all = lo;
        let mut up_all = up;
        lo_all.extend(std::iter::repeat_n(0.0, m + art_rows.len()));
        up_all.extend(std::iter::repeat_n(f64::INFINITY, m + art_rows.len()));
        x.extend(std::iter::repeat_n(0.0, art_rows.len()));
        state.extend(std::iter::repeat_n(ColState::Lower, art_rows.len()));

        for i in 0..m {
            x[n + i] = residual[i].max(0.0);
        }
        for (k, &i) in art_rows.iter().enumerate() {
            let col = n + m + k;
            // Row becomes -(A_i x + s_i - a) = -b_i with the artificial basic.
            let row = &mut t[i * nc..(i + 1) * nc];
            for v in row.iter_mut() {
                *v = -*v;
            }
            row[col] = 1.0;
            basis[i] = col;
            x[col] = -residual[i];
            state[n + i] = ColState::Lower;
        }
        for &b in &basis {
            state[b] = ColState::Basic;
        }

        let mut cost = vec![0.0; nc];
        for c in cost.iter_mut().skip(n + m) {
            *c = 1.0;
        }

        let mut tab = Self {
            n,
            m,
            nc,
            t,
            d: vec![0.0; nc],
            cost,
            lo: lo_all,
            up: up_all,
            x,
            state,
            basis,
            b: inst.rhs.clone(),
            art_rows,
            iterations: 0,
            limit,
            degenerate: 0,
            bland: false,
            pivot_row: vec![0.0; nc],
            nz: Vec::with_capacity(nc),
            weights: vec![1.0; nc],
        };
        tab.recompute_reduced_costs();
        tab
    }

    fn run(mut self, inst: &MilpInstance) -> LpSolution {
        let (n, m) = (self.n, self.m);
        if !self.art_rows.is_empty() {
            match self.iterate() {
                Step::Limit => return LpSolution::empty(LpStatus::IterationLimit, n, m, self.iterations),
                // Phase 1 is bounded below by zero; an unbounded ray is numerical noise.
                Step::Unbounded => return LpSolution::empty(LpStatus::Infeasible, n, m, self.iterations),
                _ => {}
            }
            self.recompute_basic_values();
            let infeas: f64 = (n + m..self.nc).map(|j| self.x[j].max(0.0)).sum();
            if infeas > FEAS_TOL {
                return LpSolution::empty(LpStatus::Infeasible, n, m, self.iterations);
            }
            self.drop_artificials();
            for j in 0..self.nc {
                self.cost[j] = if j < n { inst.objective[j] } else { 0.0 };
            }
            self.recompute_reduced_costs();
        } else {
            for j in 0..n {
                self.cost[j] = inst.objective[j];
            }
            self.recompute_reduced_costs();
        }

        match self.iterate() {
            Step::Limit => return LpSolution::empty(LpStatus::IterationLimit, n, m, self.iterations),
            Step::Unbounded => return LpSolution::empty(LpStatus::Unbounded, n, m, self.iterations),
            _ => {}
        }
        self.recompute_basic_values();

        let x: Vec<f64> = self.x[..n].to_vec();
        let duals: Vec<f64> = (0..m).map(|i| -self.d[n + i]).collect();
        LpSolution {
            status: LpStatus::Optimal,
            objective: inst.objective_value(&x),
            x,
            duals,
            iterations: self.iterations,
        }
    }

    fn recompute_reduced_costs(&mut self) {
        let nc = self.nc;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * nc..(i + 1) * nc];
                for (d, &a) in self.d.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// `x_B = B^-1 b - B^-1 N x_N`, reading `B^-1` off the slack block of the
    /// tableau. Removes drift accumulated by incremental updates.
    fn recompute_basic_values(&mut self) {
        let (n, m, nc) = (self.n, self.m, self.nc);
        for i in 0..m {
            let row = &self.t[i * nc..(i + 1) * nc];
            let mut v: f64 = (0..m).map(|k| row[n + k] * self.b[k]).sum();
            for j in 0..nc {
                if self.state[j] != ColState::Basic && self.x[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn drop_artificials(&mut self) {
        let (n, m) = (self.n, self.m);
        let keep: Vec<usize> = (0..self.nc)
            .filter(|&j| j < n + m || self.state[j] == ColState::Basic)
            .collect();
        if keep.len() == self.nc {
            for j in n + m..self.nc {
                self.lo[j] = 0.0;
                self.up[j] = 0.0;
            }
            return;
        }
        let new_nc = keep.len();
        let mut t = vec![0.0; self.m * new_nc];
        for i in 0..self.m {
            for (k, &j) in keep.iter().enumerate() {
                t[i * new_nc + k] = self.t[i * self.nc + j];
            }
        }
        let mut remap = vec![usize::MAX; self.nc];
        for (k, &j) in keep.iter().enumerate() {
            remap[j] = k;
        }
        for b in self.basis.iter_mut() {
            *b = remap[*b];
        }
        let pick = |v: &[f64]| keep.iter().map(|&j| v[j]).collect::<Vec<f64>>();
        self.lo = pick(&self.lo);
        self.up = pick(&self.up);
        self.x = pick(&self.x);
        self.cost = pick(&self.cost);
        self.state = keep.iter().map(|&j| self.state[j]).collect();
        self.art_rows = keep[n + m..].iter().map(|&j| self.art_rows[j - n - m]).collect();
        for j in n + m..new_nc {
            self.lo[j] = 0.0;
            self.up[j] = 0.0;
        }
        self.t = t;
        self.nc = new_nc;
        self.d = vec![0.0; new_nc];
        self.weights = vec![1.0; new_nc];
        self.pivot_row = vec![0.0; new_nc];
    }

    fn iterate(&mut self) -> Step {
        loop {
            if self.iterations >= self.limit {
                return Step::Limit;
            }
            match self.step() {
                Step::Continue => {}
                other => return other,
            }
        }
    }

    fn price(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_mag = 0.0;
        for j in 0..self.nc {
            let dj = self.d[j];
            let dir = match self.state[j] {
                ColState::Basic => continue,
                _ if self.lo[j] == self.up[j] => continue,
                ColState::Lower if dj < -OPT_TOL => 1.0,
                ColState::Upper if dj > OPT_TOL => -1.0,
                ColState::Free if dj.abs() > OPT_TOL => -dj.signum(),
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            let score = dj * dj / self.weights[j];
            if score > best_mag {
                best_mag = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn step(&mut self) -> Step {
        let Some((q, dir)) = self.price() else {
            return Step::Optimal;
        };
        let nc = self.nc;

        let mut theta = self.up[q] - self.lo[q];
        if !theta.is_finite() {
            theta = f64::INFINITY;
        }
        let mut leave: Option<(usize, f64, bool)> = None;
        for i in 0..self.m {
            let alpha = self.t[i * nc + q];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[i];
            let rate = dir * alpha;
            let (ratio, to_upper) = if rate > 0.0 {
                if !self.lo[b].is_finite() {
                    continue;
                }
                (((self.x[b] - self.lo[b]) / rate).max(0.0), false)
            } else {
                if !self.up[b].is_finite() {
                    continue;
                }
                (((self.up[b] - self.x[b]) / -rate).max(0.0), true)
            };
            let better = match leave {
                None => ratio < theta,
                Some((r, best, _)) => {
                    if ratio < best - 1e-12 {
                        true
                    } else if ratio <= best + 1e-12 {
                        if self.bland {
                            b < self.basis[r]
                        } else {
                            alpha.abs() > self.t[r * nc + q].abs()
                        }
                    } else {
                        false
                    }
                }
            };
            if better {
                leave = Some((i, ratio, to_upper));
            }
        }
        if let Some((_, ratio, _)) = leave {
            if ratio >= theta {
                leave = None;
            } else {
                theta = ratio;
            }
        }
        if !theta.is_finite() {
            return Step::Unbounded;
        }

        self.iterations += 1;
        if theta <= 1e-12 {
            self.degenerate += 1;
            if self.degenerate > 3 * (self.n + self.m) {
                self.bland = true;
            }
        }

        let step = dir * theta;
        if step != 0.0 {
            for i in 0..self.m {
                let alpha = self.t[i * nc + q];
                if alpha != 0.0 {
                    self.x[self.basis[i]] -= step * alpha;
                }
            }
        }

        match leave {
            None => {
                // Bound flip: the entering column runs into its own opposite bound.
                if dir > 0.0 {
                    self.x[q] = self.up[q];
                    self.state[q] = ColState::Upper;
                } else {
                    self.x[q] = self.lo[q];
                    self.state[q] = ColState::Lower;
                }
            }
            Some((r, _, to_upper)) => {
                let out = self.basis[r];
                self.x[q] += step;
                if to_upper {
                    self.x[out] = self.up[out];
                    self.state[out] = ColState::Upper;
                } else {
                    self.x[out] = self.lo[out];
                    self.state[out] = ColState::Lower;
                }
                self.pivot(r, q);
                self.basis[r] = q;
                self.state[q] = ColState::Basic;
            }
        }
        Step::Continue
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.nc;
        let inv = 1.0 / self.t[r * nc + q];
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
            self.pivot_row.copy_from_slice(row);
        }
        self.nz.clear();
        for (k, &v) in self.pivot_row.iter().enumerate() {
            if v != 0.0 {
                self.nz.push(k);
            }
        }
        let wq = self.weights[q].max(1.0);
        for &k in &self.nz {
            let cand = self.pivot_row[k] * self.pivot_row[k] * wq;
            if cand > self.weights[k] {
                self.weights[k] = cand;
            }
        }
        let sparse = self.nz.len() * 3 < nc;
        let prow = &self.pivot_row;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let row = &mut self.t[i * nc..(i + 1) * nc];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            if sparse {
                for &k in &self.nz {
                    row[k] -= f * prow[k];
                }
            } else {
                for (v, &p) in row.iter_mut().zip(prow) {
                    *v -= f * p;
                }
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &k in &self.nz {
                self.d[k] -= f * prow[k];
            }
            self.d[q] = 0.0;
        }
    }
}
