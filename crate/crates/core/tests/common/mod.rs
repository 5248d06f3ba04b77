#![allow(dead_code)]

use branchwise::milp::{normalize_instance, MilpInstance, RawMilp, RowSense, Sense};
use branchwise::rng::seeded;
use rand::Rng;

/// Small pure-integer MILP with integer data and finite bounds, feasible at
/// the origin-shifted point `x = lower`.
pub fn tiny_integer_milp(seed: u64) -> MilpInstance {
    let mut rng = seeded(seed);
    let n = rng.gen_range(2..=6);
    let m = rng.gen_range(1..=4);
    let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
    let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-9..=9) as f64).collect();
    let mut raw = RawMilp::new(format!("tiny-{seed}"), sense, obj);
    for j in 0..n {
        raw = raw.bounds(j, 0.0, rng.gen_range(1..=3) as f64).integer(j);
    }
    for _ in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| rng.gen_bool(0.7).then(|| (j, rng.gen_range(-5..=7) as f64)))
            .filter(|&(_, a)| a != 0.0)
            .collect();
        if coeffs.is_empty() {
            continue;
        }
        let (row_sense, rhs) = match rng.gen_range(0..3) {
            0 => (RowSense::Le, rng.gen_range(0..=12) as f64),
            1 => (RowSense::Ge, rng.gen_range(-6..=3) as f64),
            _ => (RowSense::Le, rng.gen_range(2..=9) as f64 + 0.5),
        };
        raw = raw.row(coeffs, row_sense, rhs);
    }
    normalize_instance(&raw).expect("valid tiny instance")
}

/// Tiny MILP mixing integer and continuous variables with fractional data.
pub fn tiny_mixed_milp(seed: u64) -> MilpInstance {
    let mut rng = seeded(seed ^ 0xabcdef);
    let ni = rng.gen_range(2..=5);
    let nc = rng.gen_range(1..=2);
    let n = ni + nc;
    let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut raw = RawMilp::new(format!("mixed-{seed}"), Sense::Minimize, obj);
    for j in 0..n {
        raw = raw.bounds(j, 0.0, rng.gen_range(1..=3) as f64);
        if j < ni {
            raw = raw.integer(j);
        }
    }
    for _ in 0..rng.gen_range(1..=4) {
        let coeffs: Vec<(usize, f64)> = (0..n)
            .filter_map(|j| rng.gen_bool(0.7).then(|| (j, rng.gen_range(-3.0..4.0))))
            .collect();
        if coeffs.is_empty() {
            continue;
        }
        raw = raw.row(coeffs, RowSense::Le, rng.gen_range(0.5..6.0));
    }
    normalize_instance(&raw).expect("valid mixed instance")
}

/// The same problem with old variable `j` renamed to `perm[j]`.
pub fn permute_columns(inst: &MilpInstance, perm: &[usize]) -> MilpInstance {
    let n = inst.num_vars;
    let mut objective = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for j in 0..n {
        objective[perm[j]] = inst.objective[j];
        lower[perm[j]] = inst.lower[j];
        upper[perm[j]] = inst.upper[j];
    }
    let entries = inst.entries.iter().map(|&(r, c, v)| (r, perm[c], v)).collect();
    let mut integers: Vec<usize> = inst.integers.iter().map(|&j| perm[j]).collect();
    integers.sort_unstable();
    MilpInstance::new(&inst.name, objective, entries, inst.rhs.clone(), lower, upper, integers)
        .expect("permutation preserves validity")
}

/// Random bipartite state with every feature drawn at random and at least
/// one masked variable.
pub fn random_state(seed: u64, n: usize, m: usize) -> branchwise::gnn::BipartiteState {
    use branchwise::gnn::{BipartiteState, D_C, D_X};
    let mut rng = seeded(seed);
    let x = (0..n * D_X).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let c = (0..m * D_C).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let mut edges = Vec::new();
    for r in 0..m {
        for q in 0..n {
            if rng.gen_bool(0.5) {
                edges.push((r, q, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
    let k = rng.gen_range(0..n);
    mask[k] = true;
    BipartiteState { n, m, x, c, edges, mask }
}

/// Glorot weights plus small random biases, so rectifiers are mixed.
pub fn random_params(seed: u64, h: usize) -> branchwise::gnn::GcnnParams {
    let mut p = branchwise::gnn::GcnnParams::init(h, seed);
    let mut rng = seeded(seed ^ 0x5eed);
    for (_, d) in p.layout.named() {
        for v in &mut p.data[d.b..d.b + d.out] {
            *v = rng.gen_range(-0.3..0.3);
        }
    }
    p
}

/// Largest relative error between the analytic gradient of a per-sample
/// objective and central differences, skipping parameters whose
/// perturbation changes the rectifier pattern. Returns
/// `(max error, checked, total)`.
pub fn fd_check(
    state: &branchwise::gnn::BipartiteState,
    params: &branchwise::gnn::GcnnParams,
    loss: impl Fn(&[f64], f64) -> branchwise::train::LossTerms,
) -> (f64, usize, usize) {
    use branchwise::gnn::{forward_trace, gcnn_backward};
    const STEP: f64 = 1e-4;
    let trace = forward_trace(state, params).unwrap();
    let pattern = trace.activation_pattern();
    let terms = loss(&trace.pi, trace.value);
    let grad = gcnn_backward(params, &trace, &terms.dpi, terms.dv).unwrap();
    let eval = |p: &branchwise::gnn::GcnnParams| {
        let t = forward_trace(state, p).unwrap();
        (loss(&t.pi, t.value).total, t.activation_pattern())
    };
    let mut p = params.clone();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..p.len() {
        let orig = p.data[i];
        p.data[i] = orig + STEP;
        let (fp, pp) = eval(&p);
        p.data[i] = orig - STEP;
        let (fm, pm) = eval(&p);
        p.data[i] = orig;
        if pp != pattern || pm != pattern {
            continue;
        }
        let fd = (fp - fm) / (2.0 * STEP);
        let a = grad.data[i];
        worst = worst.max((a - fd).abs() / 1f64.max(a.abs()).max(fd.abs()));
        checked += 1;
    }
    (worst, checked, p.len())
}

/// Hand-set evaluator over toy states: fixed logits per variable and a
/// value that adds a weight for every variable flagged at a bound.
pub struct ToyEvaluator {
    pub logits: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl ToyEvaluator {
    pub fn random(seed: u64, n: usize) -> Self {
        let mut rng = seeded(seed);
        Self {
            logits: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            left: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
            right: (0..n).map(|_| rng.gen_range(0.0..1.0)).collect(),
        }
    }

    pub fn value(&self, s: &branchwise::gnn::BipartiteState) -> f64 {
        use branchwise::gnn::var_feat;
        (0..s.n)
            .map(|q| {
                let f = s.var(q);
                f[var_feat::AT_LB] * self.left[q] + f[var_feat::AT_UB] * self.right[q]
            })
            .sum()
    }
}

impl branchwise::train::Evaluator for ToyEvaluator {
    fn evaluate(
        &self,
        s: &branchwise::gnn::BipartiteState,
    ) -> Result<(Vec<f64>, f64), branchwise::gnn::GnnError> {
        let pi = branchwise::gnn::masked_softmax(&self.logits, &s.mask)?;
        Ok((pi, self.value(s)))
    }
}

/// Toy state with `n` fractional candidates, no bound flags set, and no
/// constraints.
pub fn toy_state(n: usize) -> branchwise::gnn::BipartiteState {
    use branchwise::gnn::{var_feat, BipartiteState, D_X};
    let mut x = vec![0.0; n * D_X];
    for q in 0..n {
        x[q * D_X + var_feat::VALUE] = 0.5 + q as f64;
        x[q * D_X + var_feat::FRAC] = 0.5;
    }
    BipartiteState { n, m: 0, x, c: vec![], edges: vec![], mask: vec![true; n] }
}

/// Exact best root action of the depth-limited simulated tree, with the
/// same top-k restriction the search uses. Values of states without
/// candidates are 0.
pub fn expectimax_best(
    eval: &ToyEvaluator,
    root: &branchwise::gnn::BipartiteState,
    k: usize,
    depth: usize,
    gamma: f64,
) -> (usize, Vec<(usize, f64)>) {
    use branchwise::train::{simulate_transition, Evaluator, Side};
    fn top_k(eval: &ToyEvaluator, s: &branchwise::gnn::BipartiteState, k: usize) -> Vec<usize> {
        let (pi, _) = eval.evaluate(s).unwrap();
        let mut c = s.candidates();
        c.sort_by(|&a, &b| pi[b].total_cmp(&pi[a]).then(a.cmp(&b)));
        c.truncate(k);
        c.sort_unstable();
        c
    }
    fn value(eval: &ToyEvaluator, s: &branchwise::gnn::BipartiteState) -> f64 {
        if s.mask.iter().any(|&b| b) {
            eval.value(s)
        } else {
            0.0
        }
    }
    fn q(eval: &ToyEvaluator, s: &branchwise::gnn::BipartiteState, a: usize, k: usize, d: usize, g: f64) -> f64 {
        [Side::Left, Side::Right]
            .iter()
            .map(|&side| {
                let next = simulate_transition(s, a, side).unwrap();
                value(eval, &next) + g * best(eval, &next, k, d - 1, g)
            })
            .sum::<f64>()
            / 2.0
    }
    fn best(eval: &ToyEvaluator, s: &branchwise::gnn::BipartiteState, k: usize, d: usize, g: f64) -> f64 {
        if d == 0 || !s.mask.iter().any(|&b| b) {
            return 0.0;
        }
        top_k(eval, s, k).into_iter().map(|a| q(eval, s, a, k, d, g)).fold(f64::NEG_INFINITY, f64::max)
    }
    let qs: Vec<(usize, f64)> = top_k(eval, root, k).into_iter().map(|a| (a, q(eval, root, a, k, depth, gamma))).collect();
    let best_a = qs.iter().fold((usize::MAX, f64::NEG_INFINITY), |acc, &(a, v)| if v > acc.1 { (a, v) } else { acc }).0;
    (best_a, qs)
}

/// Midpoint-rule integral of `z_t - opt` over `[0, horizon]` with step 1e-4.
pub fn riemann(trace: &branchwise::bnb::DualBoundTrace, horizon: f64, opt: f64) -> f64 {
    let dt = 1e-4;
    let steps = (horizon / dt).round() as usize;
    let mut sum = 0.0;
    let mut k = 0;
    for s in 0..steps {
        let t = (s as f64 + 0.5) * dt;
        while k + 1 < trace.events.len() && trace.events[k + 1].0 <= t {
            k += 1;
        }
        sum += (trace.events[k].1 - opt) * dt;
    }
    sum
}

/// Random LP with `n` bounded variables and `m` rows. Every third row is
/// made tight at the origin to invite degenerate pivots.
pub fn random_lp(seed: u64, n: usize, m: usize) -> MilpInstance {
    let mut rng = seeded(seed ^ 0x1b);
    let obj: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut raw = RawMilp::new(format!("lp-{seed}"), Sense::Minimize, obj);
    for j in 0..n {
        let lo = rng.gen_range(-3.0..0.0);
        raw = raw.bounds(j, lo, lo + rng.gen_range(0.5..4.0));
    }
    for i in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.gen_range(-4.0..4.0))).collect();
        let rhs = if i % 3 == 2 { 0.0 } else { rng.gen_range(-2.0..6.0) };
        let sense = if rng.gen_bool(0.7) { RowSense::Le } else { RowSense::Ge };
        raw = raw.row(coeffs, sense, rhs);
    }
    normalize_instance(&raw).expect("valid LP")
}

/// Exact LP optimum by enumerating every basis of the `A x <= b` rows plus
/// the finite bounds: each choice of `n` tight constraints with a
/// nonsingular system gives a candidate vertex. `None` when no vertex is
/// feasible. Only sensible for a handful of variables.
pub fn vertex_enumeration(inst: &MilpInstance) -> Option<f64> {
    let n = inst.num_vars;
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (r, row) in inst.rows().iter().enumerate() {
        let mut a = vec![0.0; n];
        for &(j, v) in row {
            a[j] = v;
        }
        planes.push((a, inst.rhs[r]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if inst.upper[j].is_finite() {
            planes.push((e.clone(), inst.upper[j]));
        }
        if inst.lower[j].is_finite() {
            planes.push((e.iter().map(|v| -v).collect(), -inst.lower[j]));
        }
    }
    let feasible = |x: &[f64]| {
        planes.iter().all(|(a, b)| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-7)
    };
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    fn rec(
        k: usize,
        start: usize,
        pick: &mut Vec<usize>,
        planes: &[(Vec<f64>, f64)],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if k == pick.len() {
            visit(pick);
            return;
        }
        for i in start..planes.len() {
            pick[k] = i;
            rec(k + 1, i + 1, pick, planes, visit);
        }
    }
    let mut visit = |idx: &[usize]| {
        let mut a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let mut b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let p = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
            if a[p][col].abs() < 1e-10 {
                return;
            }
            a.swap(col, p);
            b.swap(col, p);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| b[i] / a[i][i]).collect();
        if feasible(&x) {
            let z = inst.objective_value(&x);
            best = Some(best.map_or(z, |v: f64| v.min(z)));
        }
    };
    rec(0, 0, &mut pick, &planes, &mut visit);
    best
}
