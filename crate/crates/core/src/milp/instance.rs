//! Canonical MILP representation and normalization from general form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MilpError;

/// Where an instance came from. Carried through the instance file so a
/// generated instance can be traced back to its generator and seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub family: String,
    pub seed: u64,
    pub rng: String,
}

impl Default for Provenance {
    fn default() -> Self {
        Self {
            family: "custom".to_string(),
            seed: 0,
            rng: "none".to_string(),
        }
    }
}

/// A minimization MILP with all rows in `A x <= b` form.
///
/// `entries` is row-major sorted and duplicate-free; bounds may be
/// infinite. `integers` is strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpInstance {
    pub name: String,
    pub num_vars: usize,
    pub num_cons: usize,
    pub objective: Vec<f64>,
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integers: Vec<usize>,
    /// Set when the original problem maximized; reported objectives should
    /// be negated to recover the original sense.
    pub sense_flipped: bool,
    pub provenance: Provenance,
}

impl MilpInstance {
    /// Builds an instance and checks every structural invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        objective: Vec<f64>,
        mut entries: Vec<(usize, usize, f64)>,
        rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        integers: Vec<usize>,
    ) -> Result<Self, MilpError> {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let inst = Self {
            name: name.into(),
            num_vars: objective.len(),
            num_cons: rhs.len(),
            objective,
            entries,
            rhs,
            lower,
            upper,
            integers,
            sense_flipped: false,
            provenance: Provenance::default(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.num_vars;
        let m = self.num_cons;
        let bad = |msg: String| Err(MilpError::Malformed(msg));
        if self.objective.len() != n {
            return bad(format!("objective has {} entries, expected {n}", self.objective.len()));
        }
        if self.rhs.len() != m {
            return bad(format!("rhs has {} entries, expected {m}", self.rhs.len()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return bad("bound vectors must have one entry per variable".into());
        }
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if r >= m || c >= n {
                return bad(format!("entry ({r}, {c}) out of range for {m}x{n}"));
            }
            if !v.is_finite() {
                return bad(format!("entry ({r}, {c}) is not finite"));
            }
            if let Some(p) = prev {
                if p == (r, c) {
                    return bad(format!("duplicate entry ({r}, {c})"));
                }
                if p > (r, c) {
                    return bad("entries are not sorted row-major".into());
                }
            }
            prev = Some((r, c));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("variable {j} has an invalid bound"));
            }
            if l.is_finite() && u.is_finite() && l > u {
                return bad(format!("variable {j} has lower {l} > upper {u}"));
            }
            if !self.objective[j].is_finite() {
                return bad(format!("objective coefficient {j} is not finite"));
            }
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return bad("rhs must be finite".into());
        }
        for w in self.integers.windows(2) {
            if w[0] >= w[1] {
                return bad("integer index set must be strictly increasing".into());
            }
        }
        if let Some(&last) = self.integers.last() {
            if last >= n {
                return bad(format!("integer index {last} out of range"));
            }
        }
        Ok(())
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.integers.binary_search(&j).is_ok()
    }

    /// Dense row views, one `Vec<(col, value)>` per constraint.
    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.num_cons];
        for &(r, c, v) in &self.entries {
            rows[r].push((c, v));
        }
        rows
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of rows and bounds at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut act = vec![0.0; self.num_cons];
        for &(r, c, v) in &self.entries {
            act[r] += v * x[c];
        }
        let rows = act
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| (a - b).max(0.0))
            .fold(0.0, f64::max);
        let bounds = (0..self.num_vars)
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Objective in the sense the instance was originally stated in.
    pub fn original_objective(&self, internal: f64) -> f64 {
        if self.sense_flipped {
            -internal
        } else {
            internal
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A MILP in general form: any objective sense and mixed row senses.
#[derive(Clone, Debug, PartialEq)]
pub struct RawMilp {
    pub name: String,
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<RawRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integers: Vec<usize>,
}

impl RawMilp {
    pub fn new(name: impl Into<String>, sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            name: name.into(),
            sense,
            objective,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            integers: Vec::new(),
        }
    }

    pub fn row(mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        self.rows.push(RawRow { coeffs, sense, rhs });
        self
    }

    pub fn bounds(mut self, j: usize, lower: f64, upper: f64) -> Self {
        self.lower[j] = lower;
        self.upper[j] = upper;
        self
    }

    pub fn integer(mut self, j: usize) -> Self {
        self.integers.push(j);
        self
    }
}

/// Converts a general-form MILP into the canonical `min c x, A x <= b` form.
///
/// Maximization negates the objective, `>=` rows are negated and equality
/// rows become a `<=` pair.
pub fn normalize_instance(raw: &RawMilp) -> Result<MilpInstance, MilpError> {
    let n = raw.objective.len();
    if raw.lower.len() != n || raw.upper.len() != n {
        return Err(MilpError::Malformed(
            "bound vectors must have one entry per variable".into(),
        ));
    }
    let flip = raw.sense == Sense::Maximize;
    let objective: Vec<f64> = raw
        .objective
        .iter()
        .map(|&c| if flip { -c } else { c })
        .collect();

    let mut entries = Vec::new();
    let mut rhs = Vec::new();
    for (i, row) in raw.rows.iter().enumerate() {
        let mut seen = BTreeSet::new();
        for &(c, _) in &row.coeffs {
            if c >= n {
                return Err(MilpError::Malformed(format!(
                    "row {i} references variable {c} of {n}"
                )));
            }
            if !seen.insert(c) {
                return Err(MilpError::Malformed(format!(
                    "row {i} has duplicate coefficient for variable {c}"
                )));
            }
        }
        let mut push = |sign: f64| {
            let r = rhs.len();
            for &(c, v) in &row.coeffs {
                if v != 0.0 {
                    entries.push((r, c, sign * v));
                }
            }
            rhs.push(sign * row.rhs);
        };
        match row.sense {
            RowSense::Le => push(1.0),
            RowSense::Ge => push(-1.0),
            RowSense::Eq => {
                push(1.0);
                push(-1.0);
            }
        }
    }

    let mut integers = raw.integers.clone();
    integers.sort_unstable();
    let before = integers.len();
    integers.dedup();
    if integers.len() != before {
        return Err(MilpError::Malformed("duplicate integer index".into()));
    }

    let mut inst = MilpInstance::new(
        raw.name.clone(),
        objective,
        entries,
        rhs,
        raw.lower.clone(),
        raw.upper.clone(),
        integers,
    )?;
    inst.sense_flipped = flip;
    Ok(inst)
}

/// Which side of a branching a bound change encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaKind {
    /// `x_j <= value`
    UpperAtMost,
    /// `x_j >= value`
    LowerAtLeast,
}

/// A single bound tightening applied on top of the instance bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundDelta {
    pub var: usize,
    pub kind: DeltaKind,
    pub value: f64,
}

impl BoundDelta {
    pub fn upper(var: usize, value: f64) -> Self {
        Self { var, kind: DeltaKind::UpperAtMost, value }
    }

    pub fn lower(var: usize, value: f64) -> Self {
        Self { var, kind: DeltaKind::LowerAtLeast, value }
    }
}

/// Instance bounds tightened by a sequence of deltas.
pub fn apply_deltas(inst: &MilpInstance, deltas: &[BoundDelta]) -> (Vec<f64>, Vec<f64>) {
    let mut lower = inst.lower.clone();
    let mut upper = inst.upper.clone();
    for d in deltas {
        match d.kind {
            DeltaKind::UpperAtMost => upper[d.var] = upper[d.var].min(d.value),
            DeltaKind::LowerAtLeast => lower[d.var] = lower[d.var].max(d.value),
        }
    }
    (lower, upper)
}
