//! Exhaustive enumeration of integer assignments. Only meant as a test
//! oracle for tiny instances.

use super::simplex::{solve_with_bounds, LpStatus};
use super::{MilpError, MilpInstance, FEAS_TOL};

#[derive(Clone, Debug, PartialEq)]
pub enum BruteResult {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
}

/// Enumerates every integer assignment inside the variable bounds. Continuous
/// variables are optimized by an LP with the integers fixed.
pub fn brute_force_solve(inst: &MilpInstance, box_limit: usize) -> Result<BruteResult, MilpError> {
    let ints = &inst.integers;
    let mut size = 1.0f64;
    let mut ranges = Vec::with_capacity(ints.len());
    for &j in ints {
        let lo = inst.lower[j].ceil();
        let hi = inst.upper[j].floor();
        if !lo.is_finite() || !hi.is_finite() {
            return Err(MilpError::BoxTooLarge { size: f64::INFINITY, limit: box_limit });
        }
        if hi < lo {
            return Ok(BruteResult::Infeasible);
        }
        size *= hi - lo + 1.0;
        ranges.push((lo, hi));
    }
    if size > box_limit as f64 {
        return Err(MilpError::BoxTooLarge { size, limit: box_limit });
    }

    let continuous = ints.len() < inst.num_vars;
    let iter_limit = 100 * (inst.num_vars + inst.num_cons) + 1000;
    let mut lower = inst.lower.clone();
    let mut upper = inst.upper.clone();
    let mut assign: Vec<f64> = ranges.iter().map(|r| r.0).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;

    loop {
        for (k, &j) in ints.iter().enumerate() {
            lower[j] = assign[k];
            upper[j] = assign[k];
        }
        let candidate = if continuous {
            let sol = solve_with_bounds(inst, &lower, &upper, iter_limit);
            match sol.status {
                LpStatus::Optimal => {
                    let mut x = sol.x;
                    for (k, &j) in ints.iter().enumerate() {
                        x[j] = assign[k];
                    }
                    Some((inst.objective_value(&x), x))
                }
                LpStatus::Infeasible => None,
                status => {
                    return Err(MilpError::Malformed(format!(
                        "residual LP ended with {status:?}; brute force needs bounded LPs"
                    )))
                }
            }
        } else {
            let x = lower.clone();
            (inst.max_violation(&x) <= FEAS_TOL).then(|| (inst.objective_value(&x), x))
        };
        if let Some((obj, x)) = candidate {
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }

        // Odometer increment over the integer box.
        let mut k = 0;
        loop {
            if k == assign.len() {
                return Ok(match best {
                    Some((objective, x)) => BruteResult::Optimal { objective, x },
                    None => BruteResult::Infeasible,
                });
            }
            if assign[k] < ranges[k].1 {
                assign[k] += 1.0;
                break;
            }
            assign[k] = ranges[k].0;
            k += 1;
        }
    }
}
