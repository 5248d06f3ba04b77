//! MILP representation, the LP relaxation solver and integrality helpers.

mod brute;
mod instance;
mod simplex;

pub use brute::{brute_force_solve, BruteResult};
pub use instance::{
    apply_deltas, normalize_instance, BoundDelta, DeltaKind, MilpInstance, Provenance, RawMilp,
    RawRow, RowSense, Sense,
};
pub use simplex::{
    default_iter_limit, lp_relax_solve, solve_with_bounds, LpSolution, LpStatus, FEAS_TOL, OPT_TOL,
    PIVOT_TOL,
};

use thiserror::Error;

/// Integrality tolerance used throughout the solver.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("enumeration box of {size} assignments exceeds limit {limit}")]
    BoxTooLarge { size: f64, limit: usize },
}

/// Integer variables whose value is more than `int_tol` away from the
/// nearest integer, in ascending order.
pub fn fractional_candidates(x: &[f64], integers: &[usize], int_tol: f64) -> Vec<usize> {
    integers
        .iter()
        .copied()
        .filter(|&i| (x[i] - x[i].round()).abs() > int_tol)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_pick_fractional_integers() {
        assert_eq!(fractional_candidates(&[1.0, 0.5], &[0, 1], 1e-6), vec![1]);
        assert!(fractional_candidates(&[1.0, 2.0, -3.0], &[0, 1, 2], 1e-6).is_empty());
        assert!(fractional_candidates(&[0.0, 2.0000005], &[0, 1], 1e-6).is_empty());
        // Continuous variables are never candidates.
        assert_eq!(fractional_candidates(&[0.5, 0.5, 0.25], &[0, 2], 1e-6), vec![0, 2]);
    }
}
