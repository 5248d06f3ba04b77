//! Solves the root LP relaxation of one generated instance per family and
//! prints the bound, pivot count and solve time.
//!
//! ```bash
//! cargo run --release -p branchwise --example lp_relaxation
//! ```

use std::time::Instant;

use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};
use branchwise::milp::{default_iter_limit, fractional_candidates, lp_relax_solve, INT_TOL};

fn main() {
    for family in Family::ALL {
        let inst = generate(&FamilySpec::new(FamilyParams::desk(family), 1)).expect("valid params");
        let start = Instant::now();
        let sol = lp_relax_solve(&inst, &[], default_iter_limit(&inst));
        let elapsed = start.elapsed();
        let fractional = fractional_candidates(&sol.x, &inst.integers, INT_TOL);
        println!(
            "{:<12} n={:<4} m={:<4} status={:?} bound={:.4} pivots={} fractional={} time={:.2?}",
            family.slug(),
            inst.num_vars,
            inst.num_cons,
            sol.status,
            inst.original_objective(sol.objective),
            sol.iterations,
            fractional.len(),
            elapsed,
        );
    }
}
