use rand::Rng;

use crate::milp::{RawMilp, RowSense, Sense};
use crate::rng::SolverRng;

/// Capacitated facility location. Variables are `y_i` (open facility `i`,
/// binary) followed by `x_ij` (fraction of customer `j` served by `i`,
/// continuous in `[0, 1]`), laid out as `F + i * C + j`.
pub(super) fn generate(
    rng: &mut SolverRng,
    facilities: usize,
    customers: usize,
    capacity_ratio: f64,
) -> RawMilp {
    let cust_xy: Vec<(f64, f64)> = (0..customers).map(|_| (rng.gen(), rng.gen())).collect();
    let fac_xy: Vec<(f64, f64)> = (0..facilities).map(|_| (rng.gen(), rng.gen())).collect();
    let demand: Vec<f64> = (0..customers).map(|_| rng.gen_range(5..=35) as f64).collect();
    let raw_cap: Vec<f64> = (0..facilities).map(|_| rng.gen_range(10..=160) as f64).collect();
    let fixed: Vec<f64> = raw_cap
        .iter()
        .map(|&s| (rng.gen_range(100..=110) as f64 * s.sqrt()).floor() + rng.gen_range(0..=90) as f64)
        .collect();
    let total_demand: f64 = demand.iter().sum();
    let total_cap: f64 = raw_cap.iter().sum();
    let capacity: Vec<f64> = raw_cap
        .iter()
        .map(|&s| (s * capacity_ratio * total_demand / total_cap).round().max(1.0))
        .collect();

    let var = |i: usize, j: usize| facilities + i * customers + j;
    let mut objective = fixed.clone();
    for (i, &(fx, fy)) in fac_xy.iter().enumerate() {
        for (j, &(cx, cy)) in cust_xy.iter().enumerate() {
            let dist = ((fx - cx).powi(2) + (fy - cy).powi(2)).sqrt();
            objective.push((10.0 * dist * demand[j]).round());
            debug_assert_eq!(objective.len() - 1, var(i, j));
        }
    }

    let mut raw = RawMilp::new("facilities", Sense::Minimize, objective);
    for j in 0..customers {
        raw = raw.row((0..facilities).map(|i| (var(i, j), 1.0)).collect(), RowSense::Ge, 1.0);
    }
    for i in 0..facilities {
        let mut coeffs: Vec<(usize, f64)> = (0..customers).map(|j| (var(i, j), demand[j])).collect();
        coeffs.push((i, -capacity[i]));
        raw = raw.row(coeffs, RowSense::Le, 0.0);
    }
    raw = raw.row(
        (0..facilities).map(|i| (i, capacity[i])).collect(),
        RowSense::Ge,
        total_demand,
    );
    for i in 0..facilities {
        for j in 0..customers {
            raw = raw.row(vec![(var(i, j), 1.0), (i, -1.0)], RowSense::Le, 0.0);
        }
    }
    for i in 0..facilities {
        raw = raw.bounds(i, 0.0, 1.0).integer(i);
    }
    for i in 0..facilities {
        for j in 0..customers {
            raw = raw.bounds(var(i, j), 0.0, 1.0);
        }
    }
    raw
}
