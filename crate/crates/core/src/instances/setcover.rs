use rand::seq::SliceRandom;
use rand::Rng;

use crate::milp::{RawMilp, RowSense, Sense};
use crate::rng::SolverRng;

/// `min c x` subject to every row being covered by at least one selected
/// column. Each (row, column) incidence is drawn with probability `density`,
/// then repaired so every row has two covering columns and every column
/// covers a row.
pub(super) fn generate(
    rng: &mut SolverRng,
    rows: usize,
    cols: usize,
    density: f64,
    max_cost: u32,
) -> RawMilp {
    let mut cover: Vec<Vec<bool>> = vec![vec![false; cols]; rows];
    for col in 0..cols {
        for row in cover.iter_mut() {
            if rng.gen::<f64>() < density {
                row[col] = true;
            }
        }
    }
    for col in 0..cols {
        if !cover.iter().any(|r| r[col]) {
            let r = rng.gen_range(0..rows);
            cover[r][col] = true;
        }
    }
    let all_cols: Vec<usize> = (0..cols).collect();
    for row in cover.iter_mut() {
        let count = row.iter().filter(|&&b| b).count();
        if count < 2 {
            let missing: Vec<usize> = all_cols.iter().copied().filter(|&c| !row[c]).collect();
            for &c in missing.choose_multiple(rng, 2 - count) {
                row[c] = true;
            }
        }
    }

    let costs: Vec<f64> = (0..cols).map(|_| rng.gen_range(1..=max_cost) as f64).collect();
    let mut raw = RawMilp::new("setcover", Sense::Minimize, costs);
    for row in &cover {
        let coeffs = (0..cols).filter(|&c| row[c]).map(|c| (c, 1.0)).collect();
        raw = raw.row(coeffs, RowSense::Ge, 1.0);
    }
    for j in 0..cols {
        raw = raw.bounds(j, 0.0, 1.0).integer(j);
    }
    raw
}
