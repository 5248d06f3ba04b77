//! Scores every fractional variable at the root of a set-covering instance
//! by solving both child LPs, and shows the resulting decision.
//!
//! ```bash
//! cargo run --release -p branchwise --example strong_branching -- [seed]
//! ```

use branchwise::bnb::{BnbNode, FakeClock, LpRunner};
use branchwise::branching::{fsb_select, sb_score};
use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};
use branchwise::milp::{default_iter_limit, INT_TOL};

fn main() {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let inst = generate(&FamilySpec::new(FamilyParams::desk(Family::SetCovering), seed)).expect("valid params");
    let clock = FakeClock::new();
    let runner = LpRunner::new(&inst, &clock, default_iter_limit(&inst), INT_TOL);
    let root = BnbNode::new(&runner, 0, None, 0, Vec::new(), f64::NEG_INFINITY);
    println!("root bound {:.4}, {} candidates", root.dual_bound, root.candidates.len());

    let mut scored: Vec<(usize, f64, f64, f64)> = root
        .candidates
        .iter()
        .map(|&j| {
            let s = sb_score(&runner, &root, j).expect("child LPs");
            (j, s.down, s.up, s.score)
        })
        .collect();
    scored.sort_by(|a, b| b.3.total_cmp(&a.3));
    println!("{:>6} {:>10} {:>10} {:>12}", "var", "down gain", "up gain", "score");
    for (j, down, up, score) in scored.iter().take(10) {
        println!("{j:>6} {down:>10.4} {up:>10.4} {score:>12.4}");
    }

    let decision = fsb_select(&runner, &root).expect("strong branching");
    println!("branch on x{} after {} LP solves", decision.var, runner.solves());
}
