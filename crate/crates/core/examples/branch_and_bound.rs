//! Solves generated instances to optimality with random and full strong
//! branching and compares tree sizes, LP counts and the dual-integral score.
//!
//! ```bash
//! cargo run --release -p branchwise --example branch_and_bound -- [family] [instances]
//! ```

use std::time::Instant;

use branchwise::bnb::{bnb_solve, dual_integral_score, FakeClock, Limits, SolveConfig};
use branchwise::branching::{Brancher, FsbBrancher, RandomBrancher};
use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let family = args
        .next()
        .map(|s| Family::from_slug(&s).expect("family: setcover|cauctions|facilities|indset"))
        .unwrap_or(Family::SetCovering);
    let count: u64 = args.next().map_or(5, |s| s.parse().expect("instance count"));
    let config = SolveConfig::with_limits(Limits { node_limit: 20_000, time_limit_s: f64::INFINITY });

    for seed in 0..count {
        let inst = generate(&FamilySpec::new(FamilyParams::desk(family), seed)).expect("valid params");
        let mut line = format!("{:<28}", inst.name);
        let runs: [(&str, Box<dyn Brancher>); 2] =
            [("random", Box::new(RandomBrancher::new(seed))), ("fsb", Box::new(FsbBrancher))];
        for (label, mut brancher) in runs {
            let clock = FakeClock::new();
            let start = Instant::now();
            let stats = bnb_solve(&inst, &mut brancher, &config, &clock).expect("solve");
            let opt = stats.incumbent.as_ref().map_or(f64::NAN, |i| i.objective);
            let score = dual_integral_score(&stats.trace, stats.wall_time_s.max(1e-3), opt).unwrap_or(f64::NAN);
            line += &format!(
                " {label}: nodes={:<6} lps={:<6} obj={:<8.1} score={:<9.3} {:?} ({:.2?})",
                stats.nodes_visited,
                stats.lp_solves,
                inst.original_objective(opt),
                score,
                stats.status,
                start.elapsed()
            );
        }
        println!("{line}");
    }
}
