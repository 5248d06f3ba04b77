//! Turns a B&B root node into the bipartite state, runs the graph network
//! on it and round-trips a checkpoint.
//!
//! ```bash
//! cargo run --release -p branchwise --example gcnn_policy
//! ```

use branchwise::bnb::{BnbNode, FakeClock, LpRunner};
use branchwise::gnn::{extract_state, gcnn_forward, Checkpoint, GcnnParams, DEFAULT_HIDDEN};
use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};
use branchwise::milp::{default_iter_limit, INT_TOL};

fn main() {
    let inst = generate(&FamilySpec::new(FamilyParams::desk(Family::CombinatorialAuction), 3)).expect("valid params");
    let clock = FakeClock::new();
    let runner = LpRunner::new(&inst, &clock, default_iter_limit(&inst), INT_TOL);
    let root = BnbNode::new(&runner, 0, None, 0, Vec::new(), f64::NEG_INFINITY);
    let state = extract_state(&inst, &root);
    println!(
        "state: {} variables, {} constraints, {} edges, {} candidates",
        state.n,
        state.m,
        state.edges.len(),
        state.candidates().len()
    );

    let params = GcnnParams::init(DEFAULT_HIDDEN, 7);
    let (pi, value, _) = gcnn_forward(&state, &params).expect("forward");
    let mut ranked: Vec<(usize, f64)> = pi.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("value estimate {value:.4}; top of the (untrained) policy:");
    for (q, p) in ranked.iter().take(5) {
        println!("  x{q:<4} pi={p:.4}");
    }

    let path = std::env::temp_dir().join("branchwise-example-checkpoint.json");
    let ckpt = Checkpoint { params, config: serde_json::json!({ "note": "example" }) };
    ckpt.save(&path).expect("save");
    let back = Checkpoint::load(&path).expect("load");
    assert_eq!(back, ckpt);
    println!("checkpoint with {} parameters round-tripped via {}", back.params.len(), path.display());
}
