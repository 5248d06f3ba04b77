//! Tree search over simulated branchings from a real root state, followed
//! by distilling the searched actions back into the policy.
//!
//! ```bash
//! cargo run --release -p branchwise --example mcts -- [simulations]
//! ```

use branchwise::bnb::{BnbNode, FakeClock, LpRunner};
use branchwise::branching::policy_select;
use branchwise::gnn::{extract_state, GcnnParams, DEFAULT_HIDDEN};
use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};
use branchwise::milp::{default_iter_limit, INT_TOL};
use branchwise::train::{mcts_refine, mcts_search, qualifying_states, MctsConfig, RefineConfig};

fn main() {
    let n_sims: usize = std::env::args().nth(1).map_or(300, |s| s.parse().expect("simulations"));
    let inst = generate(&FamilySpec::new(FamilyParams::desk(Family::SetCovering), 11)).expect("valid params");
    let clock = FakeClock::new();
    let runner = LpRunner::new(&inst, &clock, default_iter_limit(&inst), INT_TOL);
    let root = BnbNode::new(&runner, 0, None, 0, Vec::new(), f64::NEG_INFINITY);
    let state = extract_state(&inst, &root);
    let params = GcnnParams::init(DEFAULT_HIDDEN, 5);

    let config = MctsConfig { n_sims, ..MctsConfig::default() };
    let stats = mcts_search(&state, &params, &config).expect("search");
    let top = stats.root();
    println!("{} tree nodes after {n_sims} simulations", stats.nodes.len());
    println!("{:>6} {:>8} {:>10} {:>6}", "var", "prior", "Q", "N");
    for i in 0..top.actions.len() {
        println!("{:>6} {:>8.4} {:>10.5} {:>6}", top.actions[i], top.prior[i], top.q[i], top.n[i]);
    }
    let policy_pick = policy_select(&state, &params).expect("policy").var;
    println!("policy argmax x{policy_pick}, search argmax x{}", stats.best_action);

    let refine = RefineConfig { epochs: 50, ..RefineConfig::default() };
    println!("{} states pass the visit threshold", qualifying_states(std::slice::from_ref(&stats), refine.visit_threshold));
    let (refined, curve) = mcts_refine(&params, std::slice::from_ref(&stats), &refine).expect("refine");
    println!(
        "distillation loss {:.4} -> {:.4}; refined argmax x{}",
        curve[0],
        curve[curve.len() - 1],
        policy_select(&state, &refined).expect("policy").var
    );
}
