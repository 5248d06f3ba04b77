//! Policy rollouts with value targets rebuilt from the search tree, then
//! clipped PPO updates. Starts from random weights to stay self-contained.
//!
//! ```bash
//! cargo run --release -p branchwise --example ppo -- [rounds]
//! ```

use branchwise::gnn::{GcnnParams, DEFAULT_HIDDEN};
use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};
use branchwise::train::{collect_trajectories, ppo_samples, ppo_update, PpoConfig};

fn main() {
    let rounds: u64 = std::env::args().nth(1).map_or(3, |s| s.parse().expect("rounds"));
    let instances: Vec<_> = (0..8)
        .map(|s| generate(&FamilySpec::new(FamilyParams::desk(Family::CombinatorialAuction), s)).expect("valid params"))
        .collect();
    let config = PpoConfig::default();
    let mut params = GcnnParams::init(DEFAULT_HIDDEN, 1);
    for round in 0..rounds {
        let trajs = collect_trajectories(&instances, &params, 50, round).expect("rollouts");
        let nodes: usize = trajs.iter().map(|t| t.steps.len()).sum();
        let samples = ppo_samples(&trajs, &params, config.gamma).expect("targets");
        let mean_target = samples.iter().map(|s| s.target).sum::<f64>() / samples.len().max(1) as f64;
        let (next, report) = ppo_update(&samples, &params, &PpoConfig { seed: round, ..config }).expect("update");
        params = next;
        println!(
            "round {round}: {nodes} expansions, {} samples, mean target {mean_target:.4}, objective by epoch {:?}",
            report.samples,
            report.objective.iter().map(|o| format!("{o:.4}")).collect::<Vec<_>>()
        );
    }
}
