//! The whole experiment driven from a config file: generate, collect,
//! pretrain, PPO, MCTS refinement and evaluation, printing the tables.
//! Rerunning with the same config and output directory skips every stage
//! whose manifest is still current.
//!
//! ```bash
//! cargo run --release -p branchwise --example pipeline -- [config] [out_dir]
//! ```

use std::path::PathBuf;

use branchwise::harness::{Experiment, ExperimentConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let config_path = args
        .next()
        .map_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/smoke.toml")), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("branchwise-pipeline"), PathBuf::from);
    let config = ExperimentConfig::from_file(&config_path).expect("config");
    let exp = Experiment::new(config, Some(out)).expect("experiment");
    println!("run directory {} (config hash {})", exp.dirs.root.display(), &exp.config_hash()[..12]);

    for stage in [
        Experiment::generate,
        Experiment::collect,
        Experiment::pretrain,
        Experiment::train_ppo,
        Experiment::refine_mcts,
    ] {
        let out = stage(&exp).expect("stage");
        println!("{:<12} {}", out.stage, if out.skipped { "up to date" } else { "done" });
    }
    let eval = exp.evaluate().expect("evaluate");
    println!("{:<12} {} runs -> {}", "evaluate", eval.rows.len(), eval.csv.display());
    println!("\n{}", std::fs::read_to_string(&eval.markdown).expect("summary"));
}
