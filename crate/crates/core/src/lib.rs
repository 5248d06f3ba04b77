//! Branch-and-bound for mixed-integer linear programs with pluggable
//! variable selection: random, full strong branching, a bipartite graph
//! network trained by imitation then PPO, and a tree-search refined
//! variant of that network.
//!
//! The runnable examples are the quickest way in:
//!
//! | example | shows |
//! |---|---|
//! | `lp_relaxation` | root LP of each family with the bounded simplex |
//! | `generate_instances` | the four generators and the JSON instance format |
//! | `branch_and_bound` | random vs strong branching: nodes, LPs, dual-integral score |
//! | `strong_branching` | per-candidate child-LP gains at a root node |
//! | `gcnn_policy` | node to bipartite state, network forward pass, checkpoints |
//! | `imitation` | strong-branching data collection and pretraining |
//! | `ppo` | policy rollouts, tree value targets and clipped updates |
//! | `mcts` | search over simulated branchings and distillation |
//! | `pipeline` | the config-driven experiment with manifests and result tables |
//!
//! ```bash
//! cargo run --release -p branchwise --example branch_and_bound -- setcover 5
//! ```
//!
//! The `branchwise` binary exposes the same pipeline stages as
//! subcommands.

pub mod bnb;
pub mod branching;
pub mod gnn;
pub mod harness;
pub mod instances;
pub mod milp;
pub mod rng;
pub mod train;
