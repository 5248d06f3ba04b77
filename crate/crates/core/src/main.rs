use std::path::PathBuf;
use std::process::ExitCode;

use branchwise::harness::{Experiment, ExperimentConfig, HarnessError, StageOutcome};
use clap::{Args, Parser, Subcommand};

/// Branch-and-bound experiments: generate instances, train branching
/// policies and evaluate them.
#[derive(Parser)]
#[command(name = "branchwise", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the train and test instances.
    Generate(Common),
    /// Record strong-branching decisions on the training instances.
    Collect(Common),
    /// Imitation pretraining on the collected dataset.
    Pretrain(Common),
    /// PPO rounds starting from the pretrained checkpoint.
    TrainPpo(Common),
    /// Tree-search refinement of the PPO checkpoint.
    RefineMcts(Common),
    /// Solve the test instances with every strategy and write the tables.
    Evaluate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config, TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output root (also settable via BRANCHWISE_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn experiment(&self) -> Result<Experiment, HarnessError> {
        let mut config = ExperimentConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Experiment::new(config, self.out.clone())
    }
}

fn report(out: &StageOutcome) {
    let state = if out.skipped { "up to date" } else { "done" };
    eprintln!("{}: {state}", out.stage);
    for o in &out.manifest.outputs {
        println!("{}", o.path);
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let stage = match &cli.command {
        Command::Generate(c) => c.experiment()?.generate()?,
        Command::Collect(c) => c.experiment()?.collect()?,
        Command::Pretrain(c) => c.experiment()?.pretrain()?,
        Command::TrainPpo(c) => c.experiment()?.train_ppo()?,
        Command::RefineMcts(c) => c.experiment()?.refine_mcts()?,
        Command::Evaluate(c) => {
            let exp = c.experiment()?;
            let out = exp.evaluate()?;
            report(&out.stage);
            let md = std::fs::read_to_string(&out.markdown)
                .map_err(|e| HarnessError::Io { path: out.markdown.clone(), message: e.to_string() })?;
            print!("{md}");
            return Ok(());
        }
    };
    report(&stage);
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
