//! Experiment harness: instance generation, the training stages and the
//! evaluation tables, each stage writing versioned artifacts plus a
//! manifest under one run directory.
//!
//! ```text
//! <root>/instances/<family>/<family>-{train,test}-NNN.json
//! <root>/datasets/sb_samples.jsonl
//! <root>/checkpoints/{pretrain,ppo,refine}.json
//! <root>/results/{runs.csv,summary.md}
//! <root>/manifests/<stage>.json
//! ```

mod config;
mod evaluate;
mod manifest;

pub use config::{
    EvalLimits, ExperimentConfig, FamilyConfig, MctsStage, PathsConfig, PpoStage, StrategyConfig,
    StrategyKind, TrainingConfig,
};
pub use evaluate::{
    markdown_tables, parse_csv, summarize, write_csv, EvalOutcome, MetricStats, RunRow, SummaryCell,
};
pub use manifest::{digest_file, sha256_hex, FileDigest, Manifest};
pub use evaluate::CSV_HEADER;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::gnn::{Checkpoint, GcnnParams, GnnError};
use crate::instances::{generate, read_instance, write_instance, FamilySpec, GenError, InstanceIoError};
use crate::milp::MilpInstance;
use crate::rng::derive_seed;
use crate::train::{
    collect_sb_data, collect_trajectories, imitation_pretrain, mcts_refine, mcts_search, ppo_samples,
    ppo_update, qualifying_states, read_dataset, top1_agreement, write_dataset, TrainError,
};
use manifest::{digest_files, io_err, write_atomic};

/// Environment variable that overrides the configured output root.
pub const OUT_DIR_ENV: &str = "BRANCHWISE_OUT_DIR";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("missing artifact {}", path.display())]
    MissingArtifact { path: PathBuf },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    InstanceIo(#[from] InstanceIoError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn tag(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunDirs {
    pub root: PathBuf,
    pub instances: PathBuf,
    pub datasets: PathBuf,
    pub checkpoints: PathBuf,
    pub results: PathBuf,
    pub manifests: PathBuf,
}

impl RunDirs {
    fn new(root: PathBuf, paths: &config::PathsConfig) -> Self {
        let sub = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { root.join(p) };
        Self {
            instances: sub(&paths.instances),
            datasets: sub(&paths.datasets),
            checkpoints: sub(&paths.checkpoints),
            results: sub(&paths.results),
            manifests: root.join("manifests"),
            root,
        }
    }

    pub fn dataset(&self) -> PathBuf {
        self.datasets.join("sb_samples.jsonl")
    }

    pub fn checkpoint(&self, stage: &str) -> PathBuf {
        self.checkpoints.join(format!("{stage}.json"))
    }

    pub fn csv(&self) -> PathBuf {
        self.results.join("runs.csv")
    }

    pub fn markdown(&self) -> PathBuf {
        self.results.join("summary.md")
    }
}

/// Result of running one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct StageOutcome {
    pub stage: String,
    /// The manifest on disk already matched; nothing was recomputed.
    pub skipped: bool,
    pub manifest: Manifest,
}

/// A validated config bound to its run directory.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub dirs: RunDirs,
    config_hash: String,
}

impl Experiment {
    /// Output root precedence: `out`, then `$BRANCHWISE_OUT_DIR`, then the
    /// config's `paths.root`.
    pub fn new(config: ExperimentConfig, out: Option<PathBuf>) -> Result<Self, HarnessError> {
        config.validate()?;
        let root = out
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| config.paths.root.clone());
        std::fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        let dirs = RunDirs::new(root, &config.paths);
        let mut hashed = config.clone();
        hashed.paths.root = PathBuf::new();
        let config_hash = sha256_hex(serde_json::to_string(&hashed).expect("config serializes").as_bytes());
        Ok(Self { config, dirs, config_hash })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn instance_path(&self, family: &FamilyConfig, split: Split, idx: usize) -> PathBuf {
        let slug = &family.name;
        self.dirs.instances.join(slug).join(format!("{slug}-{}-{idx:03}.json", split.tag()))
    }

    pub fn instance_paths(&self, split: Split) -> Vec<(String, PathBuf)> {
        let mut out = Vec::new();
        for f in &self.config.families {
            let count = match split {
                Split::Train => f.train,
                Split::Test => f.test,
            };
            out.extend((0..count).map(|i| (f.name.clone(), self.instance_path(f, split, i))));
        }
        out
    }

    fn instance_seed(&self, family: &FamilyConfig, split: Split, idx: usize) -> u64 {
        let fam = derive_seed(self.config.seed, family.family() as u64);
        let base = match split {
            Split::Train => 0,
            Split::Test => 1 << 32,
        };
        derive_seed(fam, base + idx as u64)
    }

    fn stage_seed(&self, tag: u64) -> u64 {
        derive_seed(self.config.seed, 1000 + tag)
    }

    fn run_stage(
        &self,
        stage: &str,
        inputs: &[PathBuf],
        body: impl FnOnce() -> Result<(Vec<PathBuf>, serde_json::Value), HarnessError>,
    ) -> Result<StageOutcome, HarnessError> {
        let input_digests = digest_files(&self.dirs.root, inputs)?;
        let path = Manifest::path(&self.dirs.manifests, stage);
        if let Some(old) = Manifest::load(&path)? {
            if old.is_current(&self.dirs.root, &self.config_hash, &input_digests) {
                return Ok(StageOutcome { stage: stage.to_string(), skipped: true, manifest: old });
            }
        }
        let (outputs, summary) = body()?;
        let manifest = Manifest {
            stage: stage.to_string(),
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            inputs: input_digests,
            outputs: digest_files(&self.dirs.root, &outputs)?,
            summary,
        };
        manifest.save(&path)?;
        Ok(StageOutcome { stage: stage.to_string(), skipped: false, manifest })
    }

    fn load_instances(&self, split: Split) -> Result<Vec<MilpInstance>, HarnessError> {
        self.instance_paths(split).iter().map(|(_, p)| load_instance(p)).collect()
    }

    fn checkpoint_echo(&self, stage: &str) -> serde_json::Value {
        json!({
            "stage": stage,
            "seed": self.config.seed,
            "config_hash": self.config_hash,
            "training": self.config.training,
        })
    }

    fn save_checkpoint(&self, stage: &str, params: GcnnParams) -> Result<PathBuf, HarnessError> {
        let path = self.dirs.checkpoint(stage);
        std::fs::create_dir_all(&self.dirs.checkpoints).map_err(|e| io_err(&self.dirs.checkpoints, e))?;
        Checkpoint { params, config: self.checkpoint_echo(stage) }.save(&path)?;
        Ok(path)
    }

    /// Writes every train and test instance.
    pub fn generate(&self) -> Result<StageOutcome, HarnessError> {
        self.run_stage("generate", &[], || {
            let mut outputs = Vec::new();
            for f in &self.config.families {
                for split in [Split::Train, Split::Test] {
                    let count = if split == Split::Train { f.train } else { f.test };
                    for idx in 0..count {
                        let spec = FamilySpec::new(f.params(), self.instance_seed(f, split, idx));
                        let mut inst = generate(&spec)?;
                        let path = self.instance_path(f, split, idx);
                        inst.name = path.file_stem().unwrap().to_string_lossy().into_owned();
                        let dir = path.parent().expect("instance files live in a directory");
                        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                        write_instance(&inst, &path)?;
                        outputs.push(path);
                    }
                }
            }
            let n = outputs.len();
            Ok((outputs, json!({ "instances": n })))
        })
    }

    /// Strong-branching samples from the training instances.
    pub fn collect(&self) -> Result<StageOutcome, HarnessError> {
        let inputs: Vec<PathBuf> = self.instance_paths(Split::Train).into_iter().map(|p| p.1).collect();
        self.run_stage("collect", &inputs, || {
            let instances = self.load_instances(Split::Train)?;
            let report = collect_sb_data(&instances, &self.config.training.collect);
            let path = self.dirs.dataset();
            let mut buf = Vec::new();
            write_dataset(&report.samples, &mut buf).map_err(|e| io_err(&path, e))?;
            write_atomic(&path, &buf)?;
            let summary = json!({ "samples": report.samples.len(), "skipped": report.skipped });
            Ok((vec![path], summary))
        })
    }

    pub fn pretrain(&self) -> Result<StageOutcome, HarnessError> {
        let dataset = self.dirs.dataset();
        self.run_stage("pretrain", std::slice::from_ref(&dataset), || {
            let file = std::fs::File::open(&dataset).map_err(|e| io_err(&dataset, e))?;
            let samples = read_dataset(std::io::BufReader::new(file))?;
            let t = &self.config.training;
            let init = GcnnParams::init(t.hidden, self.stage_seed(1));
            let cfg = crate::train::ImitationConfig { seed: self.stage_seed(2), ..t.imitation };
            let (params, curve) = imitation_pretrain(&samples, &init, &cfg)?;
            let agreement = top1_agreement(&samples, &params)?;
            let path = self.save_checkpoint("pretrain", params)?;
            Ok((vec![path], json!({ "loss": curve, "train_agreement": agreement })))
        })
    }

    pub fn train_ppo(&self) -> Result<StageOutcome, HarnessError> {
        let start = self.dirs.checkpoint("pretrain");
        let mut inputs = vec![start.clone()];
        inputs.extend(self.instance_paths(Split::Train).into_iter().map(|p| p.1));
        self.run_stage("train-ppo", &inputs, || {
            let mut params = Checkpoint::load(&start)?.params;
            let instances = self.load_instances(Split::Train)?;
            let stage = &self.config.training.ppo;
            let mut rounds = Vec::new();
            for r in 0..stage.rounds as u64 {
                let trajs = collect_trajectories(&instances, &params, stage.node_cap, self.stage_seed(10 + 2 * r))?;
                let samples = ppo_samples(&trajs, &params, stage.update.gamma)?;
                if samples.is_empty() {
                    rounds.push(json!({ "samples": 0 }));
                    continue;
                }
                let cfg = crate::train::PpoConfig { seed: self.stage_seed(11 + 2 * r), ..stage.update };
                match ppo_update(&samples, &params, &cfg) {
                    Ok((next, report)) => {
                        params = next;
                        rounds.push(json!({ "samples": report.samples, "objective": report.objective }));
                    }
                    Err(TrainError::NumericalDivergence) => {
                        rounds.push(json!({ "samples": samples.len(), "diverged": true }));
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let path = self.save_checkpoint("ppo", params)?;
            Ok((vec![path], json!({ "rounds": rounds })))
        })
    }

    pub fn refine_mcts(&self) -> Result<StageOutcome, HarnessError> {
        let start = self.dirs.checkpoint("ppo");
        let mut inputs = vec![start.clone()];
        inputs.extend(self.instance_paths(Split::Train).into_iter().map(|p| p.1));
        self.run_stage("refine-mcts", &inputs, || {
            let mut params = Checkpoint::load(&start)?.params;
            let instances = self.load_instances(Split::Train)?;
            let stage = &self.config.training.mcts;
            let mut rounds = Vec::new();
            for r in 0..stage.rounds as u64 {
                let trajs = collect_trajectories(&instances, &params, stage.node_cap, self.stage_seed(100 + 2 * r))?;
                let states: Vec<_> = trajs.iter().flat_map(|t| t.steps.iter().map(|s| &s.state)).collect();
                let picked = spread(states.len(), stage.states_per_round);
                let search_seed = self.stage_seed(101 + 2 * r);
                let snapshot = Arc::new(params.clone());
                let searches = picked
                    .par_iter()
                    .map(|&i| {
                        let cfg = crate::train::MctsConfig { seed: derive_seed(search_seed, i as u64), ..stage.search };
                        mcts_search(states[i], snapshot.as_ref(), &cfg)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let qualifying = qualifying_states(&searches, stage.refine.visit_threshold);
                let cfg = crate::train::RefineConfig { seed: self.stage_seed(102 + 2 * r), ..stage.refine };
                let (next, curve) = mcts_refine(&params, &searches, &cfg)?;
                params = next;
                rounds.push(json!({ "searched": picked.len(), "qualifying": qualifying, "loss": curve }));
            }
            let path = self.save_checkpoint("refine", params)?;
            Ok((vec![path], json!({ "rounds": rounds })))
        })
    }

    /// Resolves a strategy's checkpoint reference to a file path.
    pub fn checkpoint_path(&self, reference: &str) -> PathBuf {
        match reference {
            "pretrain" | "ppo" | "refine" => self.dirs.checkpoint(reference),
            other => PathBuf::from(other),
        }
    }

    pub fn evaluate(&self) -> Result<EvalOutcome, HarnessError> {
        evaluate::run(self)
    }

    /// generate, collect, pretrain, train-ppo, refine-mcts and evaluate in
    /// order.
    pub fn run_all(&self) -> Result<EvalOutcome, HarnessError> {
        self.generate()?;
        self.collect()?;
        self.pretrain()?;
        self.train_ppo()?;
        self.refine_mcts()?;
        self.evaluate()
    }
}

/// `want` indices spread evenly over `0..len` (all of them when fewer).
fn spread(len: usize, want: usize) -> Vec<usize> {
    if want >= len {
        return (0..len).collect();
    }
    (0..want).map(|i| i * len / want).collect()
}

pub(crate) fn load_instance(path: &Path) -> Result<MilpInstance, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact { path: path.to_path_buf() });
    }
    Ok(read_instance(path)?)
}

pub(crate) fn load_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::MissingArtifact { path: path.to_path_buf() });
    }
    Ok(Checkpoint::load(path)?)
}
