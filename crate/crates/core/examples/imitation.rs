//! Records strong-branching decisions on desk set-covering instances,
//! pretrains the policy to imitate them and reports top-1 agreement on
//! held-out instances.
//!
//! ```bash
//! cargo run --release -p branchwise --example imitation -- [train_instances] [epochs]
//! ```

use std::time::Instant;

use branchwise::gnn::{GcnnParams, DEFAULT_HIDDEN};
use branchwise::instances::{generate, Family, FamilyParams, FamilySpec};
use branchwise::train::{collect_sb_data, imitation_pretrain, top1_agreement, CollectConfig, ImitationConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let n_train: u64 = args.next().map_or(30, |s| s.parse().expect("instance count"));
    let epochs: usize = args.next().map_or(30, |s| s.parse().expect("epochs"));
    let make = |seed| generate(&FamilySpec::new(FamilyParams::desk(Family::SetCovering), seed)).expect("valid params");
    let train: Vec<_> = (0..n_train).map(make).collect();
    let heldout: Vec<_> = (10_000..10_010).map(make).collect();

    let start = Instant::now();
    let data = collect_sb_data(&train, &CollectConfig::default());
    let test = collect_sb_data(&heldout, &CollectConfig::default());
    println!("{} train / {} held-out samples in {:.1?}", data.samples.len(), test.samples.len(), start.elapsed());

    let config = ImitationConfig { epochs, ..ImitationConfig::default() };
    let (params, curve) =
        imitation_pretrain(&data.samples, &GcnnParams::init(DEFAULT_HIDDEN, 0), &config).expect("pretraining");
    for (e, loss) in curve.iter().enumerate().step_by(5.max(epochs / 6)) {
        println!("epoch {e:>3} loss {loss:.4}");
    }
    let agree = top1_agreement(&test.samples, &params).expect("agreement");
    println!(
        "held-out top-1 agreement {:.3} (uniform guess {:.3}) over {} states",
        agree.rate, agree.uniform_rate, agree.count
    );
}
