//! Generates desk-size instances for every family, writes them as JSON and
//! reads them back.
//!
//! ```bash
//! cargo run --release -p branchwise --example generate_instances -- [out_dir] [per_family]
//! ```

use std::path::PathBuf;

use branchwise::instances::{generate, read_instance, write_instance, Family, FamilyParams, FamilySpec};
use branchwise::rng::derive_seed;

fn main() {
    let mut args = std::env::args().skip(1);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("branchwise-instances"), PathBuf::from);
    let per_family: u64 = args.next().map_or(3, |s| s.parse().expect("count"));
    std::fs::create_dir_all(&out).expect("create output dir");

    for family in Family::ALL {
        for i in 0..per_family {
            let spec = FamilySpec::new(FamilyParams::desk(family), derive_seed(2024, i));
            let inst = generate(&spec).expect("valid params");
            let path = out.join(format!("{}-{i}.json", family.slug()));
            write_instance(&inst, &path).expect("write");
            let back = read_instance(&path).expect("read");
            assert_eq!(back, inst);
            println!(
                "{:<40} vars={:<4} rows={:<4} nonzeros={:<5} integers={}",
                path.display(),
                inst.num_vars,
                inst.num_cons,
                inst.entries.len(),
                inst.integers.len()
            );
        }
    }
}
