//! Seeded generators for the four benchmark families and the instance file
//! format.
//!
//! The constructions follow the usual recipes for these families (Balas-Ho
//! style set covering, item-affinity bundles for auctions, Cornuejols style
//! facility location and Barabasi-Albert graphs for independent set) but are
//! simplified; they are reproducible from the seed, not bit-compatible with
//! other generators.

mod auction;
mod facility;
mod indset;
mod io;
mod setcover;

pub use io::{instance_from_json, instance_to_json, read_instance, write_instance, InstanceIoError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpInstance, Provenance};
use crate::rng::{seeded, RNG_NAME};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("bad generator parameters: {0}")]
    BadParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    SetCovering,
    CombinatorialAuction,
    CapacitatedFacilityLocation,
    MaximumIndependentSet,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::SetCovering,
        Family::CombinatorialAuction,
        Family::CapacitatedFacilityLocation,
        Family::MaximumIndependentSet,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Family::SetCovering => "setcover",
            Family::CombinatorialAuction => "cauctions",
            Family::CapacitatedFacilityLocation => "facilities",
            Family::MaximumIndependentSet => "indset",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.slug() == s)
    }
}

/// Family-specific generator parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum FamilyParams {
    SetCovering {
        rows: usize,
        cols: usize,
        density: f64,
        #[serde(default = "default_max_cost")]
        max_cost: u32,
    },
    CombinatorialAuction {
        items: usize,
        bids: usize,
        add_prob: f64,
    },
    CapacitatedFacilityLocation {
        facilities: usize,
        customers: usize,
        capacity_ratio: f64,
    },
    MaximumIndependentSet {
        nodes: usize,
        affinity: usize,
    },
}

fn default_max_cost() -> u32 {
    100
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::SetCovering { .. } => Family::SetCovering,
            FamilyParams::CombinatorialAuction { .. } => Family::CombinatorialAuction,
            FamilyParams::CapacitatedFacilityLocation { .. } => Family::CapacitatedFacilityLocation,
            FamilyParams::MaximumIndependentSet { .. } => Family::MaximumIndependentSet,
        }
    }

    /// Sizes small enough that strong branching stays affordable on a laptop.
    pub fn desk(family: Family) -> Self {
        match family {
            Family::SetCovering => FamilyParams::SetCovering {
                rows: 200,
                cols: 100,
                density: 0.05,
                max_cost: 100,
            },
            Family::CombinatorialAuction => FamilyParams::CombinatorialAuction {
                items: 30,
                bids: 60,
                add_prob: 0.65,
            },
            Family::CapacitatedFacilityLocation => FamilyParams::CapacitatedFacilityLocation {
                facilities: 15,
                customers: 15,
                capacity_ratio: 5.0,
            },
            Family::MaximumIndependentSet => FamilyParams::MaximumIndependentSet {
                nodes: 60,
                affinity: 4,
            },
        }
    }

    /// The full benchmark sizes.
    pub fn full(family: Family) -> Self {
        match family {
            Family::SetCovering => FamilyParams::SetCovering {
                rows: 500,
                cols: 1000,
                density: 0.05,
                max_cost: 100,
            },
            Family::CombinatorialAuction => FamilyParams::CombinatorialAuction {
                items: 100,
                bids: 500,
                add_prob: 0.65,
            },
            Family::CapacitatedFacilityLocation => FamilyParams::CapacitatedFacilityLocation {
                facilities: 100,
                customers: 100,
                capacity_ratio: 5.0,
            },
            Family::MaximumIndependentSet => FamilyParams::MaximumIndependentSet {
                nodes: 500,
                affinity: 4,
            },
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::BadParams(m.to_string()));
        match *self {
            FamilyParams::SetCovering { rows, cols, density, max_cost } => {
                if rows == 0 || cols == 0 {
                    return bad("set covering needs rows > 0 and cols > 0");
                }
                if cols < 2 {
                    return bad("set covering needs at least 2 columns to cover each row twice");
                }
                if !(density > 0.0 && density <= 1.0) {
                    return bad("density must lie in (0, 1]");
                }
                if max_cost == 0 {
                    return bad("max_cost must be positive");
                }
            }
            FamilyParams::CombinatorialAuction { items, bids, add_prob } => {
                if items == 0 || bids == 0 {
                    return bad("auction needs items > 0 and bids > 0");
                }
                if !(0.0..1.0).contains(&add_prob) {
                    return bad("add_prob must lie in [0, 1)");
                }
            }
            FamilyParams::CapacitatedFacilityLocation { facilities, customers, capacity_ratio } => {
                if facilities == 0 || customers == 0 {
                    return bad("facility location needs facilities > 0 and customers > 0");
                }
                if !(capacity_ratio >= 1.0 && capacity_ratio.is_finite()) {
                    return bad("capacity_ratio must be >= 1 so demand can be met");
                }
            }
            FamilyParams::MaximumIndependentSet { nodes, affinity } => {
                if nodes == 0 || affinity == 0 {
                    return bad("independent set needs nodes > 0 and affinity > 0");
                }
                if affinity >= nodes {
                    return bad("affinity must be smaller than the node count");
                }
            }
        }
        Ok(())
    }
}

/// Generator parameters plus the seed that fully determines the output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    #[serde(flatten)]
    pub params: FamilyParams,
    pub seed: u64,
}

impl FamilySpec {
    pub fn new(params: FamilyParams, seed: u64) -> Self {
        Self { params, seed }
    }
}

/// Generates one canonical instance for `spec`.
pub fn generate(spec: &FamilySpec) -> Result<MilpInstance, GenError> {
    spec.params.validate()?;
    let mut rng = seeded(spec.seed);
    let raw = match spec.params {
        FamilyParams::SetCovering { rows, cols, density, max_cost } => {
            setcover::generate(&mut rng, rows, cols, density, max_cost)
        }
        FamilyParams::CombinatorialAuction { items, bids, add_prob } => {
            auction::generate(&mut rng, items, bids, add_prob)
        }
        FamilyParams::CapacitatedFacilityLocation { facilities, customers, capacity_ratio } => {
            facility::generate(&mut rng, facilities, customers, capacity_ratio)
        }
        FamilyParams::MaximumIndependentSet { nodes, affinity } => {
            indset::generate(&mut rng, nodes, affinity)
        }
    };
    let family = spec.params.family();
    let mut inst = crate::milp::normalize_instance(&raw)
        .map_err(|e| GenError::BadParams(format!("generator produced an invalid instance: {e}")))?;
    inst.name = format!("{}-{:016x}", family.slug(), spec.seed);
    inst.provenance = Provenance {
        family: family.slug().to_string(),
        seed: spec.seed,
        rng: RNG_NAME.to_string(),
    };
    Ok(inst)
}
