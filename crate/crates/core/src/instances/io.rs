//! JSON instance files.
//!
//! ```text
//! { "name": str, "n": int, "m": int, "c": [f64], "A": [[row, col, val]],
//!   "b": [f64], "l": [f64 | "-inf"], "u": [f64 | "inf"], "I": [int],
//!   "sense_flipped": bool, "family": str, "seed": int, "rng": str }
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a written file
//! reproduces the instance exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{MilpInstance, Provenance};

#[derive(Debug, Error)]
pub enum InstanceIoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error{}{}: {message}",
        line.map(|l| format!(" at line {l}")).unwrap_or_default(),
        field.as_ref().map(|f| format!(" in field `{f}`")).unwrap_or_default())]
    Schema {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum WireBound {
    Num(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    name: String,
    n: usize,
    m: usize,
    c: Vec<f64>,
    #[serde(rename = "A")]
    a: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    l: Vec<WireBound>,
    u: Vec<WireBound>,
    #[serde(rename = "I")]
    integers: Vec<usize>,
    sense_flipped: bool,
    family: String,
    seed: u64,
    rng: String,
}

fn encode_bound(v: f64) -> WireBound {
    if v == f64::INFINITY {
        WireBound::Text("inf".into())
    } else if v == f64::NEG_INFINITY {
        WireBound::Text("-inf".into())
    } else {
        WireBound::Num(v)
    }
}

fn decode_bound(field: &str, idx: usize, w: &WireBound) -> Result<f64, InstanceIoError> {
    match w {
        WireBound::Num(v) => Ok(*v),
        WireBound::Text(s) => match s.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(InstanceIoError::Schema {
                line: None,
                field: Some(format!("{field}[{idx}]")),
                message: format!("expected a number or an infinity sentinel, found {other:?}"),
            }),
        },
    }
}

pub fn instance_to_json(inst: &MilpInstance) -> String {
    let file = InstanceFile {
        name: inst.name.clone(),
        n: inst.num_vars,
        m: inst.num_cons,
        c: inst.objective.clone(),
        a: inst.entries.clone(),
        b: inst.rhs.clone(),
        l: inst.lower.iter().map(|&v| encode_bound(v)).collect(),
        u: inst.upper.iter().map(|&v| encode_bound(v)).collect(),
        integers: inst.integers.clone(),
        sense_flipped: inst.sense_flipped,
        family: inst.provenance.family.clone(),
        seed: inst.provenance.seed,
        rng: inst.provenance.rng.clone(),
    };
    let mut s = serde_json::to_string(&file).expect("instance serialization cannot fail");
    s.push('\n');
    s
}

pub fn instance_from_json(text: &str) -> Result<MilpInstance, InstanceIoError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| InstanceIoError::Schema {
        line: Some(e.line()),
        field: None,
        message: e.to_string(),
    })?;
    let field_err = |field: &str, message: String| InstanceIoError::Schema {
        line: None,
        field: Some(field.to_string()),
        message,
    };
    if file.c.len() != file.n {
        return Err(field_err("c", format!("length {} does not match n = {}", file.c.len(), file.n)));
    }
    if file.b.len() != file.m {
        return Err(field_err("b", format!("length {} does not match m = {}", file.b.len(), file.m)));
    }
    if file.l.len() != file.n {
        return Err(field_err("l", format!("length {} does not match n = {}", file.l.len(), file.n)));
    }
    if file.u.len() != file.n {
        return Err(field_err("u", format!("length {} does not match n = {}", file.u.len(), file.n)));
    }
    let lower = file
        .l
        .iter()
        .enumerate()
        .map(|(i, w)| decode_bound("l", i, w))
        .collect::<Result<Vec<_>, _>>()?;
    let upper = file
        .u
        .iter()
        .enumerate()
        .map(|(i, w)| decode_bound("u", i, w))
        .collect::<Result<Vec<_>, _>>()?;
    let inst = MilpInstance {
        name: file.name,
        num_vars: file.n,
        num_cons: file.m,
        objective: file.c,
        entries: file.a,
        rhs: file.b,
        lower,
        upper,
        integers: file.integers,
        sense_flipped: file.sense_flipped,
        provenance: Provenance { family: file.family, seed: file.seed, rng: file.rng },
    };
    inst.validate().map_err(|e| field_err("A", e.to_string()))?;
    Ok(inst)
}

/// Writes atomically: the file either holds the full instance or is untouched.
pub fn write_instance(inst: &MilpInstance, path: &Path) -> Result<(), InstanceIoError> {
    let io = |source| InstanceIoError::Io { path: path.to_path_buf(), source };
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, instance_to_json(inst)).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn read_instance(path: &Path) -> Result<MilpInstance, InstanceIoError> {
    let text = fs::read_to_string(path)
        .map_err(|source| InstanceIoError::Io { path: path.to_path_buf(), source })?;
    instance_from_json(&text)
}
