use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{D_C, D_E, D_X};
use super::GnnError;
use crate::rng::seeded;

/// An affine map stored inside the flat parameter vector: a row-major
/// `out x inp` weight block at `w` followed by `out` biases at `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dense {
    pub w: usize,
    pub b: usize,
    pub out: usize,
    pub inp: usize,
}

impl Dense {
    fn at(offset: &mut usize, inp: usize, out: usize) -> Self {
        let w = *offset;
        let b = w + out * inp;
        *offset = b + out;
        Self { w, b, out, inp }
    }

    pub fn len(&self) -> usize {
        self.out * (self.inp + 1)
    }

    #[inline]
    pub fn row<'a>(&self, p: &'a [f64], o: usize) -> &'a [f64] {
        &p[self.w + o * self.inp..self.w + (o + 1) * self.inp]
    }

    /// `y = W x + b`.
    #[inline]
    pub fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inp);
        for (o, yo) in y.iter_mut().enumerate().take(self.out) {
            *yo = p[self.b + o] + dot(self.row(p, o), x);
        }
    }

    /// Accumulates parameter gradients for input `x` and upstream `dy`, and
    /// adds `W^T dy` into `dx` when given.
    #[inline]
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
        for (o, &d) in dy.iter().enumerate().take(self.out) {
            if d == 0.0 {
                continue;
            }
            g[self.b + o] += d;
            let gw = &mut g[self.w + o * self.inp..self.w + (o + 1) * self.inp];
            for (gi, &xi) in gw.iter_mut().zip(x) {
                *gi += d * xi;
            }
        }
        if let Some(dx) = dx {
            for (o, &d) in dy.iter().enumerate().take(self.out) {
                if d == 0.0 {
                    continue;
                }
                for (di, &wi) in dx.iter_mut().zip(self.row(p, o)) {
                    *di += d * wi;
                }
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Positions of every layer of the network in the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub h: usize,
    pub emb_x: Dense,
    pub emb_c: Dense,
    pub edge: Dense,
    pub gc1: Dense,
    pub gc2: Dense,
    pub fc1: Dense,
    pub fc2: Dense,
    pub fx1: Dense,
    pub fx2: Dense,
    pub p1: Dense,
    pub p2: Dense,
    pub v1: Dense,
    pub v2: Dense,
    pub total: usize,
}

impl Layout {
    pub fn new(h: usize) -> Self {
        let mut o = 0;
        let emb_x = Dense::at(&mut o, D_X, h);
        let emb_c = Dense::at(&mut o, D_C, h);
        let edge = Dense::at(&mut o, D_E, h);
        let gc1 = Dense::at(&mut o, 3 * h, h);
        let gc2 = Dense::at(&mut o, h, h);
        let fc1 = Dense::at(&mut o, 2 * h, h);
        let fc2 = Dense::at(&mut o, h, h);
        let fx1 = Dense::at(&mut o, 2 * h, h);
        let fx2 = Dense::at(&mut o, h, h);
        let p1 = Dense::at(&mut o, h, h);
        let p2 = Dense::at(&mut o, h, 1);
        let v1 = Dense::at(&mut o, h, h);
        let v2 = Dense::at(&mut o, h, 1);
        Self { h, emb_x, emb_c, edge, gc1, gc2, fc1, fc2, fx1, fx2, p1, p2, v1, v2, total: o }
    }

    pub fn named(&self) -> [(&'static str, Dense); 13] {
        [
            ("emb_x", self.emb_x),
            ("emb_c", self.emb_c),
            ("edge", self.edge),
            ("g_c.0", self.gc1),
            ("g_c.1", self.gc2),
            ("f_c.0", self.fc1),
            ("f_c.1", self.fc2),
            ("f_x.0", self.fx1),
            ("f_x.1", self.fx2),
            ("policy.0", self.p1),
            ("policy.1", self.p2),
            ("value.0", self.v1),
            ("value.1", self.v2),
        ]
    }
}

pub const DEFAULT_HIDDEN: usize = 32;

/// Network weights as one flat vector, laid out by [`Layout`]. Gradients
/// use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnnParams {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl GcnnParams {
    pub fn zeros(h: usize) -> Self {
        let layout = Layout::new(h);
        Self { data: vec![0.0; layout.total], layout }
    }

    /// Uniform Glorot initialization with zero biases.
    pub fn init(h: usize, seed: u64) -> Self {
        let mut p = Self::zeros(h);
        let mut rng = seeded(seed);
        for (_, d) in p.layout.named() {
            let a = (6.0 / (d.inp + d.out) as f64).sqrt();
            for v in &mut p.data[d.w..d.b] {
                *v = rng.gen_range(-a..a);
            }
        }
        p
    }

    pub fn h(&self) -> usize {
        self.layout.h
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.h())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &GcnnParams, scale: f64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

const CHECKPOINT_FORMAT: &str = "branchwise-gcnn";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub bias: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    hidden: usize,
    d_x: usize,
    d_c: usize,
    d_e: usize,
    param_count: usize,
    shapes: Vec<ShapeEntry>,
    #[serde(default)]
    config: serde_json::Value,
    params: Vec<f64>,
}

/// A saved network plus an echo of the configuration that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: GcnnParams,
    pub config: serde_json::Value,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        let layout = self.params.layout;
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            hidden: layout.h,
            d_x: D_X,
            d_c: D_C,
            d_e: D_E,
            param_count: layout.total,
            shapes: layout
                .named()
                .iter()
                .map(|(name, d)| ShapeEntry { name: (*name).into(), rows: d.out, cols: d.inp, bias: d.out })
                .collect(),
            config: self.config.clone(),
            params: self.params.data.clone(),
        };
        serde_json::to_string(&file).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GnnError> {
        let file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| GnnError::Checkpoint(e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(GnnError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                file.format, file.version
            )));
        }
        if (file.d_x, file.d_c, file.d_e) != (D_X, D_C, D_E) {
            return Err(GnnError::Checkpoint("feature sizes do not match this build".into()));
        }
        let layout = Layout::new(file.hidden);
        let expected: Vec<ShapeEntry> = layout
            .named()
            .iter()
            .map(|(name, d)| ShapeEntry { name: (*name).into(), rows: d.out, cols: d.inp, bias: d.out })
            .collect();
        if file.shapes != expected {
            return Err(GnnError::Checkpoint("layer shapes do not match the hidden width".into()));
        }
        if file.param_count != layout.total || file.params.len() != layout.total {
            return Err(GnnError::ShapeMismatch { expected: layout.total, got: file.params.len() });
        }
        Ok(Self { params: GcnnParams { layout, data: file.params }, config: file.config })
    }

    pub fn save(&self, path: &Path) -> Result<(), GnnError> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_json())
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| GnnError::Io { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, GnnError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GnnError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_json(&text)
    }
}
