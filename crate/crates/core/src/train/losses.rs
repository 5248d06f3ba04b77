use serde::{Deserialize, Serialize};

/// A per-sample objective with its gradients with respect to the policy
/// vector and the value output.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub dpi: Vec<f64>,
    pub dv: f64,
}

/// `-log pi(a) + (V - target)^2`, to be minimized.
pub fn imitation_terms(pi: &[f64], v: f64, action: usize, target: f64) -> LossTerms {
    let pa = pi[action];
    let mut dpi = vec![0.0; pi.len()];
    dpi[action] = -1.0 / pa;
    let value = (v - target).powi(2);
    let policy = -pa.ln();
    LossTerms { total: policy + value, policy, value, entropy: 0.0, dpi, dv: 2.0 * (v - target) }
}

/// `-log pi(a)`, to be minimized.
pub fn distill_terms(pi: &[f64], action: usize) -> LossTerms {
    let mut t = imitation_terms(pi, 0.0, action, 0.0);
    t.total = t.policy;
    t.value = 0.0;
    t.dv = 0.0;
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoHyper {
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for PpoHyper {
    fn default() -> Self {
        Self { eps: 0.1, c1: 0.5, c2: 0.01 }
    }
}

/// The clipped-surrogate objective of one sample, to be maximized:
/// `min(r A, clip(r, 1-eps, 1+eps) A) - c1 (target - V)^2 - c2 sum pi log pi`.
///
/// `advantage` is fixed from the snapshot the data was collected with, so
/// the surrogate depends on the current parameters only through `r`.
pub fn ppo_terms(
    pi: &[f64],
    mask: &[bool],
    v: f64,
    action: usize,
    pi_old: f64,
    advantage: f64,
    target: f64,
    hp: &PpoHyper,
) -> LossTerms {
    let ratio = pi[action] / pi_old;
    let clipped = ratio.clamp(1.0 - hp.eps, 1.0 + hp.eps);
    let (policy, through_ratio) = if ratio * advantage <= clipped * advantage {
        (ratio * advantage, true)
    } else {
        (clipped * advantage, ratio == clipped)
    };
    let mut dpi = vec![0.0; pi.len()];
    if through_ratio {
        dpi[action] += advantage / pi_old;
    }
    let err = target - v;
    let value = -hp.c1 * err * err;
    let dv = 2.0 * hp.c1 * err;
    let mut neg_sum = 0.0;
    for (q, (&p, &m)) in pi.iter().zip(mask).enumerate() {
        if m && p > 0.0 {
            neg_sum -= p * p.ln();
            dpi[q] -= hp.c2 * (p.ln() + 1.0);
        }
    }
    let entropy = hp.c2 * neg_sum;
    LossTerms { total: policy + value + entropy, policy, value, entropy, dpi, dv }
}
