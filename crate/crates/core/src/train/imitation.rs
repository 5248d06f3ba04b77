use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::losses::{imitation_terms, LossTerms};
use super::{SbSample, TrainError};
use crate::branching::policy_select;
use crate::gnn::{adam_step, forward_trace, gcnn_backward, AdamConfig, AdamState, BipartiteState, GcnnParams};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImitationConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for ImitationConfig {
    fn default() -> Self {
        Self { epochs: 30, batch_size: 32, adam: AdamConfig::default(), seed: 0 }
    }
}

/// Mean gradient of `loss` over `batch`, and the mean loss. The loss
/// closure maps `(index, pi, V)` to per-sample terms.
pub(crate) fn batch_gradient<'a>(
    params: &GcnnParams,
    batch: &[usize],
    state: impl Fn(usize) -> &'a BipartiteState,
    loss: impl Fn(usize, &[f64], f64) -> LossTerms,
) -> Result<(GcnnParams, f64), TrainError> {
    let mut grad = params.zeros_like();
    let mut total = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for &i in batch {
        let trace = forward_trace(state(i), params)?;
        let terms = loss(i, &trace.pi, trace.value);
        if !terms.total.is_finite() {
            return Err(TrainError::NumericalDivergence);
        }
        total += terms.total;
        let g = gcnn_backward(params, &trace, &terms.dpi, terms.dv)?;
        grad.add_scaled(&g, scale);
    }
    Ok((grad, total * scale))
}

/// Minimizes `-log pi(a) + (V - target)^2` over the non-excluded samples.
/// Returns the trained parameters and the mean loss of each epoch.
pub fn imitation_pretrain(
    samples: &[SbSample],
    params: &GcnnParams,
    config: &ImitationConfig,
) -> Result<(GcnnParams, Vec<f64>), TrainError> {
    let usable: Vec<&SbSample> = samples.iter().filter(|s| !s.excluded).collect();
    if usable.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut params = params.clone();
    let mut adam = AdamState::new(params.len());
    let mut rng = seeded(config.seed);
    let mut order: Vec<usize> = (0..usize::max(usable.len(), 1)).collect();
    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            let (grad, loss) = batch_gradient(
                &params,
                batch,
                |i| &usable[i].state,
                |i, pi, v| imitation_terms(pi, v, usable[i].action, usable[i].value_target),
            )?;
            epoch_loss += loss * batch.len() as f64;
            adam_step(&mut params.data, &grad.data, &mut adam, &config.adam);
            if !params.is_finite() {
                return Err(TrainError::NumericalDivergence);
            }
        }
        curve.push(epoch_loss / usable.len() as f64);
    }
    Ok((params, curve))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Fraction of samples where the greedy policy picks the recorded action.
    pub rate: f64,
    /// Expected rate of a uniform choice over each sample's candidates.
    pub uniform_rate: f64,
    pub count: usize,
}

pub fn top1_agreement(samples: &[SbSample], params: &GcnnParams) -> Result<Agreement, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut hits = 0usize;
    let mut uniform = 0.0;
    for s in samples {
        let pick = policy_select(&s.state, params)?;
        if pick.var == s.action {
            hits += 1;
        }
        uniform += 1.0 / s.state.mask.iter().filter(|&&b| b).count() as f64;
    }
    let n = samples.len() as f64;
    Ok(Agreement { rate: hits as f64 / n, uniform_rate: uniform / n, count: samples.len() })
}
