use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("dual bound trace is empty")]
    EmptyTrace,
    #[error("time budget must be positive, got {0}")]
    BadHorizon(f64),
}

/// Time-stamped global dual bound, nondecreasing in both time and value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualBoundTrace {
    pub events: Vec<(f64, f64)>,
}

impl DualBoundTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `(t, z)` if `z` improves on the last recorded bound.
    /// Returns whether an event was recorded.
    pub fn record(&mut self, t: f64, z: f64) -> bool {
        match self.events.last() {
            Some(&(t0, z0)) if z <= z0 => {
                let _ = t0;
                false
            }
            Some(&(t0, _)) => {
                self.events.push((t.max(t0), z));
                true
            }
            None => {
                self.events.push((t, z));
                true
            }
        }
    }

    pub fn last_bound(&self) -> Option<f64> {
        self.events.last().map(|e| e.1)
    }
}

/// Integral of the step function `z(t)` over `[0, horizon]` minus
/// `horizon * optimum`.
///
/// `z` is right-continuous: each event's value holds until the next event,
/// the last value holds until `horizon`, and the first value also covers any
/// time before the first event. Events after `horizon` are ignored. In the
/// minimization sense the score is at most 0, reaching 0 only when the bound
/// equals the optimum from the start.
pub fn dual_integral_score(
    trace: &DualBoundTrace,
    horizon: f64,
    optimum: f64,
) -> Result<f64, ScoreError> {
    if trace.events.is_empty() {
        return Err(ScoreError::EmptyTrace);
    }
    if !(horizon > 0.0) {
        return Err(ScoreError::BadHorizon(horizon));
    }
    let mut integral = 0.0;
    let mut current = trace.events[0].1;
    let mut since = 0.0;
    for &(t, z) in &trace.events[1..] {
        if t >= horizon {
            break;
        }
        integral += (current - optimum) * (t - since);
        current = z;
        since = t;
    }
    integral += (current - optimum) * (horizon - since);
    Ok(integral)
}
