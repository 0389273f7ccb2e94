use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Adam, PartyFeatures, PolicyNetwork, SampleTrace, Scalar};

/// Running mean of the last `window` rewards. While empty it returns the
/// reward it is asked about, so the first advantage is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub enabled: bool,
    pub window: usize,
    values: VecDeque<f64>,
}

impl Baseline {
    pub fn new(enabled: bool, window: usize) -> Self {
        Self {
            enabled,
            window: window.max(1),
            values: VecDeque::new(),
        }
    }

    pub fn value(&self, reward: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        if self.values.is_empty() {
            return reward;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn push(&mut self, reward: f64) {
        if self.values.len() == self.window {
            self.values.pop_front();
        }
        self.values.push_back(reward);
    }
}

/// One sampled encounter and the reward it earned.
pub struct Episode<'a> {
    pub features: &'a PartyFeatures,
    pub trace: &'a SampleTrace,
    pub reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub baseline: f64,
    /// Mean of `(R - b) / reward_scale` over the batch.
    pub advantage: f64,
    /// Surrogate loss `-mean(A * log pi)`; its negative gradient is the update.
    pub loss: f64,
    pub updated: bool,
}

/// REINFORCE: ascend `mean_i (R_i - b) / scale * grad sum_t log pi(a_t|s_t)`.
/// The baseline is read before this batch's rewards are added. A batch with
/// zero advantage leaves the parameters untouched.
pub fn reinforce_step<T: Scalar>(
    net: &mut PolicyNetwork<T>,
    batch: &[Episode<'_>],
    adam: &mut Adam,
    baseline: &mut Baseline,
    reward_scale: f64,
) -> Result<StepOutcome> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("empty REINFORCE batch".into()));
    }
    let n = batch.len() as f64;
    let b = baseline.value(batch.iter().map(|e| e.reward).sum::<f64>() / n);
    let mut grad = vec![T::zero(); net.param_count()];
    let mut loss = 0.0;
    let mut mean_adv = 0.0;
    for e in batch {
        let adv = (e.reward - b) / reward_scale;
        mean_adv += adv / n;
        loss -= adv * e.trace.total_log_prob() / n;
        if adv == 0.0 {
            continue;
        }
        let g = net.log_prob_gradient(e.features, e.trace)?;
        let w = T::of(adv / n);
        for (acc, gi) in grad.iter_mut().zip(g) {
            *acc = *acc + gi * w;
        }
    }
    let updated = batch.iter().any(|e| e.reward != b);
    if updated {
        adam.ascend(net.params_mut(), &grad)?;
    }
    for e in batch {
        baseline.push(e.reward);
    }
    Ok(StepOutcome {
        baseline: b,
        advantage: mean_adv,
        loss,
        updated,
    })
}
