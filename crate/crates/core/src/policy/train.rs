//! Mini-batch training loop with Adam.
//!
//! Single-threaded by design: the parameter trajectory must be a pure
//! function of the initial weights, the pair list, and the shuffle seed.

use rand::seq::SliceRandom;

use crate::config::TrainConfig;
use crate::data::pairs::TrainingPair;
use crate::error::Result;
use crate::policy::loss::{sample_loss_and_grads, PolicyGrads, Target};
use crate::policy::net::{scaled_features, Caches, Policy};
use crate::rng::{rng_for, tag};

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    /// Fresh state for `n` parameters.
    pub fn new(train: &TrainConfig, n: usize) -> Adam {
        Adam {
            learning_rate: train.learning_rate,
            beta1: train.beta1,
            beta2: train.beta2,
            epsilon: train.epsilon,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One update in place: standard bias-corrected Adam.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Loss trace of a completed training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean total loss per epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
}

/// Train `policy` in place on `pairs`. Deterministic per (policy init, pairs,
/// seed); batches are reshuffled every epoch from a derived stream.
pub fn train_policy(
    policy: &mut Policy,
    pairs: &[TrainingPair],
    train: &TrainConfig,
    seed: u64,
) -> Result<TrainReport> {
    // Scale inputs once; training revisits each pair every epoch.
    let features: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> =
        pairs.iter().map(scaled_features).collect();

    let mut adam = Adam::new(train, policy.param_count());
    let mut grads = PolicyGrads::like(policy);
    let mut caches = Caches::default();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(train.epochs);

    for epoch in 0..train.epochs {
        let mut rng = rng_for(seed, &[tag::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(train.batch_size) {
            grads.zero();
            for &idx in batch {
                let pair = &pairs[idx];
                let (ctx, obs, goal) = &features[idx];
                let target = Target {
                    distance: pair.distance,
                    waypoints: &pair.action,
                    is_negative: pair.is_negative,
                };
                let terms = sample_loss_and_grads(
                    policy,
                    ctx,
                    obs,
                    goal,
                    &target,
                    train.lambda_dist,
                    &mut grads,
                    &mut caches,
                )?;
                epoch_loss += terms.total;
            }
            grads.scale(1.0 / batch.len() as f64);
            let mut flat = policy.flatten_params();
            adam.step(&mut flat, &grads.flatten());
            policy.assign_params(&flat)?;
        }
        epoch_losses.push(epoch_loss / pairs.len() as f64);
    }
    Ok(TrainReport { epoch_losses })
}
