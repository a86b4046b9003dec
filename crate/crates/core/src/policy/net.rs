//! Goal-conditioned policy network: hand-rolled MLPs, no autograd.
//!
//! Three input streams (context stack, current observation, goal observation)
//! are fused by one of three goal modes, passed through a shared trunk, and
//! read out by two linear heads: a scalar temporal distance (softplus) and a
//! flat list of tau waypoint triples. All math is f64 on plain vectors so the
//! backward pass in the loss module can mirror it term by term.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{GoalMode, PolicyConfig, RunConfig};
use crate::data::context::ContextVariant;
use crate::data::labels::{ActionVariant, Waypoint};
use crate::data::pairs::TrainingPair;
use crate::error::{Error, Result};
use crate::rng::{rng_for, tag};

/// Range readings are multiplied by this before entering the network, keeping
/// typical inputs within a unit-ish scale.
pub const INPUT_SCALE: f64 = 0.1;

/// Shape and wiring of a policy, stored alongside its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyMeta {
    pub goal_mode: GoalMode,
    pub action_variant: ActionVariant,
    pub context_variant: ContextVariant,
    pub n_rays: usize,
    pub context_k: usize,
    pub tau: usize,
    pub encoder_hidden: Vec<usize>,
    pub embedding: usize,
    pub trunk_hidden: Vec<usize>,
}

impl PolicyMeta {
    /// Meta for the run config's policy section with the given overrides
    /// already applied.
    pub fn from_config(config: &RunConfig, policy: &PolicyConfig) -> PolicyMeta {
        PolicyMeta {
            goal_mode: policy.goal_mode,
            action_variant: policy.action_variant,
            context_variant: policy.context_variant,
            n_rays: config.roster[0].sensor.n_rays,
            context_k: config.dataset.context_k,
            tau: config.dataset.tau,
            encoder_hidden: policy.encoder_hidden.clone(),
            embedding: policy.embedding,
            trunk_hidden: policy.trunk_hidden.clone(),
        }
    }

    /// Flattened context length fed to the network.
    pub fn context_len(&self) -> usize {
        match self.context_variant {
            ContextVariant::None => 0,
            _ => self.context_k * self.n_rays,
        }
    }

    /// Input widths of encoder A and (optionally) encoder B.
    pub fn encoder_inputs(&self) -> (usize, Option<usize>) {
        let ctx = self.context_len();
        let n = self.n_rays;
        match self.goal_mode {
            GoalMode::Stacked => (ctx + 2 * n, None),
            GoalMode::Siamese => (ctx + n, Some(n)),
            GoalMode::Conditioned => (ctx + n, Some(2 * n)),
        }
    }

    /// Width of the trunk's input: one or two embeddings.
    pub fn trunk_input(&self) -> usize {
        match self.goal_mode {
            GoalMode::Stacked => self.embedding,
            _ => 2 * self.embedding,
        }
    }

    /// Width of the action head output.
    pub fn action_dim(&self) -> usize {
        self.tau * 3
    }
}

/// One dense layer, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Linear {
    fn new(in_dim: usize, out_dim: usize) -> Linear {
        Linear {
            in_dim,
            out_dim,
            w: vec![0.0; in_dim * out_dim],
            b: vec![0.0; out_dim],
        }
    }

    fn init(&mut self, rng: &mut rand_chacha::ChaCha8Rng) {
        let limit = (6.0 / self.in_dim as f64).sqrt();
        for w in &mut self.w {
            *w = rng.gen_range(-limit..limit);
        }
        for b in &mut self.b {
            *b = 0.0;
        }
    }

    /// z = W x + b.
    pub fn apply(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        z.reserve(self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let mut acc = self.b[o];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            z.push(acc);
        }
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// Dense stack with ReLU after every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

/// Per-layer activations kept for the backward pass: `acts[0]` is the input,
/// `acts[l+1]` the post-ReLU output of layer `l`.
#[derive(Debug, Default, Clone)]
pub struct MlpCache {
    pub acts: Vec<Vec<f64>>,
}

impl Mlp {
    fn new(dims: &[usize]) -> Mlp {
        let layers = dims
            .windows(2)
            .map(|w| Linear::new(w[0], w[1]))
            .collect();
        Mlp { layers }
    }

    /// Forward with ReLU after each layer, recording activations.
    pub fn forward(&self, input: &[f64], cache: &mut MlpCache) {
        cache.acts.clear();
        cache.acts.push(input.to_vec());
        let mut z = Vec::new();
        for layer in &self.layers {
            layer.apply(cache.acts.last().unwrap(), &mut z);
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            cache.acts.push(z.clone());
        }
    }

    /// Output of the last forward call.
    pub fn output<'a>(&self, cache: &'a MlpCache) -> &'a [f64] {
        cache.acts.last().unwrap()
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }
}

/// Full policy: encoders, trunk, and two heads.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub meta: PolicyMeta,
    pub enc_a: Mlp,
    pub enc_b: Option<Mlp>,
    pub trunk: Mlp,
    pub head_dist: Linear,
    pub head_action: Linear,
}

/// Activation record for one full forward pass.
#[derive(Debug, Default, Clone)]
pub struct Caches {
    pub enc_a: MlpCache,
    pub enc_b: MlpCache,
    pub trunk: MlpCache,
    /// Raw (pre-softplus) distance logit.
    pub dist_logit: f64,
    /// Raw action head outputs, length tau*3.
    pub action_raw: Vec<f64>,
}

/// What the policy says about one (context, observation, goal) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Predicted temporal distance, seconds; non-negative by construction.
    pub distance: f64,
    /// Predicted waypoints in the action variant's units, yaw wrapped.
    pub waypoints: Vec<Waypoint>,
}

impl Policy {
    /// Freshly initialized policy for the given shape.
    pub fn init(meta: PolicyMeta, seed: u64) -> Policy {
        let (in_a, in_b) = meta.encoder_inputs();
        let mut dims_a = vec![in_a];
        dims_a.extend(&meta.encoder_hidden);
        dims_a.push(meta.embedding);
        let enc_a = Mlp::new(&dims_a);
        let enc_b = in_b.map(|in_b| {
            let mut dims = vec![in_b];
            dims.extend(&meta.encoder_hidden);
            dims.push(meta.embedding);
            Mlp::new(&dims)
        });
        let mut dims_t = vec![meta.trunk_input()];
        dims_t.extend(&meta.trunk_hidden);
        let trunk = Mlp::new(&dims_t);
        let trunk_top = *dims_t.last().unwrap();
        let mut policy = Policy {
            head_dist: Linear::new(trunk_top, 1),
            head_action: Linear::new(trunk_top, meta.action_dim()),
            meta,
            enc_a,
            enc_b,
            trunk,
        };
        let mut rng = rng_for(seed, &[tag::INIT]);
        for layer in &mut policy.enc_a.layers {
            layer.init(&mut rng);
        }
        if let Some(enc_b) = &mut policy.enc_b {
            for layer in &mut enc_b.layers {
                layer.init(&mut rng);
            }
        }
        for layer in &mut policy.trunk.layers {
            layer.init(&mut rng);
        }
        policy.head_dist.init(&mut rng);
        policy.head_action.init(&mut rng);
        policy
    }

    /// Assemble the two encoder inputs from the scaled streams.
    fn encoder_feeds(&self, context: &[f64], obs: &[f64], goal: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self.meta.goal_mode {
            GoalMode::Stacked => {
                let mut a = Vec::with_capacity(context.len() + obs.len() + goal.len());
                a.extend_from_slice(context);
                a.extend_from_slice(obs);
                a.extend_from_slice(goal);
                (a, Vec::new())
            }
            GoalMode::Siamese => {
                let mut a = Vec::with_capacity(context.len() + obs.len());
                a.extend_from_slice(context);
                a.extend_from_slice(obs);
                (a, goal.to_vec())
            }
            GoalMode::Conditioned => {
                let mut a = Vec::with_capacity(context.len() + obs.len());
                a.extend_from_slice(context);
                a.extend_from_slice(obs);
                let mut b = Vec::with_capacity(obs.len() + goal.len());
                b.extend_from_slice(obs);
                b.extend_from_slice(goal);
                (a, b)
            }
        }
    }

    /// Full forward pass over already-scaled inputs, filling `caches`.
    pub fn forward(
        &self,
        context: &[f64],
        obs: &[f64],
        goal: &[f64],
        caches: &mut Caches,
    ) -> Result<Prediction> {
        let (feed_a, feed_b) = self.encoder_feeds(context, obs, goal);
        self.enc_a.forward(&feed_a, &mut caches.enc_a);
        let trunk_in = if let Some(enc_b) = &self.enc_b {
            enc_b.forward(&feed_b, &mut caches.enc_b);
            let mut t = self.enc_a.output(&caches.enc_a).to_vec();
            t.extend_from_slice(enc_b.output(&caches.enc_b));
            t
        } else {
            self.enc_a.output(&caches.enc_a).to_vec()
        };
        self.trunk.forward(&trunk_in, &mut caches.trunk);
        let top = self.trunk.output(&caches.trunk);

        let mut z = Vec::new();
        self.head_dist.apply(top, &mut z);
        caches.dist_logit = z[0];
        self.head_action.apply(top, &mut caches.action_raw);

        let distance = softplus(caches.dist_logit);
        if !distance.is_finite() {
            return Err(Error::NonFiniteActivation {
                stage: "distance head",
                item: 0,
            });
        }
        let mut waypoints = Vec::with_capacity(self.meta.tau);
        for j in 0..self.meta.tau {
            let x = caches.action_raw[3 * j];
            let y = caches.action_raw[3 * j + 1];
            let psi_raw = caches.action_raw[3 * j + 2];
            if !(x.is_finite() && y.is_finite() && psi_raw.is_finite()) {
                return Err(Error::NonFiniteActivation {
                    stage: "action head",
                    item: j,
                });
            }
            // The head emits an unbounded angle; report it wrapped, exactly as
            // the loss sees it through (sin, cos).
            waypoints.push(Waypoint {
                x,
                y,
                psi: psi_raw.sin().atan2(psi_raw.cos()),
            });
        }
        Ok(Prediction {
            distance,
            waypoints,
        })
    }

    /// Convenience forward without keeping caches.
    pub fn predict(&self, context: &[f64], obs: &[f64], goal: &[f64]) -> Result<Prediction> {
        let mut caches = Caches::default();
        self.forward(context, obs, goal, &mut caches)
    }

    /// Total scalar parameter count.
    pub fn param_count(&self) -> usize {
        self.enc_a.param_count()
            + self.enc_b.as_ref().map_or(0, Mlp::param_count)
            + self.trunk.param_count()
            + self.head_dist.param_count()
            + self.head_action.param_count()
    }

    /// All parameters in one vector, in a fixed documented order: encoder A
    /// layers (weights then bias each), encoder B, trunk, distance head,
    /// action head.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in self.layer_iter() {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    /// Overwrite parameters from a flat vector in `flatten_params` order.
    pub fn assign_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::LayoutMismatch(format!(
                "parameter vector holds {} values, policy needs {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut at = 0;
        for layer in self.layer_iter_mut() {
            let nw = layer.w.len();
            layer.w.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = layer.b.len();
            layer.b.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    pub(crate) fn layer_iter(&self) -> impl Iterator<Item = &Linear> {
        self.enc_a
            .layers
            .iter()
            .chain(self.enc_b.iter().flat_map(|m| m.layers.iter()))
            .chain(self.trunk.layers.iter())
            .chain(std::iter::once(&self.head_dist))
            .chain(std::iter::once(&self.head_action))
    }

    pub(crate) fn layer_iter_mut(&mut self) -> impl Iterator<Item = &mut Linear> {
        self.enc_a
            .layers
            .iter_mut()
            .chain(self.enc_b.iter_mut().flat_map(|m| m.layers.iter_mut()))
            .chain(self.trunk.layers.iter_mut())
            .chain(std::iter::once(&mut self.head_dist))
            .chain(std::iter::once(&mut self.head_action))
    }
}

/// Numerically stable ln(1 + e^z).
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic sigmoid, the derivative of softplus.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One observation scaled for the network input.
pub fn scale_obs(obs: &crate::sim::sensor::Observation) -> Vec<f64> {
    obs.ranges.iter().map(|r| r * INPUT_SCALE).collect()
}

/// A context stack flattened and scaled, oldest first.
pub fn scale_stack(stack: &[crate::sim::sensor::Observation]) -> Vec<f64> {
    let mut out = Vec::with_capacity(stack.len() * stack.first().map_or(0, |o| o.ranges.len()));
    for obs in stack {
        out.extend(obs.ranges.iter().map(|r| r * INPUT_SCALE));
    }
    out
}

/// Scaled input streams for one training pair.
pub fn scaled_features(pair: &TrainingPair) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        scale_stack(&pair.context.obs_stack),
        scale_obs(&pair.observation),
        scale_obs(&pair.goal),
    )
}
