//! Training loss and the exact backward pass through the policy.
//!
//! Per sample: a weighted squared error on the temporal distance, plus (for
//! positives only) a mean squared waypoint error where the heading enters via
//! its sine and cosine. The backward pass mirrors the forward code layer by
//! layer; nothing is approximated, so finite differences agree to first order
//! away from ReLU kinks.

use crate::data::labels::Waypoint;
use crate::error::Result;
use crate::policy::net::{sigmoid, softplus, Caches, Linear, Mlp, MlpCache, Policy};

/// Gradient buffer for one dense layer, same shapes as the layer.
#[derive(Debug, Clone)]
pub struct LinearGrad {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LinearGrad {
    fn like(layer: &Linear) -> LinearGrad {
        LinearGrad {
            w: vec![0.0; layer.w.len()],
            b: vec![0.0; layer.b.len()],
        }
    }

    fn zero(&mut self) {
        self.w.iter_mut().for_each(|v| *v = 0.0);
        self.b.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Gradients for every parameter of a policy, in the policy's layer order.
#[derive(Debug, Clone)]
pub struct PolicyGrads {
    pub layers: Vec<LinearGrad>,
}

impl PolicyGrads {
    /// Zeroed gradients shaped like `policy`.
    pub fn like(policy: &Policy) -> PolicyGrads {
        PolicyGrads {
            layers: policy.layer_iter().map(LinearGrad::like).collect(),
        }
    }

    /// Reset all entries to zero.
    pub fn zero(&mut self) {
        self.layers.iter_mut().for_each(LinearGrad::zero);
    }

    /// Flatten in the same order as `Policy::flatten_params`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    /// Scale every gradient, e.g. by 1/batch.
    pub fn scale(&mut self, f: f64) {
        for layer in &mut self.layers {
            layer.w.iter_mut().for_each(|v| *v *= f);
            layer.b.iter_mut().for_each(|v| *v *= f);
        }
    }
}

/// Supervision for one sample, in the action variant's units.
#[derive(Debug, Clone)]
pub struct Target<'a> {
    pub distance: f64,
    pub waypoints: &'a [Waypoint],
    /// Masks the waypoint term entirely when true.
    pub is_negative: bool,
}

/// Loss value split into its two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub distance_term: f64,
    pub action_term: f64,
}

/// Forward plus loss, no gradients.
pub fn sample_loss(
    policy: &Policy,
    context: &[f64],
    obs: &[f64],
    goal: &[f64],
    target: &Target,
    lambda_dist: f64,
) -> Result<LossTerms> {
    let mut caches = Caches::default();
    policy.forward(context, obs, goal, &mut caches)?;
    Ok(loss_from_caches(policy, &caches, target, lambda_dist))
}

fn loss_from_caches(
    policy: &Policy,
    caches: &Caches,
    target: &Target,
    lambda_dist: f64,
) -> LossTerms {
    let d_hat = softplus(caches.dist_logit);
    let distance_term = lambda_dist * (d_hat - target.distance).powi(2);
    let mut action_term = 0.0;
    if !target.is_negative {
        let tau = policy.meta.tau;
        for (j, label) in target.waypoints.iter().enumerate() {
            let x = caches.action_raw[3 * j];
            let y = caches.action_raw[3 * j + 1];
            let psi = caches.action_raw[3 * j + 2];
            action_term += (x - label.x).powi(2)
                + (y - label.y).powi(2)
                + (psi.sin() - label.psi.sin()).powi(2)
                + (psi.cos() - label.psi.cos()).powi(2);
        }
        action_term /= tau as f64;
    }
    LossTerms {
        total: distance_term + action_term,
        distance_term,
        action_term,
    }
}

/// Forward, loss, and exact gradients accumulated into `grads`.
pub fn sample_loss_and_grads(
    policy: &Policy,
    context: &[f64],
    obs: &[f64],
    goal: &[f64],
    target: &Target,
    lambda_dist: f64,
    grads: &mut PolicyGrads,
    caches: &mut Caches,
) -> Result<LossTerms> {
    policy.forward(context, obs, goal, caches)?;
    let terms = loss_from_caches(policy, caches, target, lambda_dist);

    // Head output gradients.
    let d_hat = softplus(caches.dist_logit);
    let g_dist_logit =
        lambda_dist * 2.0 * (d_hat - target.distance) * sigmoid(caches.dist_logit);
    let mut g_action = vec![0.0; caches.action_raw.len()];
    if !target.is_negative {
        let inv_tau = 1.0 / policy.meta.tau as f64;
        for (j, label) in target.waypoints.iter().enumerate() {
            let x = caches.action_raw[3 * j];
            let y = caches.action_raw[3 * j + 1];
            let psi = caches.action_raw[3 * j + 2];
            g_action[3 * j] = inv_tau * 2.0 * (x - label.x);
            g_action[3 * j + 1] = inv_tau * 2.0 * (y - label.y);
            g_action[3 * j + 2] = inv_tau
                * (2.0 * (psi.sin() - label.psi.sin()) * psi.cos()
                    + 2.0 * (psi.cos() - label.psi.cos()) * -psi.sin());
        }
    }

    // Layer gradient slots in flatten order.
    let n_enc_a = policy.enc_a.layers.len();
    let n_enc_b = policy.enc_b.as_ref().map_or(0, |m| m.layers.len());
    let n_trunk = policy.trunk.layers.len();
    let (enc_slots, rest) = grads.layers.split_at_mut(n_enc_a + n_enc_b);
    let (enc_a_slots, enc_b_slots) = enc_slots.split_at_mut(n_enc_a);
    let (trunk_slots, head_slots) = rest.split_at_mut(n_trunk);

    // Heads: linear, so grads are outer products with the trunk top.
    let top = policy.trunk.output(&caches.trunk);
    let mut g_top = vec![0.0; top.len()];
    accumulate_linear(
        &policy.head_dist,
        top,
        &[g_dist_logit],
        &mut head_slots[0],
        Some(&mut g_top),
    );
    accumulate_linear(
        &policy.head_action,
        top,
        &g_action,
        &mut head_slots[1],
        Some(&mut g_top),
    );

    // Trunk, then split the input gradient back to the encoders.
    let g_trunk_in = backward_mlp(&policy.trunk, &caches.trunk, g_top, trunk_slots);
    let emb = policy.meta.embedding;
    let g_emb_a: Vec<f64>;
    let g_emb_b: Option<Vec<f64>>;
    if policy.enc_b.is_some() {
        g_emb_a = g_trunk_in[..emb].to_vec();
        g_emb_b = Some(g_trunk_in[emb..].to_vec());
    } else {
        g_emb_a = g_trunk_in;
        g_emb_b = None;
    }
    backward_mlp(&policy.enc_a, &caches.enc_a, g_emb_a, enc_a_slots);
    if let (Some(enc_b), Some(g)) = (&policy.enc_b, g_emb_b) {
        backward_mlp(enc_b, &caches.enc_b, g, enc_b_slots);
    }
    Ok(terms)
}

/// Backprop through an MLP with ReLU after every layer; returns the gradient
/// with respect to the MLP input, accumulating parameter grads into `slots`.
fn backward_mlp(mlp: &Mlp, cache: &MlpCache, g_out: Vec<f64>, slots: &mut [LinearGrad]) -> Vec<f64> {
    let mut g = g_out;
    for (l, layer) in mlp.layers.iter().enumerate().rev() {
        // ReLU mask from the post-activation values.
        let act = &cache.acts[l + 1];
        for (gi, ai) in g.iter_mut().zip(act) {
            if *ai <= 0.0 {
                *gi = 0.0;
            }
        }
        let input = &cache.acts[l];
        let mut g_in = vec![0.0; layer.in_dim];
        accumulate_linear(layer, input, &g, &mut slots[l], Some(&mut g_in));
        g = g_in;
    }
    g
}

/// dW += g_out · inᵀ, db += g_out, and optionally g_in += Wᵀ · g_out.
fn accumulate_linear(
    layer: &Linear,
    input: &[f64],
    g_out: &[f64],
    slot: &mut LinearGrad,
    g_in: Option<&mut Vec<f64>>,
) {
    for (o, g) in g_out.iter().enumerate() {
        if *g == 0.0 {
            continue;
        }
        let row = &mut slot.w[o * layer.in_dim..(o + 1) * layer.in_dim];
        for (wi, xi) in row.iter_mut().zip(input) {
            *wi += g * xi;
        }
        slot.b[o] += g;
    }
    if let Some(g_in) = g_in {
        for (o, g) in g_out.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (gi, wi) in g_in.iter_mut().zip(row) {
                *gi += g * wi;
            }
        }
    }
}
