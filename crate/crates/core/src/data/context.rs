//! Embodiment context: the stack of recent observations a policy can use to
//! infer what body it is riding.

use serde::{Deserialize, Serialize};

use crate::sim::sensor::Observation;

/// How the context stack is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextVariant {
    /// No context at all.
    None,
    /// A fixed per-run set: the first k observations, frozen thereafter.
    Static,
    /// The k observations immediately preceding the current frame.
    Temporal,
}

impl ContextVariant {
    pub fn label(&self) -> &'static str {
        match self {
            ContextVariant::None => "none",
            ContextVariant::Static => "static",
            ContextVariant::Temporal => "temporal",
        }
    }
}

/// Observation stack handed to the policy next to the current observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub variant: ContextVariant,
    /// Oldest first; empty when variant is `None`, length k otherwise.
    pub obs_stack: Vec<Observation>,
}

impl Context {
    pub fn empty() -> Context {
        Context {
            variant: ContextVariant::None,
            obs_stack: Vec::new(),
        }
    }

    /// Total scalar width when flattened for the network.
    pub fn flat_len(&self) -> usize {
        self.obs_stack.iter().map(|o| o.len()).sum()
    }
}

/// Build the context for position `t_index` in a stream of observations.
///
/// Temporal takes the k observations before `t_index`, padding with the
/// earliest one near the start; Static takes the first k of the stream (same
/// padding rule when the stream is still shorter), so it is identical at
/// every index.
pub fn build_context(
    observations: &[&Observation],
    t_index: usize,
    variant: ContextVariant,
    k: usize,
) -> Context {
    let stack = match variant {
        ContextVariant::None => Vec::new(),
        ContextVariant::Static => (0..k)
            .map(|j| observations[j.min(observations.len() - 1)].clone())
            .collect(),
        ContextVariant::Temporal => (0..k)
            .map(|j| {
                // Index t-k+j, clamped up to the earliest observation.
                let idx = (t_index + j).saturating_sub(k);
                observations[idx.min(observations.len() - 1)].clone()
            })
            .collect(),
    };
    Context {
        variant,
        obs_stack: stack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(v: f64) -> Observation {
        Observation { ranges: vec![v; 4] }
    }

    #[test]
    fn temporal_at_start_pads_with_earliest() {
        let stream: Vec<Observation> = (0..10).map(|i| obs(i as f64)).collect();
        let refs: Vec<&Observation> = stream.iter().collect();
        let ctx = build_context(&refs, 0, ContextVariant::Temporal, 5);
        assert_eq!(ctx.obs_stack.len(), 5);
        assert!(ctx.obs_stack.iter().all(|o| o.ranges[0] == 0.0));
    }

    #[test]
    fn temporal_takes_exactly_the_preceding_k() {
        let stream: Vec<Observation> = (0..10).map(|i| obs(i as f64)).collect();
        let refs: Vec<&Observation> = stream.iter().collect();
        let ctx = build_context(&refs, 7, ContextVariant::Temporal, 5);
        let got: Vec<f64> = ctx.obs_stack.iter().map(|o| o.ranges[0]).collect();
        assert_eq!(got, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn static_is_index_independent() {
        let stream: Vec<Observation> = (0..40).map(|i| obs(i as f64)).collect();
        let refs: Vec<&Observation> = stream.iter().collect();
        let a = build_context(&refs, 10, ContextVariant::Static, 5);
        let b = build_context(&refs, 39, ContextVariant::Static, 5);
        assert_eq!(a, b);
        let got: Vec<f64> = a.obs_stack.iter().map(|o| o.ranges[0]).collect();
        assert_eq!(got, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn none_is_empty() {
        let stream = [obs(1.0)];
        let refs: Vec<&Observation> = stream.iter().collect();
        let ctx = build_context(&refs, 0, ContextVariant::None, 5);
        assert!(ctx.obs_stack.is_empty());
        assert_eq!(ctx.flat_len(), 0);
    }
}
