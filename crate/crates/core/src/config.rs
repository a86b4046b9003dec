//! Run configuration: one schema-tagged JSON document drives the pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::context::ContextVariant;
use crate::data::labels::ActionVariant;
use crate::error::{Error, Result};
use crate::hash::{canonical_json_hash, hash_hex};
use crate::sim::embodiment::{validate_roster, EmbodimentSpec};
use crate::sim::world::Difficulty;
use crate::sim::worldgen::WorldGenParams;

/// Schema tag expected at the top of every config document.
pub const SCHEMA: &str = "gnm-sim/1";

/// Environment variable that overrides the config seed when set.
pub const SEED_ENV: &str = "GNM_SIM_SEED";

/// How goal information is fused with the observation stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalMode {
    /// One encoder over context, observation, and goal concatenated.
    Stacked,
    /// Shared-shape encoders: one for context+observation, one for the goal.
    Siamese,
    /// Goal encoder also sees the current observation, so it can express
    /// where the goal lies relative to the present view.
    Conditioned,
}

impl GoalMode {
    /// All modes, in a fixed order.
    pub const ALL: [GoalMode; 3] = [GoalMode::Stacked, GoalMode::Siamese, GoalMode::Conditioned];

    /// Stable lowercase label for reports and file names.
    pub fn label(&self) -> &'static str {
        match self {
            GoalMode::Stacked => "stacked",
            GoalMode::Siamese => "siamese",
            GoalMode::Conditioned => "conditioned",
        }
    }
}

/// Dataset volume and pairing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Worlds to demonstrate per roster member, per difficulty tier.
    pub mixes: Vec<TierMix>,
    /// Subset the standalone train command uses: `small`, `mid`, `large`,
    /// or `single:<id>`.
    pub subset: String,
    /// Training pairs drawn per roster member.
    pub pairs_per_embodiment: usize,
    /// Waypoints predicted per pair.
    pub tau: usize,
    /// Frame subsampling between consecutive label waypoints.
    pub stride: usize,
    /// Largest frame gap between anchor and goal in a positive pair.
    pub max_horizon: usize,
    /// Observations stacked into the temporal context.
    pub context_k: usize,
    /// Fraction of pairs whose goal comes from a different trajectory.
    pub neg_fraction: f64,
    /// Distance label assigned to negative pairs, in seconds.
    pub d_max: f64,
}

/// Worlds per difficulty tier for one roster member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierMix {
    pub easy: u32,
    pub moderate: u32,
    pub hard: u32,
}

impl TierMix {
    /// Worlds requested at the given difficulty index (easy, moderate, hard).
    pub fn count(&self, tier_index: usize) -> u32 {
        match tier_index {
            0 => self.easy,
            1 => self.moderate,
            _ => self.hard,
        }
    }

    /// Total worlds across tiers.
    pub fn total(&self) -> u32 {
        self.easy + self.moderate + self.hard
    }
}

/// Network shape and input/output wiring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub goal_mode: GoalMode,
    pub action_variant: ActionVariant,
    pub context_variant: ContextVariant,
    /// Hidden widths of each input encoder.
    pub encoder_hidden: Vec<usize>,
    /// Width of each encoder's output embedding.
    pub embedding: usize,
    /// Hidden widths of the shared trunk.
    pub trunk_hidden: Vec<usize>,
}

/// Optimizer and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weight on the squared temporal-distance term of the loss.
    pub lambda_dist: f64,
}

/// Topological graph construction and subgoal handoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// Seconds of travel between consecutive nodes taken from a traversal.
    pub node_spacing_s: f64,
    /// Predicted temporal distance below which two nodes get an edge.
    pub edge_threshold: f64,
    /// Predicted temporal distance at which the current subgoal is considered
    /// reached and the plan advances.
    pub subgoal_radius: f64,
}

/// Evaluation volume and episode limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Episodes per (condition, tier) cell.
    pub episodes_per_cell: usize,
    /// Distinct held-out worlds per tier; episodes cycle through them.
    pub eval_worlds_per_tier: usize,
    /// Episode step budget as a multiple of the demonstrator's step count.
    pub max_steps_factor: f64,
    /// Independent trainings per experiment condition; results pool over
    /// them.
    pub train_seeds: usize,
    /// Roster id behind the first single-dataset baseline condition.
    pub single_a: String,
    /// Roster id behind the second single-dataset baseline condition.
    pub single_b: String,
    /// Roster id the degradation study deploys on (a seen embodiment).
    pub degrade_embodiment: String,
    /// Tier the degradation study runs on.
    pub degrade_tier: String,
}

/// Everything a pipeline run needs, loaded from one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub seed: u64,
    /// Training embodiments; list order is load-bearing for subset selection.
    pub roster: Vec<EmbodimentSpec>,
    /// Never-trained-on embodiment used for cross-embodiment evaluation.
    pub heldout: EmbodimentSpec,
    pub worldgen: WorldGenParams,
    pub dataset: DatasetConfig,
    pub policy: PolicyConfig,
    pub train: TrainConfig,
    pub graph: GraphConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    /// Parse and validate a config document, applying the seed override from
    /// the environment if present.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let mut config: RunConfig = serde_json::from_str(text)?;
        if config.schema != SCHEMA {
            return Err(Error::SchemaVersion {
                expected: SCHEMA.into(),
                found: config.schema,
            });
        }
        if let Ok(raw) = std::env::var(SEED_ENV) {
            config.seed = raw
                .parse()
                .map_err(|_| Error::InvalidArg(format!("{SEED_ENV} must be a u64, got {raw:?}")))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Load a config document from disk.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        RunConfig::from_json(&text)
    }

    /// Bundled preset by name.
    pub fn preset(name: &str) -> Result<RunConfig> {
        let text = match name {
            "default" => include_str!("../presets/default.json"),
            "tiny" => include_str!("../presets/tiny.json"),
            other => {
                return Err(Error::InvalidArg(format!(
                    "unknown preset {other:?}; expected \"default\" or \"tiny\""
                )))
            }
        };
        RunConfig::from_json(text)
    }

    /// Hash of the effective config (after any seed override), used to tie
    /// artifacts back to the exact settings that produced them.
    pub fn hash_hex(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hash_hex(canonical_json_hash(&value))
    }

    fn validate(&self) -> Result<()> {
        validate_roster(&self.roster)?;
        self.heldout.validate()?;
        self.worldgen.validate()?;
        let d = &self.dataset;
        if d.mixes.len() != self.roster.len() {
            return Err(Error::InvalidArg(format!(
                "dataset.mixes has {} entries for {} roster members",
                d.mixes.len(),
                self.roster.len()
            )));
        }
        if d.tau == 0 || d.stride == 0 || d.pairs_per_embodiment == 0 {
            return Err(Error::InvalidArg(
                "tau, stride, and pairs_per_embodiment must be positive".into(),
            ));
        }
        if d.tau * d.stride >= d.max_horizon {
            return Err(Error::InvalidArg(format!(
                "tau*stride ({}) must stay below max_horizon ({})",
                d.tau * d.stride,
                d.max_horizon
            )));
        }
        if !(0.0..1.0).contains(&d.neg_fraction) {
            return Err(Error::InvalidArg("neg_fraction must lie in [0, 1)".into()));
        }
        if d.d_max <= 0.0 || d.context_k == 0 {
            return Err(Error::InvalidArg("d_max and context_k must be positive".into()));
        }
        let p = &self.policy;
        if p.encoder_hidden.is_empty() || p.trunk_hidden.is_empty() || p.embedding == 0 {
            return Err(Error::InvalidArg(
                "encoder_hidden, trunk_hidden, and embedding must be non-empty".into(),
            ));
        }
        crate::data::pairs::Subset::parse(&d.subset, &self.roster)?;
        let t = &self.train;
        if t.learning_rate < 0.0 || t.batch_size == 0 || t.epochs == 0 {
            return Err(Error::InvalidArg(
                "learning_rate must be non-negative; batch_size and epochs positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) || t.epsilon <= 0.0 {
            return Err(Error::InvalidArg("Adam parameters out of range".into()));
        }
        if t.lambda_dist < 0.0 {
            return Err(Error::InvalidArg("lambda_dist must be non-negative".into()));
        }
        let g = &self.graph;
        if g.node_spacing_s <= 0.0 || g.edge_threshold <= 0.0 || g.subgoal_radius <= 0.0 {
            return Err(Error::InvalidArg("graph parameters must be positive".into()));
        }
        let e = &self.eval;
        if e.episodes_per_cell == 0 || e.eval_worlds_per_tier == 0 || e.max_steps_factor <= 0.0 {
            return Err(Error::InvalidArg("eval parameters must be positive".into()));
        }
        if e.train_seeds == 0 {
            return Err(Error::InvalidArg("train_seeds must be positive".into()));
        }
        for id in [&e.single_a, &e.single_b, &e.degrade_embodiment] {
            if !self.roster.iter().any(|s| &s.id == id) {
                return Err(Error::Missing(format!("eval references unknown roster id {id}")));
            }
        }
        Difficulty::parse(&e.degrade_tier)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_preset_parses_and_validates() {
        let config = RunConfig::preset("default").unwrap();
        assert_eq!(config.roster.len(), 6);
        assert_eq!(config.dataset.tau, 5);
        assert_eq!(config.dataset.stride, 2);
        assert_eq!(config.dataset.context_k, 5);
        assert_eq!(config.dataset.max_horizon, 80);
        assert!((config.dataset.neg_fraction - 0.3).abs() < 1e-12);
        assert!((config.train.learning_rate - 5e-4).abs() < 1e-18);
        assert_eq!(config.train.batch_size, 256);
        assert!((config.graph.edge_threshold - 3.0).abs() < 1e-12);
        assert!((config.graph.node_spacing_s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_preset_parses() {
        let config = RunConfig::preset("tiny").unwrap();
        assert!(config.roster.len() >= 2);
        assert!(config.dataset.pairs_per_embodiment <= 500);
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut value: serde_json::Value =
            serde_json::from_str(include_str!("../presets/tiny.json")).unwrap();
        value["surprise"] = serde_json::json!(1);
        let text = serde_json::to_string(&value).unwrap();
        assert!(RunConfig::from_json(&text).is_err());
    }

    #[test]
    fn wrong_schema_rejected() {
        let mut value: serde_json::Value =
            serde_json::from_str(include_str!("../presets/tiny.json")).unwrap();
        value["schema"] = serde_json::json!("gnm-sim/9");
        let text = serde_json::to_string(&value).unwrap();
        match RunConfig::from_json(&text) {
            Err(Error::SchemaVersion { found, .. }) => assert_eq!(found, "gnm-sim/9"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn hash_is_stable_and_order_insensitive() {
        let a = RunConfig::preset("tiny").unwrap();
        let b = RunConfig::preset("tiny").unwrap();
        assert_eq!(a.hash_hex(), b.hash_hex());
        let c = RunConfig::preset("default").unwrap();
        assert_ne!(a.hash_hex(), c.hash_hex());
    }
}
