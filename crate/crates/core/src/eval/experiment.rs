//! Experiment orchestration: shared held-out worlds, per-condition
//! training, and the generalization, ablation, and degradation studies.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::config::{GoalMode, PolicyConfig, RunConfig};
use crate::data::context::ContextVariant;
use crate::data::expert::collect_trajectory;
use crate::data::labels::ActionVariant;
use crate::data::manifest::{generate_dataset, load_dataset};
use crate::data::pairs::{sample_pairs, PairParams, Subset};
use crate::data::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::eval::degradation::Degradation;
use crate::eval::episode::run_episode;
use crate::eval::report::{summarize, ExperimentReport, ReportRow};
use crate::hash::fnv1a64;
use crate::nav::graph::{build_graph, TopoGraph};
use crate::policy::io::{load_policy, save_policy};
use crate::policy::net::{Policy, PolicyMeta};
use crate::policy::train::train_policy;
use crate::rng::{derive_seed, tag};
use crate::sim::embodiment::EmbodimentSpec;
use crate::sim::world::{Difficulty, WorldMap};
use crate::sim::worldgen::generate_world;

/// Attempts per held-out evaluation world before giving up.
const EVAL_WORLD_RETRIES: u32 = 12;

/// One experiment condition: a training subset plus a policy shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    /// Condition label used in report rows.
    pub label: String,
    /// File-name stem of the trained parameters; arms that train
    /// identically share a stem so the work happens once.
    pub params_stem: String,
    pub subset: Subset,
    pub policy: PolicyConfig,
}

impl Arm {
    fn new(label: &str, subset: Subset, policy: PolicyConfig, config: &RunConfig) -> Arm {
        // Any arm equal to the fully-diverse default is the same training as
        // the "large" generalization condition.
        let is_default_large =
            subset == Subset::First(config.roster.len()) && policy == config.policy;
        Arm {
            label: label.into(),
            params_stem: if is_default_large { "large".into() } else { label.into() },
            subset,
            policy,
        }
    }
}

/// The five dataset-diversity conditions.
pub fn generalization_arms(config: &RunConfig) -> Result<Vec<Arm>> {
    let base = config.policy.clone();
    Ok(vec![
        Arm::new(
            "single_a",
            Subset::parse(&format!("single:{}", config.eval.single_a), &config.roster)?,
            base.clone(),
            config,
        ),
        Arm::new(
            "single_b",
            Subset::parse(&format!("single:{}", config.eval.single_b), &config.roster)?,
            base.clone(),
            config,
        ),
        Arm::new("small", Subset::parse("small", &config.roster)?, base.clone(), config),
        Arm::new("mid", Subset::parse("mid", &config.roster)?, base.clone(), config),
        Arm::new("large", Subset::parse("large", &config.roster)?, base, config),
    ])
}

/// Which design axis an ablation varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationKind {
    ActionSpace,
    Architecture,
    Context,
}

impl AblationKind {
    pub const ALL: [AblationKind; 3] = [
        AblationKind::ActionSpace,
        AblationKind::Architecture,
        AblationKind::Context,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            AblationKind::ActionSpace => "action_space",
            AblationKind::Architecture => "architecture",
            AblationKind::Context => "context",
        }
    }

    pub fn parse(text: &str) -> Result<AblationKind> {
        AblationKind::ALL
            .into_iter()
            .find(|k| k.label() == text)
            .ok_or_else(|| Error::InvalidArg(format!("unknown ablation kind: {text}")))
    }
}

/// Three arms varying one design axis, trained on the full roster.
pub fn ablation_arms(kind: AblationKind, config: &RunConfig) -> Result<Vec<Arm>> {
    let subset = Subset::parse("large", &config.roster)?;
    let variant = |label: &str, policy: PolicyConfig| Arm::new(label, subset, policy, config);
    let arms = match kind {
        AblationKind::ActionSpace => [
            ActionVariant::Velocities,
            ActionVariant::RawWaypoints,
            ActionVariant::NormalizedWaypoints,
        ]
        .into_iter()
        .map(|v| {
            let mut p = config.policy.clone();
            p.action_variant = v;
            variant(v.label(), p)
        })
        .collect(),
        AblationKind::Architecture => [GoalMode::Stacked, GoalMode::Siamese, GoalMode::Conditioned]
            .into_iter()
            .map(|m| {
                let mut p = config.policy.clone();
                p.goal_mode = m;
                variant(m.label(), p)
            })
            .collect(),
        AblationKind::Context => [
            ContextVariant::None,
            ContextVariant::Static,
            ContextVariant::Temporal,
        ]
        .into_iter()
        .map(|c| {
            let mut p = config.policy.clone();
            p.context_variant = c;
            variant(c.label(), p)
        })
        .collect::<Vec<Arm>>(),
    };
    Ok(arms)
}

/// The two policies the degradation study compares.
pub fn degradation_arms(config: &RunConfig) -> Result<(Arm, Arm)> {
    let multi = Arm::new(
        "multi",
        Subset::parse("large", &config.roster)?,
        config.policy.clone(),
        config,
    );
    let single_subset = Subset::parse(
        &format!("single:{}", config.eval.degrade_embodiment),
        &config.roster,
    )?;
    let mut single = Arm::new("single", single_subset, config.policy.clone(), config);
    // Reuse the matching generalization baseline when it trained on the
    // same embodiment.
    if config.eval.degrade_embodiment == config.eval.single_a {
        single.params_stem = "single_a".into();
    } else if config.eval.degrade_embodiment == config.eval.single_b {
        single.params_stem = "single_b".into();
    }
    Ok((multi, single))
}

/// The degradation conditions each policy faces, including identity
/// controls.
pub fn degradation_variants() -> Vec<(String, Option<Degradation>)> {
    let specs = [
        Degradation::SteeringClip { fraction: 1.0 },
        Degradation::SteeringClip { fraction: 0.5 },
        Degradation::SteeringClip { fraction: 0.2 },
        Degradation::ViewpointShift { forward: 0.1, lateral: 0.1, yaw: 0.3 },
        Degradation::ActuatorDamage { gains: vec![1.0, 0.7] },
    ];
    let mut out = vec![("baseline".to_string(), None)];
    out.extend(specs.into_iter().map(|d| (d.label(), Some(d))));
    out
}

/// A held-out world paired with the expert traversal the map is built from.
#[derive(Debug, Clone)]
pub struct EvalWorld {
    pub world: WorldMap,
    pub traversal: Trajectory,
    pub world_seed: u64,
}

/// Orchestrates dataset generation, per-condition training, and the
/// experiment suites over a working directory.
pub struct Harness<'a> {
    pub config: &'a RunConfig,
    pub data_dir: PathBuf,
    pub params_dir: PathBuf,
    pools: Mutex<HashMap<(String, u64), Arc<Vec<EvalWorld>>>>,
}

impl<'a> Harness<'a> {
    /// Keep the dataset and trained parameters under one working directory.
    pub fn new(config: &'a RunConfig, work_dir: &Path) -> Harness<'a> {
        Harness::with_dirs(config, work_dir.join("dataset"), work_dir.join("params"))
    }

    /// Explicit artifact locations.
    pub fn with_dirs(config: &'a RunConfig, data_dir: PathBuf, params_dir: PathBuf) -> Harness<'a> {
        Harness {
            config,
            data_dir,
            params_dir,
            pools: Mutex::new(HashMap::new()),
        }
    }

    /// Generate the expert dataset unless its manifest is already present.
    pub fn ensure_dataset(&self) -> Result<()> {
        if !self.data_dir.join("manifest.json").exists() {
            generate_dataset(self.config, &self.data_dir)?;
        }
        Ok(())
    }

    fn param_path(&self, stem: &str, seed_idx: usize) -> PathBuf {
        self.params_dir.join(format!("{stem}_s{seed_idx}.params"))
    }

    fn train_seed(&self, stem: &str, seed_idx: usize) -> u64 {
        derive_seed(
            self.config.seed,
            &[tag::ARM, fnv1a64(stem.as_bytes()), seed_idx as u64],
        )
    }

    /// Train and save every missing (arm, training-seed) parameter file.
    pub fn ensure_arms(&self, arms: &[Arm]) -> Result<()> {
        let mut jobs: Vec<(&Arm, usize)> = Vec::new();
        let mut seen: BTreeSet<(String, usize)> = BTreeSet::new();
        for arm in arms {
            for s in 0..self.config.eval.train_seeds {
                if seen.insert((arm.params_stem.clone(), s))
                    && !self.param_path(&arm.params_stem, s).exists()
                {
                    jobs.push((arm, s));
                }
            }
        }
        if jobs.is_empty() {
            return Ok(());
        }
        self.ensure_dataset()?;
        let (_, pools) = load_dataset(&self.data_dir, self.config.roster.len())?;
        let pair_params = PairParams::from_dataset(&self.config.dataset);
        jobs.par_iter()
            .map(|&(arm, s)| {
                let pairs = sample_pairs(
                    &pools,
                    &self.config.roster,
                    arm.subset,
                    &pair_params,
                    arm.policy.action_variant,
                    arm.policy.context_variant,
                    self.config.seed,
                )?;
                let seed = self.train_seed(&arm.params_stem, s);
                let mut policy = Policy::init(PolicyMeta::from_config(self.config, &arm.policy), seed);
                train_policy(&mut policy, &pairs, &self.config.train, seed)?;
                save_policy(
                    &self.param_path(&arm.params_stem, s),
                    &policy,
                    &self.config.hash_hex(),
                    &arm.params_stem,
                )?;
                Ok(())
            })
            .collect::<Result<Vec<()>>>()?;
        Ok(())
    }

    /// Load every training seed of one arm; errors if any file is missing.
    pub fn load_arm(&self, arm: &Arm) -> Result<Vec<Policy>> {
        (0..self.config.eval.train_seeds)
            .map(|s| {
                let path = self.param_path(&arm.params_stem, s);
                if !path.exists() {
                    return Err(Error::Missing(format!("params file {}", path.display())));
                }
                Ok(load_policy(&path)?.0)
            })
            .collect()
    }

    /// Held-out worlds for one (embodiment, tier), built once and shared.
    pub fn eval_pool(&self, spec: &EmbodimentSpec, tier: Difficulty) -> Result<Arc<Vec<EvalWorld>>> {
        let key = (spec.id.clone(), tier.index());
        if let Some(pool) = self.pools.lock().unwrap().get(&key) {
            return Ok(pool.clone());
        }
        let worlds = (0..self.config.eval.eval_worlds_per_tier)
            .into_par_iter()
            .map(|i| self.build_eval_world(spec, tier, i as u64))
            .collect::<Result<Vec<EvalWorld>>>()?;
        let pool = Arc::new(worlds);
        self.pools.lock().unwrap().insert(key, pool.clone());
        Ok(pool)
    }

    fn build_eval_world(&self, spec: &EmbodimentSpec, tier: Difficulty, index: u64) -> Result<EvalWorld> {
        let mut last = String::new();
        for attempt in 0..EVAL_WORLD_RETRIES {
            let world_seed = derive_seed(
                self.config.seed,
                &[tag::EVAL_WORLD, tier.index(), index, attempt as u64],
            );
            let world = match generate_world(&self.config.worldgen, tier, world_seed) {
                Ok(w) => w,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            match collect_trajectory(&world, spec, &world.start_pose(), world.goal_xy, world_seed) {
                Ok(traversal) => {
                    return Ok(EvalWorld {
                        world,
                        traversal,
                        world_seed,
                    })
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::WorldGen {
            attempts: EVAL_WORLD_RETRIES,
            reason: format!("eval world {index} ({}): {last}", tier.label()),
        })
    }

    /// Topological maps for every (training seed, world) combination.
    fn build_graphs(
        &self,
        policies: &[Policy],
        tier: Difficulty,
        pool: &[EvalWorld],
    ) -> Result<Vec<Vec<TopoGraph>>> {
        policies
            .par_iter()
            .map(|policy| {
                pool.par_iter()
                    .map(|ew| build_graph(policy, &ew.traversal, tier, &self.config.graph))
                    .collect()
            })
            .collect()
    }

    /// Run one report cell: every episode across training seeds and worlds.
    fn run_cell(
        &self,
        policies: &[Policy],
        graphs: &[Vec<TopoGraph>],
        spec: &EmbodimentSpec,
        tier: Difficulty,
        pool: &[EvalWorld],
        degradation: Option<&Degradation>,
    ) -> Result<(f64, f64, usize, f64)> {
        let episodes = self.config.eval.episodes_per_cell;
        let tasks: Vec<(usize, usize)> = (0..policies.len())
            .flat_map(|s| (0..episodes).map(move |e| (s, e)))
            .collect();
        let outcomes = tasks
            .par_iter()
            .map(|&(s, e)| {
                let ew = &pool[e % pool.len()];
                let max_steps =
                    (self.config.eval.max_steps_factor * ew.traversal.len() as f64).ceil() as usize;
                let seed = derive_seed(self.config.seed, &[tag::EPISODE, tier.index(), e as u64]);
                let result = run_episode(
                    &ew.world,
                    spec,
                    &policies[s],
                    &graphs[s][e % pool.len()],
                    &self.config.graph,
                    max_steps,
                    degradation,
                    seed,
                    None,
                )?;
                Ok((result.progress, result.reached))
            })
            .collect::<Result<Vec<(f64, bool)>>>()?;
        let (mean, stderr, reached) = summarize(&outcomes);
        Ok((mean, stderr, outcomes.len(), reached))
    }

    fn seed_set(&self) -> String {
        (0..self.config.eval.train_seeds)
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join("|")
    }

    /// Evaluate a set of arms on one embodiment across tiers.
    fn run_arms(
        &self,
        title: &str,
        arms: &[Arm],
        spec: &EmbodimentSpec,
        tiers: &[Difficulty],
    ) -> Result<ExperimentReport> {
        let seed_set = self.seed_set();
        let mut rows = Vec::new();
        for arm in arms {
            let policies = self.load_arm(arm)?;
            for &tier in tiers {
                let pool = self.eval_pool(spec, tier)?;
                let graphs = self.build_graphs(&policies, tier, &pool)?;
                let (mean, stderr, n, reached) =
                    self.run_cell(&policies, &graphs, spec, tier, &pool, None)?;
                rows.push(ReportRow {
                    condition: arm.label.clone(),
                    tier: tier.label().into(),
                    mean_progress: mean,
                    stderr,
                    n,
                    seed_set: seed_set.clone(),
                    reached,
                });
            }
        }
        Ok(ExperimentReport {
            title: title.into(),
            config_hash: self.config.hash_hex(),
            rows,
        })
    }

    /// Dataset-diversity study on the held-out embodiment.
    pub fn run_generalization(&self) -> Result<ExperimentReport> {
        let arms = generalization_arms(self.config)?;
        self.run_arms(
            "progress by training-set diversity, held-out embodiment",
            &arms,
            &self.config.heldout,
            &Difficulty::ALL,
        )
    }

    /// One design-axis ablation on the held-out embodiment.
    pub fn run_ablation(&self, kind: AblationKind) -> Result<ExperimentReport> {
        let arms = ablation_arms(kind, self.config)?;
        self.run_arms(
            &format!("{} ablation, held-out embodiment", kind.label()),
            &arms,
            &self.config.heldout,
            &Difficulty::ALL,
        )
    }

    /// Robustness of the diverse policy versus a single-embodiment policy
    /// under deployment-time damage, on a seen embodiment.
    pub fn run_degradation(&self) -> Result<ExperimentReport> {
        let (multi, single) = degradation_arms(self.config)?;
        let tier = Difficulty::parse(&self.config.eval.degrade_tier)?;
        let spec = self
            .config
            .roster
            .iter()
            .find(|s| s.id == self.config.eval.degrade_embodiment)
            .ok_or_else(|| {
                Error::Missing(format!(
                    "roster id {}",
                    self.config.eval.degrade_embodiment
                ))
            })?
            .clone();
        let variants = degradation_variants();
        let seed_set = self.seed_set();
        let mut rows = Vec::new();
        for arm in [&multi, &single] {
            let policies = self.load_arm(arm)?;
            let pool = self.eval_pool(&spec, tier)?;
            let graphs = self.build_graphs(&policies, tier, &pool)?;
            for (vlabel, degradation) in &variants {
                let (mean, stderr, n, reached) = self.run_cell(
                    &policies,
                    &graphs,
                    &spec,
                    tier,
                    &pool,
                    degradation.as_ref(),
                )?;
                rows.push(ReportRow {
                    condition: format!("{}:{}", arm.label, vlabel),
                    tier: tier.label().into(),
                    mean_progress: mean,
                    stderr,
                    n,
                    seed_set: seed_set.clone(),
                    reached,
                });
            }
        }
        Ok(ExperimentReport {
            title: "degradation robustness, seen embodiment".into(),
            config_hash: self.config.hash_hex(),
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn generalization_arms_cover_the_five_conditions() {
        let config = RunConfig::preset("default").unwrap();
        let arms = generalization_arms(&config).unwrap();
        let labels: Vec<&str> = arms.iter().map(|a| a.label.as_str()).collect();
        assert_eq!(labels, ["single_a", "single_b", "small", "mid", "large"]);
        assert_eq!(arms[0].subset, Subset::Single(1));
        assert_eq!(arms[1].subset, Subset::Single(4));
        assert_eq!(arms[4].subset, Subset::First(6));
        assert_eq!(arms[4].params_stem, "large");
    }

    #[test]
    fn default_ablation_arms_alias_the_large_training() {
        let config = RunConfig::preset("default").unwrap();
        for kind in AblationKind::ALL {
            let arms = ablation_arms(kind, &config).unwrap();
            assert_eq!(arms.len(), 3);
            let aliased: Vec<&Arm> = arms.iter().filter(|a| a.params_stem == "large").collect();
            assert_eq!(aliased.len(), 1, "{:?}", kind);
            assert_eq!(aliased[0].policy, config.policy);
        }
    }

    #[test]
    fn degradation_single_arm_reuses_the_matching_baseline() {
        let config = RunConfig::preset("default").unwrap();
        let (multi, single) = degradation_arms(&config).unwrap();
        assert_eq!(multi.params_stem, "large");
        assert_eq!(single.params_stem, "single_a");
        let variants = degradation_variants();
        assert_eq!(variants.len(), 6);
        assert!(variants[0].1.is_none());
        assert!(variants.iter().any(|(_, d)| matches!(
            d,
            Some(Degradation::SteeringClip { fraction }) if *fraction == 0.5
        )));
    }

    #[test]
    fn eval_pools_are_cached_and_deterministic() {
        let config = RunConfig::preset("tiny").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let harness = Harness::new(&config, dir.path());
        let a = harness.eval_pool(&config.heldout, Difficulty::Easy).unwrap();
        let b = harness.eval_pool(&config.heldout, Difficulty::Easy).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.len(), config.eval.eval_worlds_per_tier);
        let other = Harness::new(&config, dir.path());
        let c = other.eval_pool(&config.heldout, Difficulty::Easy).unwrap();
        assert_eq!(a[0].world_seed, c[0].world_seed);
        assert_eq!(a[0].traversal.frames.len(), c[0].traversal.frames.len());
    }

    #[test]
    fn missing_params_surface_as_missing_errors() {
        let config = RunConfig::preset("tiny").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let harness = Harness::new(&config, dir.path());
        let err = harness.run_generalization().unwrap_err();
        assert!(matches!(err, Error::Missing(_)));
    }
}
