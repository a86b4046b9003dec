//! Dataset generation and the manifest that indexes it on disk.
//!
//! A dataset directory holds one CSV per demonstration plus `manifest.json`
//! describing where each file came from: embodiment, difficulty, world seed,
//! run seed, and frame count. Loading re-validates all of it, so a dataset
//! that was edited or truncated is rejected rather than silently retrained on.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::expert::collect_trajectory;
use crate::data::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tag};
use crate::sim::embodiment::Kinematics;
use crate::sim::world::Difficulty;
use crate::sim::worldgen::generate_world;

/// Schema tag for dataset manifests.
pub const MANIFEST_SCHEMA: &str = "gnm-sim/1";

/// Worlds tried per demonstration slot before generation is abandoned.
const WORLD_RETRIES: u64 = 12;

/// One demonstration file and the seeds that reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub embodiment_index: usize,
    pub embodiment_id: String,
    pub alpha: f64,
    pub kinematics: Kinematics,
    pub difficulty: Difficulty,
    pub world_seed: u64,
    pub run_seed: u64,
    pub frames: usize,
    /// Path relative to the dataset directory.
    pub file: String,
}

/// Index of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub schema: String,
    pub config_hash: String,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// Generate every demonstration the config asks for and write the dataset
/// under `out_dir`. Each slot retries across derived world seeds until the
/// scripted demonstrator succeeds, so occasional infeasible worlds cost a
/// retry rather than the run.
pub fn generate_dataset(config: &RunConfig, out_dir: &Path) -> Result<DatasetManifest> {
    let mut slots: Vec<(usize, Difficulty, u32)> = Vec::new();
    for (e, mix) in config.dataset.mixes.iter().enumerate() {
        for difficulty in Difficulty::ALL {
            for r in 0..mix.count(difficulty.index() as usize) {
                slots.push((e, difficulty, r));
            }
        }
    }

    for spec in &config.roster {
        std::fs::create_dir_all(out_dir.join(&spec.id))?;
    }

    let entries: Vec<ManifestEntry> = slots
        .par_iter()
        .map(|&(e, difficulty, r)| demonstrate_slot(config, out_dir, e, difficulty, r))
        .collect::<Result<Vec<_>>>()?;

    let manifest = DatasetManifest {
        schema: MANIFEST_SCHEMA.into(),
        config_hash: config.hash_hex(),
        seed: config.seed,
        entries,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(out_dir.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

fn demonstrate_slot(
    config: &RunConfig,
    out_dir: &Path,
    e: usize,
    difficulty: Difficulty,
    r: u32,
) -> Result<ManifestEntry> {
    let spec = &config.roster[e];
    let mut last_err = Error::Infeasible;
    for attempt in 0..WORLD_RETRIES {
        let world_seed = derive_seed(
            config.seed,
            &[tag::TRAJECTORY, e as u64, difficulty.index(), r as u64, attempt],
        );
        let world = match generate_world(&config.worldgen, difficulty, world_seed) {
            Ok(world) => world,
            Err(err) => {
                last_err = err;
                continue;
            }
        };
        match collect_trajectory(&world, spec, &world.start_pose(), world.goal_xy, world_seed) {
            Ok(mut traj) => {
                traj.world_seed = world_seed;
                traj.run_seed = world_seed;
                let file = format!("{}/{}_{r:04}.csv", spec.id, difficulty.label());
                traj.write_csv(&out_dir.join(&file))?;
                return Ok(ManifestEntry {
                    embodiment_index: e,
                    embodiment_id: spec.id.clone(),
                    alpha: spec.alpha,
                    kinematics: spec.kinematics,
                    difficulty,
                    world_seed,
                    run_seed: world_seed,
                    frames: traj.len(),
                    file,
                });
            }
            Err(err) => last_err = err,
        }
    }
    Err(Error::WorldGen {
        attempts: WORLD_RETRIES as u32,
        reason: format!(
            "no feasible {} demonstration for {} (slot {r}): {last_err}",
            difficulty.label(),
            spec.id
        ),
    })
}

/// Read a dataset back, verifying the manifest schema and that every file
/// matches its recorded shape. Returns trajectories grouped by roster index.
pub fn load_dataset(dir: &Path, roster_len: usize) -> Result<(DatasetManifest, Vec<Vec<Trajectory>>)> {
    let text = std::fs::read_to_string(dir.join("manifest.json")).map_err(|e| Error::Parse {
        path: dir.join("manifest.json").display().to_string(),
        reason: e.to_string(),
    })?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    if manifest.schema != MANIFEST_SCHEMA {
        return Err(Error::SchemaVersion {
            expected: MANIFEST_SCHEMA.into(),
            found: manifest.schema,
        });
    }
    let mut pools: Vec<Vec<Trajectory>> = vec![Vec::new(); roster_len];
    for entry in &manifest.entries {
        if entry.embodiment_index >= roster_len {
            return Err(Error::LayoutMismatch(format!(
                "manifest entry {} names roster index {} of {roster_len}",
                entry.file, entry.embodiment_index
            )));
        }
        let traj = Trajectory::read_csv(
            &dir.join(&entry.file),
            &entry.embodiment_id,
            entry.alpha,
            entry.kinematics,
            entry.world_seed,
            entry.run_seed,
        )?;
        if traj.len() != entry.frames {
            return Err(Error::LayoutMismatch(format!(
                "{} holds {} frames, manifest says {}",
                entry.file,
                traj.len(),
                entry.frames
            )));
        }
        pools[entry.embodiment_index].push(traj);
    }
    Ok((manifest, pools))
}
