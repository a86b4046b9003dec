//! Training pair extraction: anchor/goal selection, labels, and contexts.
//!
//! Pairs are drawn per embodiment from that embodiment's own demonstration
//! pool, with an independent random stream per roster slot. Subsets that
//! share roster members therefore share those members' pairs exactly, which
//! makes dataset-size comparisons differ only in what was added, never in
//! what was already there.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{rng_for, tag};
use crate::sim::embodiment::EmbodimentSpec;
use crate::sim::sensor::Observation;

use super::context::{build_context, Context, ContextVariant};
use super::labels::{action_labels, ActionVariant, Waypoint};
use super::trajectory::Trajectory;

/// Negative-pair balance is enforced exactly within blocks of this many pairs.
const BLOCK: usize = 100;

/// Which roster slice a policy trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    /// One roster member by index.
    Single(usize),
    /// The first `n` roster members.
    First(usize),
}

impl Subset {
    /// Parse `small`, `mid`, `large`, or `single:<id>` against a roster.
    pub fn parse(text: &str, roster: &[EmbodimentSpec]) -> Result<Subset> {
        match text {
            "small" => Ok(Subset::First(2.min(roster.len()))),
            "mid" => Ok(Subset::First(4.min(roster.len()))),
            "large" => Ok(Subset::First(roster.len())),
            other => {
                if let Some(id) = other.strip_prefix("single:") {
                    let idx = roster
                        .iter()
                        .position(|spec| spec.id == id)
                        .ok_or_else(|| {
                            Error::InvalidArg(format!("no roster member named {id:?}"))
                        })?;
                    Ok(Subset::Single(idx))
                } else {
                    Err(Error::InvalidArg(format!(
                        "subset must be small, mid, large, or single:<id>; got {other:?}"
                    )))
                }
            }
        }
    }

    /// Roster indices covered by this subset.
    pub fn indices(&self, roster_len: usize) -> Vec<usize> {
        match *self {
            Subset::Single(i) => vec![i.min(roster_len.saturating_sub(1))],
            Subset::First(n) => (0..n.min(roster_len)).collect(),
        }
    }
}

/// Everything the trainer needs for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    /// Roster slot the pair came from.
    pub embodiment_index: usize,
    /// Top speed of that embodiment, kept for unnormalization checks.
    pub alpha: f64,
    pub context: Context,
    pub observation: Observation,
    pub goal: Observation,
    /// Label waypoints from the anchor's own future, in the variant's units.
    pub action: Vec<Waypoint>,
    pub action_variant: ActionVariant,
    /// Temporal-distance label in seconds; `d_max` for negatives.
    pub distance: f64,
    /// Goal drawn from a different trajectory; the action loss is masked.
    pub is_negative: bool,
}

/// Knobs controlling pair extraction; a subset of the dataset config.
#[derive(Debug, Clone, Copy)]
pub struct PairParams {
    pub pairs_per_embodiment: usize,
    pub tau: usize,
    pub stride: usize,
    pub max_horizon: usize,
    pub context_k: usize,
    pub neg_fraction: f64,
    pub d_max: f64,
}

impl PairParams {
    /// Lift the pairing knobs out of a full dataset config.
    pub fn from_dataset(d: &crate::config::DatasetConfig) -> PairParams {
        PairParams {
            pairs_per_embodiment: d.pairs_per_embodiment,
            tau: d.tau,
            stride: d.stride,
            max_horizon: d.max_horizon,
            context_k: d.context_k,
            neg_fraction: d.neg_fraction,
            d_max: d.d_max,
        }
    }
}

/// Draw training pairs for every roster index in `subset`.
///
/// `pools[e]` holds the demonstration trajectories of roster member `e`.
/// Selection depends only on `(seed, e)` and the pool contents, never on the
/// label or context variant, so re-extraction under a different variant keeps
/// the same anchors and goals.
pub fn sample_pairs(
    pools: &[Vec<Trajectory>],
    roster: &[EmbodimentSpec],
    subset: Subset,
    params: &PairParams,
    action_variant: ActionVariant,
    context_variant: ContextVariant,
    seed: u64,
) -> Result<Vec<TrainingPair>> {
    let mut out = Vec::new();
    for e in subset.indices(roster.len()) {
        out.extend(sample_for_embodiment(
            &pools[e],
            &roster[e],
            e,
            params,
            action_variant,
            context_variant,
            seed,
        )?);
    }
    Ok(out)
}

fn sample_for_embodiment(
    pool: &[Trajectory],
    spec: &EmbodimentSpec,
    embodiment_index: usize,
    params: &PairParams,
    action_variant: ActionVariant,
    context_variant: ContextVariant,
    seed: u64,
) -> Result<Vec<TrainingPair>> {
    let reach = params.tau * params.stride;
    // Anchor inventory: every frame whose label window fits the trajectory.
    let mut anchors: Vec<(usize, usize)> = Vec::new();
    for (ti, traj) in pool.iter().enumerate() {
        for i in 0..traj.len().saturating_sub(reach + 1) {
            anchors.push((ti, i));
        }
    }
    if anchors.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no trajectory of {} is long enough for a label window of {} frames",
            spec.id,
            reach + 1
        )));
    }

    let mut rng = rng_for(seed, &[tag::PAIRS, embodiment_index as u64]);
    let mut pairs = Vec::with_capacity(params.pairs_per_embodiment);
    let mut remaining = params.pairs_per_embodiment;
    while remaining > 0 {
        let block_len = remaining.min(BLOCK);
        // Exact negative count per block keeps every long stretch of the
        // stream at the requested fraction.
        let neg_count =
            ((block_len as f64) * params.neg_fraction).round() as usize;
        let mut kinds = vec![false; block_len];
        for slot in kinds.iter_mut().take(neg_count) {
            *slot = true;
        }
        kinds.shuffle(&mut rng);
        for is_negative in kinds {
            pairs.push(draw_pair(
                pool,
                &anchors,
                spec,
                embodiment_index,
                params,
                action_variant,
                context_variant,
                is_negative,
                &mut rng,
            )?);
        }
        remaining -= block_len;
    }
    Ok(pairs)
}

#[allow(clippy::too_many_arguments)]
fn draw_pair(
    pool: &[Trajectory],
    anchors: &[(usize, usize)],
    spec: &EmbodimentSpec,
    embodiment_index: usize,
    params: &PairParams,
    action_variant: ActionVariant,
    context_variant: ContextVariant,
    is_negative: bool,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<TrainingPair> {
    let (ti, i) = anchors[rng.gen_range(0..anchors.len())];
    let traj = &pool[ti];
    let observations = traj.observations();

    let (goal, distance) = if is_negative {
        // Goal from another trajectory of the same embodiment; if the pool
        // has only one, fall back to a frame far outside the horizon.
        let other = if pool.len() > 1 {
            let mut tj = rng.gen_range(0..pool.len() - 1);
            if tj >= ti {
                tj += 1;
            }
            &pool[tj]
        } else {
            traj
        };
        let j = rng.gen_range(0..other.len());
        (other.frames[j].obs.clone(), params.d_max)
    } else {
        let gap_max = params.max_horizon.min(traj.len() - 1 - i);
        let gap = rng.gen_range(1..=gap_max);
        (
            traj.frames[i + gap].obs.clone(),
            traj.frames[i + gap].t - traj.frames[i].t,
        )
    };

    let action = action_labels(traj, i, action_variant, params.tau, params.stride, spec.kinematics)?;
    let context = build_context(&observations, i, context_variant, params.context_k);
    Ok(TrainingPair {
        embodiment_index,
        alpha: spec.alpha,
        context,
        observation: traj.frames[i].obs.clone(),
        goal,
        action,
        action_variant,
        distance,
        is_negative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::labels::Waypoint;
    use crate::data::trajectory::Frame;
    use crate::sim::embodiment::{Command, Kinematics, MountOffset, SensorConfig};
    use crate::sim::pose::Pose;

    fn spec(id: &str, alpha: f64) -> EmbodimentSpec {
        EmbodimentSpec {
            id: id.into(),
            kinematics: Kinematics::DiffDrive,
            alpha,
            max_yaw_rate: 2.0,
            body_radius: 0.2,
            sensor: SensorConfig {
                n_rays: 32,
                fov: 2.0,
                max_range: 5.0,
                mount_offset: MountOffset {
                    forward: 0.0,
                    lateral: 0.0,
                    yaw_bias: 0.0,
                },
                noise_std: 0.0,
            },
            control_rate: 4.0,
        }
    }

    fn fake_traj(len: usize, salt: f64) -> Trajectory {
        let frames = (0..len)
            .map(|i| Frame {
                t: i as f64 * 0.25,
                obs: Observation {
                    ranges: (0..32).map(|r| (r as f64 + salt + i as f64 * 0.01) % 5.0).collect(),
                },
                pose: Pose {
                    x: i as f64 * 0.1 + salt,
                    y: salt * 0.5,
                    yaw: 0.1 * salt,
                },
                cmd: Command::DiffDrive { v: 0.4, omega: 0.0 },
            })
            .collect();
        Trajectory {
            embodiment_id: "fake".into(),
            alpha: 1.0,
            frames,
            world_seed: 0,
            run_seed: 0,
        }
    }

    fn pools(n_embodiments: usize) -> Vec<Vec<Trajectory>> {
        (0..n_embodiments)
            .map(|e| vec![fake_traj(40, e as f64), fake_traj(55, e as f64 + 10.0)])
            .collect()
    }

    fn params() -> PairParams {
        PairParams {
            pairs_per_embodiment: 300,
            tau: 5,
            stride: 2,
            max_horizon: 80,
            context_k: 5,
            neg_fraction: 0.3,
            d_max: 30.0,
        }
    }

    fn roster(n: usize) -> Vec<EmbodimentSpec> {
        (0..n).map(|i| spec(&format!("e{i}"), 1.0 + i as f64)).collect()
    }

    #[test]
    fn negative_fraction_exact_per_block() {
        let pairs = sample_pairs(
            &pools(1),
            &roster(1),
            Subset::First(1),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            3,
        )
        .unwrap();
        assert_eq!(pairs.len(), 300);
        for block in pairs.chunks(100) {
            let negs = block.iter().filter(|p| p.is_negative).count();
            assert_eq!(negs, 30);
        }
    }

    #[test]
    fn subsets_nest_exactly() {
        let pools = pools(3);
        let roster = roster(3);
        let small = sample_pairs(
            &pools,
            &roster,
            Subset::First(2),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            9,
        )
        .unwrap();
        let large = sample_pairs(
            &pools,
            &roster,
            Subset::First(3),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            9,
        )
        .unwrap();
        assert_eq!(small.len(), 600);
        assert_eq!(large.len(), 900);
        assert_eq!(&large[..600], &small[..]);
    }

    #[test]
    fn variant_change_keeps_selection() {
        let pools = pools(1);
        let roster = roster(1);
        let norm = sample_pairs(
            &pools,
            &roster,
            Subset::First(1),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            4,
        )
        .unwrap();
        let raw = sample_pairs(
            &pools,
            &roster,
            Subset::First(1),
            &params(),
            ActionVariant::RawWaypoints,
            ContextVariant::Temporal,
            4,
        )
        .unwrap();
        for (a, b) in norm.iter().zip(&raw) {
            assert_eq!(a.goal, b.goal);
            assert_eq!(a.observation, b.observation);
            assert_eq!(a.distance, b.distance);
            assert_eq!(a.is_negative, b.is_negative);
            // Same waypoints up to the speed scaling.
            for (wa, wb) in a.action.iter().zip(&b.action) {
                let scaled = Waypoint {
                    x: wa.x * a.alpha,
                    y: wa.y * a.alpha,
                    psi: wa.psi,
                };
                assert!((scaled.x - wb.x).abs() < 1e-12);
                assert!((scaled.y - wb.y).abs() < 1e-12);
                assert!((scaled.psi - wb.psi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn positive_distances_match_frame_gaps() {
        let pairs = sample_pairs(
            &pools(1),
            &roster(1),
            Subset::First(1),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            12,
        )
        .unwrap();
        for pair in &pairs {
            if pair.is_negative {
                assert_eq!(pair.distance, 30.0);
            } else {
                assert!(pair.distance > 0.0);
                assert!(pair.distance <= 80.0 * 0.25 + 1e-12);
                // Multiples of the control period.
                let steps = pair.distance / 0.25;
                assert!((steps - steps.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let pools = pools(2);
        let roster = roster(2);
        let a = sample_pairs(
            &pools,
            &roster,
            Subset::First(2),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            77,
        )
        .unwrap();
        let b = sample_pairs(
            &pools,
            &roster,
            Subset::First(2),
            &params(),
            ActionVariant::NormalizedWaypoints,
            ContextVariant::Temporal,
            77,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subset_parsing() {
        let roster = roster(6);
        assert_eq!(Subset::parse("small", &roster).unwrap(), Subset::First(2));
        assert_eq!(Subset::parse("mid", &roster).unwrap(), Subset::First(4));
        assert_eq!(Subset::parse("large", &roster).unwrap(), Subset::First(6));
        assert_eq!(Subset::parse("single:e3", &roster).unwrap(), Subset::Single(3));
        assert!(Subset::parse("single:nope", &roster).is_err());
        assert!(Subset::parse("hugh", &roster).is_err());
    }
}
