//! gnm-sim: a desk-scale study of multi-embodiment navigation policies.
//!
//! The crate simulates a fleet of heterogeneous 2D robots, generates expert
//! trajectory datasets, trains a goal-conditioned waypoint policy on a
//! speed-normalized shared action space, deploys it through topological-map
//! navigation, and ships an experiment harness that measures how dataset
//! diversity, action-space choice, embodiment context, and architecture
//! affect generalization to an unseen robot.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod hash;
pub mod nav;
pub mod policy;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
