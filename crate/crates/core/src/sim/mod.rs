//! Deterministic 2D continuous-space simulation: worlds, kinematics,
//! sensing, and collision checking.

pub mod dynamics;
pub mod embodiment;
pub mod grid;
pub mod pose;
pub mod sensor;
pub mod world;
pub mod worldgen;

pub use dynamics::step_dynamics;
pub use embodiment::{Command, EmbodimentSpec, Kinematics, MountOffset, SensorConfig};
pub use pose::{normalize_angle, Pose};
pub use sensor::{render_observation, Observation};
pub use world::{check_collision, Difficulty, Obstacle, WorldMap};
pub use worldgen::{generate_world, WorldGenParams};
