//! Demonstration data: trajectory logs, scripted experts, labels, contexts.

pub mod context;
pub mod expert;
pub mod labels;
pub mod manifest;
pub mod pairs;
pub mod trajectory;

pub use context::{build_context, Context, ContextVariant};
pub use expert::collect_trajectory;
pub use labels::{
    action_labels, distance_label, normalize_action, relative_waypoints, unnormalize_action,
    ActionVariant, Waypoint,
};
pub use manifest::{generate_dataset, load_dataset, DatasetManifest, ManifestEntry};
pub use pairs::{sample_pairs, PairParams, Subset, TrainingPair};
pub use trajectory::{Frame, Trajectory};
