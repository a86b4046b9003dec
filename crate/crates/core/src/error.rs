//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the simulation, data, policy, and navigation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value was NaN or infinite where a finite value is required.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// A command exceeded the embodiment's actuation limits.
    #[error("command exceeds embodiment limits: {0}")]
    CommandLimit(String),

    /// A caller violated an argument contract (ranges, dimensions, ordering).
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    /// No feasible expert path exists for the requested world/endpoint pair.
    #[error("no feasible path between the requested endpoints")]
    Infeasible,

    /// The world generator exhausted its retry budget without satisfying
    /// the difficulty constraints.
    #[error("world generation failed after {attempts} attempts: {reason}")]
    WorldGen { attempts: u32, reason: String },

    /// A dataset, params, or graph file did not match the expected schema
    /// or magic bytes.
    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: String, found: String },

    /// A parameter file's layout does not match the requested policy config.
    #[error("parameter layout mismatch: {0}")]
    LayoutMismatch(String),

    /// A topological graph was built with different policy parameters than
    /// the ones supplied for navigation.
    #[error("graph/policy fingerprint mismatch: graph={graph:016x}, params={params:016x}")]
    FingerprintMismatch { graph: u64, params: u64 },

    /// Dijkstra found no route between the requested nodes.
    #[error("goal node unreachable from start node")]
    Unreachable,

    /// The selected dataset subset contains no trajectories.
    #[error("empty dataset selection: {0}")]
    EmptySelection(String),

    /// Activations became non-finite during training.
    #[error("non-finite activation during {stage} (batch item {item})")]
    NonFiniteActivation { stage: &'static str, item: usize },

    /// A required file is missing or a referenced artifact does not exist.
    #[error("missing artifact: {0}")]
    Missing(String),

    /// Malformed file contents (CSV fields, truncated binary, bad JSON).
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code class for the CLI: 1 for usage-level problems (bad files,
    /// bad flags, bad config), 2 for violated runtime invariants.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FingerprintMismatch { .. }
            | Error::NonFiniteActivation { .. }
            | Error::WorldGen { .. } => 2,
            _ => 1,
        }
    }
}
