//! Closed-loop evaluation: episodes, degradations, experiment suites, and
//! report files.

pub mod degradation;
pub mod episode;
pub mod experiment;
pub mod report;

pub use degradation::Degradation;
pub use episode::{run_episode, EpisodeResult};
pub use experiment::{
    ablation_arms, degradation_arms, degradation_variants, generalization_arms, AblationKind, Arm,
    EvalWorld, Harness,
};
pub use report::{summarize, ExperimentReport, ReportRow};
