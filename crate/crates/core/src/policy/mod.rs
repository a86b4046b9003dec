//! Policy network, loss, optimizer, and parameter persistence.

pub mod io;
pub mod loss;
pub mod net;
pub mod train;

pub use io::{load_policy, policy_fingerprint, save_policy, PolicyProvenance};
pub use loss::{sample_loss, sample_loss_and_grads, LossTerms, PolicyGrads, Target};
pub use net::{scaled_features, Policy, PolicyMeta, Prediction, INPUT_SCALE};
pub use train::{train_policy, Adam, TrainReport};
