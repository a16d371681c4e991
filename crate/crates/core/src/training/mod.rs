//! Maximum-likelihood training: RMSProp, mini-batch epochs with early
//! stopping, the online protocol, and random hyperparameter search.

mod config;
mod fit;
mod gradient;
mod online;
mod optimizer;
mod search;

pub use config::{RunConfig, TrainConfig};
pub use fit::{train, EpochRecord, StopReason, TrainOutcome};
pub use gradient::{batch_gradient, clip_global_norm, BatchGradient, CLIP_NORM};
pub use online::{train_online, OnlineOutcome};
pub use optimizer::{rmsprop_step, RmsPropState, RMSPROP_EPS, RMSPROP_RHO};
pub use search::{random_search, Choice, Interval, SearchReport, SearchSpace, TrialResult};
