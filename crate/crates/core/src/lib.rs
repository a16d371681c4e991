//! Survival mixture density networks.
//!
//! A neural network maps covariates to the weights, locations and scales of
//! a mixture over the real line; samples are pushed through `softplus` to
//! give strictly positive event times. Density and CDF stay closed-form, so
//! the right-censored log-likelihood can be maximized directly.
//!
//! Modules:
//! - [`autodiff`]: scalar reverse-mode AD used for training
//! - [`distributions`]: Gaussian and generalized-logistic bases
//! - [`mdn`]: the network, mixture evaluation and the censored likelihood
//! - [`training`]: RMSProp, early stopping, online training, random search
//! - [`metrics`]: Kaplan–Meier censoring weights and IPCW concordance,
//!   Brier score and binomial log-likelihood
//! - [`data`]: CSV ingestion, splitting, standardization and simulators

pub mod autodiff;
pub mod data;
pub mod distributions;
pub mod error;
pub mod mdn;
pub mod metrics;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod training;

pub use error::{Error, Result};
