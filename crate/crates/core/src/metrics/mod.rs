//! Censoring-aware evaluation: the Kaplan–Meier estimate of the censoring
//! distribution, inverse-probability-weighted time-dependent concordance,
//! Brier score and binomial log-likelihood, and their time integrals.
//!
//! Every sum is accumulated over terms sorted by value, so reordering the
//! test records leaves results bit-identical.

mod km;
mod report;
mod scores;

pub use km::{kaplan_meier, km_censoring, truncation_time, KmCurve};
pub use report::{evaluate, LevelMetrics, MetricsReport, DEFAULT_GRID, DEFAULT_LEVELS};
pub use scores::{bll, brier, concordance_td, integrate_metric, MixturePredictor, SurvivalPredictor, LOG_CLAMP};

/// Sum of terms in a canonical order.
pub(crate) fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}
