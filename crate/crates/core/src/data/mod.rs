//! Survival records, CSV ingestion, splitting, standardization and the
//! synthetic generators with closed-form ground truth.

mod io;
mod simulate;
mod split;
mod standardize;

pub use io::{load_csv, parse_csv, parse_feature_rows, write_csv};
pub use simulate::{
    ground_truth_survival, simulate, simulate_appendix, simulate_crossing, LatentDraw, RecordSource,
    SimKind, SimSpec, Simulator,
};
pub use split::{split, Splits};
pub use standardize::Standardizer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One right-censored observation `(x, U = min(T, C), Δ = I{T ≤ C})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub features: Vec<f64>,
    pub time: f64,
    pub event: bool,
}

impl SurvivalRecord {
    pub fn new(features: Vec<f64>, time: f64, event: bool) -> Result<Self> {
        if !(time > 0.0) || !time.is_finite() {
            return Err(Error::invalid(format!("observed time must be positive and finite, got {time}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(SurvivalRecord { features, time, event })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<SurvivalRecord>,
    pub feature_names: Vec<String>,
    /// Free-form origin label, e.g. a file path or generator name.
    pub provenance: String,
}

impl Dataset {
    pub fn new(records: Vec<SurvivalRecord>, feature_names: Vec<String>, provenance: impl Into<String>) -> Result<Self> {
        let d = feature_names.len();
        if let Some((i, r)) = records.iter().enumerate().find(|(_, r)| r.features.len() != d) {
            return Err(Error::Parse {
                row: i + 1,
                message: format!("expected {d} features, found {}", r.features.len()),
            });
        }
        Ok(Dataset {
            records,
            feature_names,
            provenance: provenance.into(),
        })
    }

    /// Dataset with generated feature names `x_0..x_{d-1}`.
    pub fn with_default_names(records: Vec<SurvivalRecord>, provenance: impl Into<String>) -> Result<Self> {
        let d = records.first().map_or(0, |r| r.features.len());
        Self::new(records, default_feature_names(d), provenance)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    /// Training needs at least one uncensored record; otherwise the
    /// likelihood has no density terms.
    pub fn ensure_trainable(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::invalid(format!("dataset '{}' is empty", self.provenance)));
        }
        if self.num_events() == 0 {
            return Err(Error::invalid(format!(
                "dataset '{}' has no uncensored records",
                self.provenance
            )));
        }
        Ok(())
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.num_events() as f64 / self.len() as f64
    }
}

pub fn default_feature_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x_{i}")).collect()
}
