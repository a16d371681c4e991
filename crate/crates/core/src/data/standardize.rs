use serde::{Deserialize, Serialize};

use super::SurvivalRecord;
use crate::error::{Error, Result};

const MIN_STD: f64 = 1e-12;

/// Per-feature affine standardization fit on the training split.
/// Columns with standard deviation below `1e-12` map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Population mean and standard deviation per column.
    pub fn fit(records: &[SurvivalRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::invalid("cannot fit a standardizer on no records"))?;
        let d = first.features.len();
        let n = records.len() as f64;
        let mut mean = vec![0.0; d];
        for r in records {
            if r.features.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: r.features.len(),
                });
            }
            for (m, x) in mean.iter_mut().zip(&r.features) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in records {
            for ((v, x), m) in var.iter_mut().zip(&r.features).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| if s < MIN_STD { 0.0 } else { (v - m) / s })
            .collect())
    }

    /// Inverse transform; constant columns recover their mean.
    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z.len())?;
        Ok(z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| if s < MIN_STD { m } else { v * s + m })
            .collect())
    }

    pub fn apply_records(&self, records: &[SurvivalRecord]) -> Result<Vec<SurvivalRecord>> {
        records
            .iter()
            .map(|r| {
                Ok(SurvivalRecord {
                    features: self.apply(&r.features)?,
                    time: r.time,
                    event: r.event,
                })
            })
            .collect()
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual,
            });
        }
        Ok(())
    }
}
