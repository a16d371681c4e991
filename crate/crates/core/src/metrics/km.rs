use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous product-limit step function with value 1 before the
/// first jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmCurve {
    /// Distinct times with at least one counted event, ascending.
    pub times: Vec<f64>,
    /// Estimate on `[times[k], times[k+1])`.
    pub values: Vec<f64>,
    /// Largest observed time in the fitted sample.
    pub max_time: f64,
}

impl KmCurve {
    /// `Ĝ(t)`, counting jumps at times `≤ t`.
    pub fn value(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }

    /// `Ĝ(t⁻)`, counting jumps at times `< t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }
}

fn check(times: &[f64], flags: &[bool]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("Kaplan-Meier needs at least one observation"));
    }
    if times.len() != flags.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: flags.len(),
        });
    }
    if let Some(t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(Error::Domain(format!("observed times must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Product-limit estimate of `P(T > t)` where `events[i]` marks an
/// observed event.
pub fn kaplan_meier(times: &[f64], events: &[bool]) -> Result<KmCurve> {
    check(times, events)?;
    let mut obs: Vec<(f64, bool)> = times.iter().copied().zip(events.iter().copied()).collect();
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut curve = KmCurve {
        times: Vec::new(),
        values: Vec::new(),
        max_time: obs[obs.len() - 1].0,
    };
    let mut s = 1.0;
    let mut at_risk = obs.len();
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let mut j = i;
        let mut d = 0;
        while j < obs.len() && obs[j].0 == t {
            d += usize::from(obs[j].1);
            j += 1;
        }
        if d > 0 {
            s *= (at_risk - d) as f64 / at_risk as f64;
            curve.times.push(t);
            curve.values.push(s);
        }
        at_risk -= j - i;
        i = j;
    }
    Ok(curve)
}

/// Estimate of the censoring survival `G(t) = P(C > t)`: censorings play
/// the role of events.
pub fn km_censoring(times: &[f64], events: &[bool]) -> Result<KmCurve> {
    let censored: Vec<bool> = events.iter().map(|e| !e).collect();
    kaplan_meier(times, &censored)
}

/// Largest observed time `τ` with `Ĝ(τ) > level`.
pub fn truncation_time(km: &KmCurve, times: &[f64], level: f64) -> Result<f64> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::invalid(format!("truncation level must lie in (0, 1], got {level}")));
    }
    times
        .iter()
        .copied()
        .filter(|&t| km.value(t) > level)
        .max_by(f64::total_cmp)
        .ok_or_else(|| {
            Error::UndefinedMetric(format!("no observed time has censoring survival above {level}"))
        })
}
