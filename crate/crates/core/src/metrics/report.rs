use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{bll, brier, concordance_td, integrate_metric, km_censoring, truncation_time, SurvivalPredictor};
use crate::data::SurvivalRecord;
use crate::error::{Error, Result};

pub const DEFAULT_LEVELS: [f64; 3] = [1e-8, 0.2, 0.4];
pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    /// Target value of the censoring survival at `tau`.
    pub level: f64,
    pub tau: f64,
    pub concordance: f64,
    pub ibll: f64,
    pub ibs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub grid_size: usize,
    pub levels: Vec<LevelMetrics>,
}

/// All metrics at each truncation level, with the censoring curve fitted
/// on `records` themselves.
pub fn evaluate<P: SurvivalPredictor + ?Sized>(
    records: &[SurvivalRecord],
    predictor: &P,
    levels: &[f64],
    grid_size: usize,
) -> Result<MetricsReport> {
    if levels.is_empty() {
        return Err(Error::invalid("at least one truncation level is required"));
    }
    let times: Vec<f64> = records.iter().map(|r| r.time).collect();
    let events: Vec<bool> = records.iter().map(|r| r.event).collect();
    let km = km_censoring(&times, &events)?;
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let tau = truncation_time(&km, &times, level)?;
        out.push(LevelMetrics {
            level,
            tau,
            concordance: concordance_td(records, predictor, &km, tau)?,
            ibll: integrate_metric(|t| bll(t, records, predictor, &km), tau, grid_size)?,
            ibs: integrate_metric(|t| brier(t, records, predictor, &km), tau, grid_size)?,
        });
    }
    Ok(MetricsReport {
        grid_size,
        levels: out,
    })
}

impl MetricsReport {
    /// One row per metric, one column per level.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<8}", "metric");
        for l in &self.levels {
            let label = if l.level < 1e-3 { format!("G={:e}", l.level) } else { format!("G={}", l.level) };
            let _ = write!(s, " {label:>12}");
        }
        s.push('\n');
        type Getter = fn(&LevelMetrics) -> f64;
        let rows: [(&str, Getter); 4] = [
            ("tau", |l| l.tau),
            ("C_td", |l| l.concordance),
            ("IBLL", |l| l.ibll),
            ("IBS", |l| l.ibs),
        ];
        for (name, get) in rows {
            let _ = write!(s, "{name:<8}");
            for l in &self.levels {
                let _ = write!(s, " {:>12.6}", get(l));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_predictor_on_uncensored_data() {
        let rs: Vec<SurvivalRecord> = (1..=20)
            .map(|i| SurvivalRecord {
                features: vec![i as f64],
                time: i as f64 * 0.1,
                event: true,
            })
            .collect();
        let p = |t: f64, j: usize| if rs[j].time > t { 1.0 - t / 10.0 } else { 0.0 };
        let report = evaluate(&rs, &p, &DEFAULT_LEVELS, DEFAULT_GRID).unwrap();
        assert_eq!(report.levels.len(), 3);
        for l in &report.levels {
            assert_eq!(l.concordance, 1.0);
            assert!(l.ibll <= 0.0 && (0.0..=1.0).contains(&l.ibs));
        }
        let one = evaluate(&rs, &p, &[1e-8], DEFAULT_GRID).unwrap();
        assert_eq!(one.levels.len(), 1);
        let table = report.to_table();
        assert_eq!(table.lines().count(), 5);
        assert!(table.contains("C_td"));
    }
}
