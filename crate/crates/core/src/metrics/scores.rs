use rayon::prelude::*;

use super::{canonical_sum, KmCurve};
use crate::data::SurvivalRecord;
use crate::error::{Error, Result};
use crate::mdn::{MixtureParams, TrainedModel};

/// Clamp applied to predicted survival inside logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

/// `Ŝ(t | x_j)` for the `j`-th evaluation record.
pub trait SurvivalPredictor: Sync {
    fn survival(&self, t: f64, record: usize) -> f64;
}

impl<F: Fn(f64, usize) -> f64 + Sync> SurvivalPredictor for F {
    fn survival(&self, t: f64, record: usize) -> f64 {
        self(t, record)
    }
}

/// Survival predictions of a model, with one network pass per record
/// done up front.
#[derive(Debug, Clone)]
pub struct MixturePredictor {
    mixtures: Vec<MixtureParams>,
}

impl MixturePredictor {
    pub fn new(model: &TrainedModel, records: &[SurvivalRecord]) -> Result<Self> {
        let xs: Vec<&[f64]> = records.iter().map(|r| r.features.as_slice()).collect();
        Ok(MixturePredictor {
            mixtures: model.mixtures(&xs)?,
        })
    }
}

impl SurvivalPredictor for MixturePredictor {
    fn survival(&self, t: f64, record: usize) -> f64 {
        self.mixtures[record].survival(t)
    }
}

fn weight(g: f64, what: &str, at: f64) -> Result<f64> {
    if g > 0.0 {
        Ok(1.0 / g)
    } else {
        Err(Error::UndefinedMetric(format!(
            "censoring survival is zero at {what} {at}; choose a smaller truncation time"
        )))
    }
}

/// Truncated IPCW time-dependent concordance.
///
/// Ordered pairs `(i, j)` with `Δ_i = 1`, `u_i < τ` and `u_i < u_j` are
/// comparable with weight `1/Ĝ(u_i⁻)²`; a pair is concordant when
/// `Ŝ(u_i|x_i) < Ŝ(u_i|x_j)` and ties count one half.
pub fn concordance_td<P: SurvivalPredictor + ?Sized>(
    records: &[SurvivalRecord],
    predictor: &P,
    km: &KmCurve,
    tau: f64,
) -> Result<f64> {
    let per_i: Vec<Result<Option<(f64, f64)>>> = (0..records.len())
        .into_par_iter()
        .map(|i| {
            let ri = &records[i];
            if !ri.event || !(ri.time < tau) {
                return Ok(None);
            }
            let mut comparable = 0u64;
            // twice the concordant count, so ties stay integral
            let mut twice_concordant = 0u64;
            let si = predictor.survival(ri.time, i);
            for (j, rj) in records.iter().enumerate() {
                if ri.time < rj.time {
                    let sj = predictor.survival(ri.time, j);
                    comparable += 1;
                    if si < sj {
                        twice_concordant += 2;
                    } else if si == sj {
                        twice_concordant += 1;
                    }
                }
            }
            if comparable == 0 {
                return Ok(None);
            }
            let w = weight(km.left_limit(ri.time), "event time", ri.time)?;
            let w2 = w * w;
            Ok(Some((w2 * (twice_concordant as f64 / 2.0), w2 * comparable as f64)))
        })
        .collect();
    let mut num = Vec::new();
    let mut den = Vec::new();
    for r in per_i {
        if let Some((n, d)) = r? {
            num.push(n);
            den.push(d);
        }
    }
    if den.is_empty() {
        return Err(Error::UndefinedMetric("concordance has no comparable pairs".into()));
    }
    Ok(canonical_sum(num) / canonical_sum(den))
}

// Per-record IPCW terms `(event term weight, survivor weight)` at time t.
fn pointwise<P, F>(t: f64, records: &[SurvivalRecord], predictor: &P, km: &KmCurve, term: F) -> Result<f64>
where
    P: SurvivalPredictor + ?Sized,
    F: Fn(f64, bool) -> f64,
{
    if records.is_empty() {
        return Err(Error::invalid("no records to evaluate"));
    }
    let mut terms = Vec::with_capacity(records.len());
    let mut g_t = None;
    for (i, r) in records.iter().enumerate() {
        if r.time <= t && r.event {
            let w = weight(km.left_limit(r.time), "event time", r.time)?;
            terms.push(term(predictor.survival(t, i), false) * w);
        } else if r.time > t {
            let w = match g_t {
                Some(w) => w,
                None => *g_t.insert(weight(km.value(t), "time", t)?),
            };
            terms.push(term(predictor.survival(t, i), true) * w);
        }
    }
    Ok(canonical_sum(terms) / records.len() as f64)
}

/// IPCW Brier score at `t`.
pub fn brier<P: SurvivalPredictor + ?Sized>(
    t: f64,
    records: &[SurvivalRecord],
    predictor: &P,
    km: &KmCurve,
) -> Result<f64> {
    pointwise(t, records, predictor, km, |s, alive| {
        let miss = if alive { 1.0 - s } else { s };
        miss * miss
    })
}

/// IPCW binomial log-likelihood at `t`.
pub fn bll<P: SurvivalPredictor + ?Sized>(
    t: f64,
    records: &[SurvivalRecord],
    predictor: &P,
    km: &KmCurve,
) -> Result<f64> {
    pointwise(t, records, predictor, km, |s, alive| {
        let s = s.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
        if alive {
            s.ln()
        } else {
            (1.0 - s).ln()
        }
    })
}

/// `(1/τ) ∫ m(t) dt` by the trapezoid rule on `grid` uniform points over
/// `[τ/grid, τ]`.
pub fn integrate_metric<F>(mut metric: F, tau: f64, grid: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("integration needs a positive tau, got {tau}")));
    }
    if grid < 2 {
        return Err(Error::invalid("integration grid needs at least two points"));
    }
    let lo = tau / grid as f64;
    let h = (tau - lo) / (grid - 1) as f64;
    let mut ys = Vec::with_capacity(grid);
    for k in 0..grid {
        let t = if k + 1 == grid { tau } else { lo + k as f64 * h };
        let y = metric(t)?;
        if !y.is_finite() {
            return Err(Error::Numerical(format!("metric is {y} at t = {t}")));
        }
        ys.push(y);
    }
    let inner: f64 = ys[1..grid - 1].iter().sum();
    Ok(h * (inner + 0.5 * (ys[0] + ys[grid - 1])) / tau)
}
