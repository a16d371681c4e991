//! Exhaustive-enumeration reference implementations of the evaluation
//! metrics, written directly from their definitions.

use survmdn::data::SurvivalRecord;

/// `Ĝ(t)` by direct product over censoring times `s <= t` (or `s < t`
/// when `strict`).
pub fn g_hat(records: &[SurvivalRecord], t: f64, strict: bool) -> f64 {
    let mut times: Vec<f64> = records.iter().filter(|r| !r.event).map(|r| r.time).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut g = 1.0;
    for s in times {
        if (strict && s < t) || (!strict && s <= t) {
            let d = records.iter().filter(|r| !r.event && r.time == s).count();
            let n = records.iter().filter(|r| r.time >= s).count();
            g *= (n - d) as f64 / n as f64;
        }
    }
    g
}

pub fn concordance(records: &[SurvivalRecord], s: &dyn Fn(f64, usize) -> f64, tau: f64) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, ri) in records.iter().enumerate() {
        for (j, rj) in records.iter().enumerate() {
            if ri.event && ri.time < tau && ri.time < rj.time {
                let w = 1.0 / g_hat(records, ri.time, true).powi(2);
                den += w;
                let (a, b) = (s(ri.time, i), s(ri.time, j));
                if a < b {
                    num += w;
                } else if a == b {
                    num += 0.5 * w;
                }
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

pub fn brier(records: &[SurvivalRecord], s: &dyn Fn(f64, usize) -> f64, t: f64) -> f64 {
    let mut total = 0.0;
    for (i, r) in records.iter().enumerate() {
        let p = s(t, i);
        if r.time <= t && r.event {
            total += p * p / g_hat(records, r.time, true);
        }
        if r.time > t {
            total += (1.0 - p) * (1.0 - p) / g_hat(records, t, false);
        }
    }
    total / records.len() as f64
}

pub fn bll(records: &[SurvivalRecord], s: &dyn Fn(f64, usize) -> f64, t: f64) -> f64 {
    let mut total = 0.0;
    for (i, r) in records.iter().enumerate() {
        let p = s(t, i).clamp(1e-12, 1.0 - 1e-12);
        if r.time <= t && r.event {
            total += (1.0 - p).ln() / g_hat(records, r.time, true);
        }
        if r.time > t {
            total += p.ln() / g_hat(records, t, false);
        }
    }
    total / records.len() as f64
}
