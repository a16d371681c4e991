#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use survmdn::data::SurvivalRecord;
use survmdn::mdn::{Base, MdnConfig, MixtureParams, SurvivalMdn};
use survmdn::quadrature::adaptive_trapezoid;

pub fn small_config(base: Base, k: usize, hidden: usize) -> MdnConfig {
    MdnConfig {
        num_components: k,
        backbone_hidden: vec![hidden, hidden],
        head_hidden: vec![hidden],
        base,
        ..MdnConfig::default()
    }
}

/// A freshly initialized model with every parameter jittered so heads are
/// input dependent.
pub fn random_model(seed: u64, dim: usize, cfg: &MdnConfig, noise: f64) -> SurvivalMdn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = SurvivalMdn::new(dim, cfg, &mut rng).unwrap();
    m.perturb_params(&mut rng, noise);
    m
}

pub fn random_records(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<SurvivalRecord> {
    (0..n)
        .map(|_| SurvivalRecord {
            features: (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect(),
            time: rng.random_range(0.05..4.0),
            event: rng.random_bool(0.6),
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Relative gap between a central difference of the CDF and the density.
pub fn density_cdf_gap(mix: &MixtureParams, t: f64) -> f64 {
    let h = 1e-4 * t;
    let fd = (mix.event_cdf(t + h) - mix.event_cdf(t - h)) / (2.0 * h);
    let p = mix.log_event_density(t).unwrap().exp();
    (fd - p).abs() / p.max(1.0)
}

/// `∫ p(t) dt` over `[T_lo, T_hi]` with `T_lo <= 1e-8` and negligible
/// mass outside, substituting `t = e^s`.
pub fn total_mass(mix: &MixtureParams) -> f64 {
    let mut lo = 1e-8;
    while mix.event_cdf(lo) >= 1e-7 {
        lo *= 1e-3;
    }
    let mut hi = 1.0;
    while mix.event_cdf(hi) <= 1.0 - 1e-6 {
        hi *= 2.0;
    }
    adaptive_trapezoid(
        |s| {
            let t = s.exp();
            (mix.log_event_density(t).unwrap() + s).exp()
        },
        lo.ln(),
        hi.ln(),
        1e-6,
        8,
        24,
    )
}

pub mod oracle;

