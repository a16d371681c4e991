use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, SurvivalRecord};
use crate::error::{Error, Result};
use crate::rng::{SeedStreams, Stream};
use crate::special::{normal_cdf, softplus, softplus_inverse};

/// Synthetic generating processes with known survival functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimKind {
    /// Two groups with crossing survival curves: `S(t|0) = e^{−2t}`,
    /// `S(t|1) = e^{−2t²}`; censoring `U(0, 2)`.
    Crossing,
    /// `LogNormal(0.1, 0.1)`; censoring `U(0, 10)`.
    #[serde(rename = "lognormal")]
    LogNormal,
    /// `softplus` of a Cauchy (Student-t, one degree of freedom) draw.
    StudentTSoftplus,
    /// `Gamma(shape 0.1, scale 1)`.
    Gamma,
}

impl SimKind {
    pub const ALL: [SimKind; 4] = [
        SimKind::Crossing,
        SimKind::LogNormal,
        SimKind::StudentTSoftplus,
        SimKind::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SimKind::Crossing => "crossing",
            SimKind::LogNormal => "lognormal",
            SimKind::StudentTSoftplus => "student_t_softplus",
            SimKind::Gamma => "gamma",
        }
    }

    /// Upper end of the uniform censoring window.
    pub fn censoring_max(self) -> f64 {
        match self {
            SimKind::Crossing => 2.0,
            _ => 10.0,
        }
    }

    /// Covariate values with distinct ground truth.
    pub fn groups(self) -> &'static [f64] {
        match self {
            SimKind::Crossing => &[0.0, 1.0],
            _ => &[0.0],
        }
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown simulation kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub kind: SimKind,
    pub n: usize,
    pub seed: u64,
}

/// Latent draw retained for checking `Δ = I{T ≤ C}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentDraw {
    pub features: Vec<f64>,
    pub event_time: f64,
    pub censor_time: f64,
}

impl LatentDraw {
    pub fn observe(&self) -> SurvivalRecord {
        SurvivalRecord {
            features: self.features.clone(),
            time: self.event_time.min(self.censor_time),
            event: self.event_time <= self.censor_time,
        }
    }
}

/// Anything that can produce fresh i.i.d. batches for online training.
pub trait RecordSource {
    fn num_features(&self) -> usize;
    fn next_batch(&mut self, n: usize) -> Vec<SurvivalRecord>;
}

#[derive(Debug, Clone)]
pub struct Simulator {
    kind: SimKind,
    rng: ChaCha8Rng,
    gamma: Gamma<f64>,
}

impl Simulator {
    pub fn new(kind: SimKind, seed: u64) -> Self {
        Self::from_rng(kind, SeedStreams::new(seed).rng(Stream::Data))
    }

    pub fn from_rng(kind: SimKind, rng: ChaCha8Rng) -> Self {
        Simulator {
            kind,
            rng,
            gamma: Gamma::new(0.1, 1.0).expect("valid gamma parameters"),
        }
    }

    pub fn kind(&self) -> SimKind {
        self.kind
    }

    fn open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    /// An uncensored event time for covariate `x`.
    pub fn event_time(&mut self, x: f64) -> f64 {
        match self.kind {
            SimKind::Crossing => {
                let e = -self.open01().ln() / 2.0;
                if x == 0.0 {
                    e
                } else {
                    e.sqrt()
                }
            }
            SimKind::LogNormal => {
                let z: f64 = self.rng.sample(StandardNormal);
                (0.1 + 0.1 * z).exp()
            }
            SimKind::StudentTSoftplus => loop {
                let a: f64 = self.rng.sample(StandardNormal);
                let b: f64 = self.rng.sample(StandardNormal);
                let t = softplus(a / b);
                if t > 0.0 && t.is_finite() {
                    break t;
                }
            },
            SimKind::Gamma => loop {
                let t = self.gamma.sample(&mut self.rng);
                if t > 0.0 {
                    break t;
                }
            },
        }
    }

    pub fn draw_latent(&mut self) -> LatentDraw {
        let x = match self.kind {
            SimKind::Crossing if self.rng.random_bool(0.5) => 1.0,
            _ => 0.0,
        };
        let event_time = self.event_time(x);
        let censor_time = self.kind.censoring_max() * self.open01();
        LatentDraw {
            features: vec![x],
            event_time,
            censor_time,
        }
    }

    pub fn draw(&mut self) -> SurvivalRecord {
        self.draw_latent().observe()
    }
}

impl RecordSource for Simulator {
    fn num_features(&self) -> usize {
        1
    }

    fn next_batch(&mut self, n: usize) -> Vec<SurvivalRecord> {
        (0..n).map(|_| self.draw()).collect()
    }
}

pub fn simulate(spec: &SimSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::invalid("simulation size must be at least 1"));
    }
    let mut sim = Simulator::new(spec.kind, spec.seed);
    Dataset::with_default_names(sim.next_batch(spec.n), format!("simulate:{}", spec.kind))
}

pub fn simulate_crossing(n: usize, seed: u64) -> Result<Dataset> {
    simulate(&SimSpec {
        kind: SimKind::Crossing,
        n,
        seed,
    })
}

pub fn simulate_appendix(kind: SimKind, n: usize, seed: u64) -> Result<Dataset> {
    if kind == SimKind::Crossing {
        return Err(Error::invalid("crossing is not a marginal generator"));
    }
    simulate(&SimSpec { kind, n, seed })
}

/// Exact `S(t|x)` of a generator.
pub fn ground_truth_survival(kind: SimKind, x: f64, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(match kind {
        SimKind::Crossing => {
            if x == 0.0 {
                (-2.0 * t).exp()
            } else if x == 1.0 {
                (-2.0 * t * t).exp()
            } else {
                return Err(Error::invalid(format!("crossing covariate must be 0 or 1, got {x}")));
            }
        }
        SimKind::LogNormal => normal_cdf(-(t.ln() - 0.1) / 0.1),
        SimKind::StudentTSoftplus => 0.5 - softplus_inverse(t).atan() / std::f64::consts::PI,
        SimKind::Gamma => statrs::function::gamma::gamma_ur(0.1, t),
    })
}
