use std::cmp::Ordering;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, TrainConfig, TrainOutcome};
use crate::data::Splits;
use crate::error::{Error, Result};
use crate::mdn::{Activation, Base, MdnConfig};
use crate::rng::{SeedStreams, Stream};

/// A continuous sampling range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Interval {
    Uniform { lo: f64, hi: f64 },
    /// Uniform in `log10`, bounds given on the natural scale.
    LogUniform { lo: f64, hi: f64 },
}

impl Interval {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Interval::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Interval::LogUniform { lo, hi } => {
                let (a, b) = (lo.log10(), hi.log10());
                10f64.powf(a + (b - a) * rng.random::<f64>()).clamp(lo, hi)
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let (lo, hi, positive) = match *self {
            Interval::Uniform { lo, hi } => (lo, hi, false),
            Interval::LogUniform { lo, hi } => (lo, hi, true),
        };
        if !lo.is_finite() || !hi.is_finite() || lo > hi || (positive && lo <= 0.0) {
            return Err(Error::invalid(format!("invalid range for {name}: [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Categorical choices.
pub type Choice<T> = Vec<T>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpace {
    pub trials: usize,
    pub batch_size: Choice<usize>,
    /// Width shared by every hidden layer of a trial.
    pub hidden_size: Choice<usize>,
    pub backbone_layers: Choice<usize>,
    pub head_hidden_layers: Choice<usize>,
    pub learning_rate: Interval,
    pub weight_decay: Interval,
    pub momentum: Interval,
    pub dropout: Choice<f64>,
    pub batch_norm: Choice<bool>,
    pub num_components: Choice<usize>,
    pub base: Choice<Base>,
    pub activation: Choice<Activation>,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            trials: 100,
            batch_size: vec![32, 64, 128, 256],
            hidden_size: (2..=7).map(|e| 1 << e).collect(),
            backbone_layers: vec![3],
            head_hidden_layers: vec![2],
            learning_rate: Interval::LogUniform {
                lo: 10f64.powf(-4.5),
                hi: 10f64.powf(-1.5),
            },
            weight_decay: Interval::LogUniform { lo: 1e-9, hi: 1e-4 },
            momentum: Interval::Uniform { lo: 0.85, hi: 0.99 },
            dropout: vec![0.0, 0.1, 0.5],
            batch_norm: vec![true, false],
            num_components: (5..=20).collect(),
            base: vec![Base::Gaussian],
            activation: vec![Activation::Tanh],
            max_epochs: 512,
            patience: 16,
        }
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(xs: &[T], rng: &mut R) -> T {
    *xs.choose(rng).expect("validated non-empty")
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("search needs at least one trial"));
        }
        let empty = [
            ("batch_size", self.batch_size.is_empty()),
            ("hidden_size", self.hidden_size.is_empty()),
            ("backbone_layers", self.backbone_layers.is_empty()),
            ("head_hidden_layers", self.head_hidden_layers.is_empty()),
            ("dropout", self.dropout.is_empty()),
            ("batch_norm", self.batch_norm.is_empty()),
            ("num_components", self.num_components.is_empty()),
            ("base", self.base.is_empty()),
            ("activation", self.activation.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::invalid(format!("search choice '{name}' is empty")));
        }
        self.learning_rate.validate("learning_rate")?;
        self.weight_decay.validate("weight_decay")?;
        self.momentum.validate("momentum")?;
        let (lr_lo, _) = bounds(&self.learning_rate);
        let (mo_lo, mo_hi) = bounds(&self.momentum);
        let (wd_lo, _) = bounds(&self.weight_decay);
        if lr_lo <= 0.0 || mo_lo < 0.0 || mo_hi >= 1.0 || wd_lo < 0.0 {
            return Err(Error::invalid("search ranges allow invalid training configurations"));
        }
        for &batch_size in &self.batch_size {
            TrainConfig {
                batch_size,
                max_epochs: self.max_epochs,
                ..TrainConfig::default()
            }
            .validate()?;
        }
        for &width in &self.hidden_size {
            for &layers in &self.backbone_layers {
                for &head in &self.head_hidden_layers {
                    MdnConfig {
                        backbone_hidden: vec![width; layers],
                        head_hidden: vec![width; head],
                        ..MdnConfig::default()
                    }
                    .validate()?;
                }
            }
        }
        for &num_components in &self.num_components {
            MdnConfig {
                num_components,
                ..MdnConfig::default()
            }
            .validate()?;
        }
        for &dropout in &self.dropout {
            MdnConfig {
                dropout,
                ..MdnConfig::default()
            }
            .validate()?;
        }
        Ok(())
    }

    /// Draws one configuration.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> (MdnConfig, TrainConfig) {
        let width = pick(&self.hidden_size, rng);
        let layers = pick(&self.backbone_layers, rng);
        let head_layers = pick(&self.head_hidden_layers, rng);
        let model = MdnConfig {
            num_components: pick(&self.num_components, rng),
            backbone_hidden: vec![width; layers],
            head_hidden: vec![width; head_layers],
            base: pick(&self.base, rng),
            activation: pick(&self.activation, rng),
            dropout: pick(&self.dropout, rng),
            batch_norm: pick(&self.batch_norm, rng),
        };
        let train = TrainConfig {
            learning_rate: self.learning_rate.sample(rng),
            weight_decay: self.weight_decay.sample(rng),
            momentum: self.momentum.sample(rng),
            batch_size: pick(&self.batch_size, rng),
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
        };
        (model, train)
    }
}

fn bounds(i: &Interval) -> (f64, f64) {
    match *i {
        Interval::Uniform { lo, hi } | Interval::LogUniform { lo, hi } => (lo, hi),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub index: usize,
    pub model: MdnConfig,
    pub train: TrainConfig,
    pub best_val_nll: Option<f64>,
    pub epochs_run: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    /// Ranked by best validation NLL; failed trials last, ties by index.
    pub trials: Vec<TrialResult>,
    /// The outcome of the top-ranked successful trial.
    pub best: Option<TrainOutcome>,
}

/// Trains `space.trials` independently sampled configurations in parallel.
/// Trial `i` draws its configuration and training seed from its own child
/// stream, so results do not depend on scheduling.
pub fn random_search(space: &SearchSpace, splits: &Splits, seed: u64) -> Result<SearchReport> {
    space.validate()?;
    let streams = SeedStreams::new(seed);
    let mut runs: Vec<(TrialResult, Option<TrainOutcome>)> = (0..space.trials)
        .into_par_iter()
        .map(|index| {
            let trial_seed = streams.child_seed(Stream::Search, index as u64);
            let mut rng: ChaCha8Rng = SeedStreams::new(trial_seed).rng(Stream::Search);
            let (model, train_cfg) = space.sample(&mut rng, trial_seed);
            let mut result = TrialResult {
                index,
                model: model.clone(),
                train: train_cfg.clone(),
                best_val_nll: None,
                epochs_run: 0,
                error: None,
            };
            match train(splits, &model, &train_cfg) {
                Ok(outcome) => {
                    result.best_val_nll = Some(outcome.best_val_nll());
                    result.epochs_run = outcome.model.metadata.epochs_run;
                    if let super::StopReason::NonFinite { message, .. } = &outcome.stop {
                        result.error = Some(message.clone());
                    }
                    (result, Some(outcome))
                }
                Err(e) => {
                    result.error = Some(e.to_string());
                    (result, None)
                }
            }
        })
        .collect();
    runs.sort_by(|(a, _), (b, _)| rank(a, b));
    let best = runs.iter_mut().find_map(|(_, o)| o.take());
    Ok(SearchReport {
        trials: runs.into_iter().map(|(r, _)| r).collect(),
        best,
    })
}

fn rank(a: &TrialResult, b: &TrialResult) -> Ordering {
    let key = |r: &TrialResult| r.best_val_nll.filter(|v| v.is_finite());
    match (key(a), key(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    }
}
