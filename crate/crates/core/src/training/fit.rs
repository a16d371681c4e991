use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{batch_gradient, clip_global_norm, rmsprop_step, RmsPropState, TrainConfig, CLIP_NORM};
use crate::data::{Splits, Standardizer, SurvivalRecord};
use crate::error::{Error, Result};
use crate::mdn::{MdnConfig, SurvivalMdn, TrainedModel, TrainingMetadata};
use crate::rng::{SeedStreams, Stream};

/// One row of the training history. Epoch 0 is the initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
    pub best_val_nll: f64,
    /// Wall-clock seconds spent in the epoch.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStopped,
    /// Training hit a non-finite loss or gradient; the last good
    /// checkpoint was kept.
    NonFinite { epoch: usize, message: String },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub history: Vec<EpochRecord>,
    pub stop: StopReason,
}

impl TrainOutcome {
    pub fn best_val_nll(&self) -> f64 {
        self.history.iter().map(|r| r.val_nll).fold(f64::INFINITY, f64::min)
    }

    /// History as CSV with a header row.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,train_nll,val_nll,best_val_nll,seconds\n");
        for r in &self.history {
            s.push_str(&format!(
                "{},{},{},{},{:.6}\n",
                r.epoch, r.train_nll, r.val_nll, r.best_val_nll, r.seconds
            ));
        }
        s
    }
}

/// Mini-batch training with validation-based model selection.
///
/// Features are standardized with statistics of the training split only.
/// Each epoch visits a fresh permutation of the training records, keeping
/// the final partial batch; the parameters with the lowest validation NLL
/// seen at any epoch are returned.
pub fn train(splits: &Splits, mdn_config: &MdnConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    mdn_config.validate()?;
    cfg.validate()?;
    splits.train.ensure_trainable()?;
    if splits.valid.is_empty() {
        return Err(Error::invalid("validation split is empty"));
    }
    let dim = splits.train.num_features();
    if splits.valid.num_features() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: splits.valid.num_features(),
        });
    }
    let standardizer = Standardizer::fit(&splits.train.records)?;
    let train_set = standardizer.apply_records(&splits.train.records)?;
    let valid_set = standardizer.apply_records(&splits.valid.records)?;

    let seeds = SeedStreams::new(cfg.seed);
    let mut mdn = SurvivalMdn::new(dim, mdn_config, &mut seeds.rng(Stream::Init))?;
    let mut shuffle_rng = seeds.rng(Stream::Shuffle);
    let mut dropout_rng = seeds.rng(Stream::Dropout);
    let mut state = RmsPropState::new(mdn.params());

    let evaluate = |m: &SurvivalMdn| -> Result<(f64, f64)> { Ok((m.nll(&train_set)?, m.nll(&valid_set)?)) };

    let started = Instant::now();
    let (train0, val0) = evaluate(&mdn)?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_nll: train0,
        val_nll: val0,
        best_val_nll: val0,
        seconds: started.elapsed().as_secs_f64(),
    }];
    let mut best = if val0.is_finite() { Some((mdn.clone(), 0, val0)) } else { None };
    let mut since_best = 0;
    let mut iterations = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stop = StopReason::MaxEpochs;

    'epochs: for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&SurvivalRecord> = idx.iter().map(|&i| &train_set[i]).collect();
            let step = batch_gradient(&mdn, &batch, &mut dropout_rng).and_then(|mut g| {
                if !g.loss.is_finite() {
                    return Err(Error::Numerical(format!("non-finite batch NLL {}", g.loss)));
                }
                clip_global_norm(&mut g.grads, CLIP_NORM);
                rmsprop_step(mdn.params_mut(), &g.grads, &mut state, cfg)?;
                Ok(g.observed)
            });
            match step {
                Ok(observed) => mdn.update_norm_stats(&observed),
                Err(e @ (Error::Numerical(_) | Error::Autodiff(_))) => {
                    stop = StopReason::NonFinite {
                        epoch,
                        message: e.to_string(),
                    };
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
            iterations += 1;
        }

        let (train_nll, val_nll) = evaluate(&mdn)?;
        if !val_nll.is_finite() || !train_nll.is_finite() {
            stop = StopReason::NonFinite {
                epoch,
                message: format!("non-finite NLL after epoch {epoch}: train {train_nll}, validation {val_nll}"),
            };
            break;
        }
        if best.as_ref().is_none_or(|b| val_nll < b.2) {
            best = Some((mdn.clone(), epoch, val_nll));
            since_best = 0;
        } else {
            since_best += 1;
        }
        history.push(EpochRecord {
            epoch,
            train_nll,
            val_nll,
            best_val_nll: best.as_ref().map_or(val_nll, |b| b.2),
            seconds: started.elapsed().as_secs_f64(),
        });
        if since_best > cfg.patience {
            stop = StopReason::EarlyStopped;
            break;
        }
    }

    let epochs_run = history.last().map_or(0, |r| r.epoch);
    let (best_mdn, best_epoch, best_val) = match best {
        Some(b) => b,
        None => {
            return Err(Error::Numerical(
                "validation NLL was never finite; no checkpoint to return".into(),
            ))
        }
    };
    let mut model = TrainedModel::new(best_mdn, standardizer, splits.train.feature_names.clone())?;
    model.metadata = TrainingMetadata {
        epochs_run,
        iterations,
        best_epoch: Some(best_epoch),
        best_val_nll: Some(best_val),
        seed: cfg.seed,
    };
    Ok(TrainOutcome { model, history, stop })
}
