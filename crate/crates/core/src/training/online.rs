use super::{batch_gradient, clip_global_norm, rmsprop_step, RmsPropState, TrainConfig, CLIP_NORM};
use crate::data::{default_feature_names, RecordSource, Standardizer, SurvivalRecord};
use crate::error::{Error, Result};
use crate::mdn::{MdnConfig, SurvivalMdn, TrainedModel, TrainingMetadata};
use crate::rng::{SeedStreams, Stream};

#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub model: TrainedModel,
    pub iterations_run: usize,
    /// Set when a step produced a non-finite loss or gradient; the model
    /// holds the parameters from before that step.
    pub failure: Option<String>,
}

/// One optimizer step per freshly drawn batch, with no validation.
///
/// Features are used as generated (identity standardizer).
pub fn train_online(
    source: &mut dyn RecordSource,
    iterations: usize,
    batch_size: usize,
    mdn_config: &MdnConfig,
    cfg: &TrainConfig,
) -> Result<OnlineOutcome> {
    mdn_config.validate()?;
    cfg.validate()?;
    if batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let dim = source.num_features();
    let seeds = SeedStreams::new(cfg.seed);
    let mut mdn = SurvivalMdn::new(dim, mdn_config, &mut seeds.rng(Stream::Init))?;
    let mut dropout_rng = seeds.rng(Stream::Dropout);
    let mut state = RmsPropState::new(mdn.params());
    let mut failure = None;
    let mut done = 0;
    for _ in 0..iterations {
        let records = source.next_batch(batch_size);
        let batch: Vec<&SurvivalRecord> = records.iter().collect();
        let mut g = match batch_gradient(&mdn, &batch, &mut dropout_rng) {
            Ok(g) => g,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        if !g.loss.is_finite() {
            failure = Some(format!("non-finite batch NLL {} at iteration {done}", g.loss));
            break;
        }
        clip_global_norm(&mut g.grads, CLIP_NORM);
        if let Err(e) = rmsprop_step(mdn.params_mut(), &g.grads, &mut state, cfg) {
            failure = Some(e.to_string());
            break;
        }
        mdn.update_norm_stats(&g.observed);
        done += 1;
    }
    let mut model = TrainedModel::new(mdn, Standardizer::identity(dim), default_feature_names(dim))?;
    model.metadata = TrainingMetadata {
        epochs_run: 0,
        iterations: done,
        best_epoch: None,
        best_val_nll: None,
        seed: cfg.seed,
    };
    Ok(OnlineOutcome {
        model,
        iterations_run: done,
        failure,
    })
}
