use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mixture::MixtureParams;
use super::network::{Network, NormStats, Regime, TensorSpec};
use super::MdnConfig;
use crate::autodiff::{check_gradients, Arith, Bound, Eval, GradCheckOptions, GradCheckReport, ParamStore, Tape, Tensor};
use crate::data::{Standardizer, SurvivalRecord};
use crate::error::{Error, Result};
use crate::special;

pub const MODEL_FORMAT: &str = "survmdn-model";
const MODEL_VERSION: u32 = 1;

/// `softplus⁻¹(t) = log(e^t − 1)` for `t > 0`.
pub fn softplus_inverse(t: f64) -> Result<f64> {
    if !(t > 0.0) || t.is_infinite() {
        return Err(Error::Domain(format!("softplus inverse needs finite t > 0, got {t}")));
    }
    Ok(special::softplus_inverse(t))
}

/// Network plus parameters, operating on standardized features.
#[derive(Debug, Clone)]
pub struct SurvivalMdn {
    config: MdnConfig,
    network: Network,
    specs: Vec<TensorSpec>,
    params: ParamStore,
    norm_stats: Vec<NormStats>,
}

impl SurvivalMdn {
    pub fn new(input_dim: usize, config: &MdnConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (network, specs) = Network::layout(input_dim, config)?;
        let params = Network::initialize(&specs, rng);
        let norm_stats = network.initial_norm_stats();
        Ok(SurvivalMdn {
            config: config.clone(),
            network,
            specs,
            params,
            norm_stats,
        })
    }

    /// Rebuilds a model from stored tensors, validating them against the
    /// layout implied by `config`.
    pub fn from_parts(
        input_dim: usize,
        config: &MdnConfig,
        tensors: Vec<Tensor>,
        norm_stats: Vec<NormStats>,
    ) -> Result<Self> {
        let (network, specs) = Network::layout(input_dim, config)?;
        Network::check_tensors(&specs, &tensors)?;
        let widths = network.norm_widths();
        if widths.len() != norm_stats.len()
            || widths
                .iter()
                .zip(&norm_stats)
                .any(|(&w, s)| s.mean.len() != w || s.var.len() != w || s.var.iter().any(|v| !(*v >= 0.0)))
        {
            return Err(Error::invalid("batch-norm statistics do not match the layout"));
        }
        Ok(SurvivalMdn {
            config: config.clone(),
            network,
            specs,
            params: ParamStore::from_tensors(tensors),
            norm_stats,
        })
    }

    pub fn config(&self) -> &MdnConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn norm_stats(&self) -> &[NormStats] {
        &self.norm_stats
    }

    /// Names and shapes of every parameter tensor, in store order.
    pub fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        self.specs.iter().map(|s| (s.name.clone(), s.shape.clone())).collect()
    }

    pub(crate) fn update_norm_stats(&mut self, observed: &[NormStats]) {
        Network::update_running(&mut self.norm_stats, observed);
    }

    pub(crate) fn couples_records(&self, regime: &Regime<'_>) -> bool {
        self.network.couples_records(regime)
    }

    /// Adds independent `N(0, scale²)` noise to every parameter.
    pub fn perturb_params<R: Rng + ?Sized>(&mut self, rng: &mut R, scale: f64) {
        let noise = Normal::new(0.0, scale).expect("finite scale");
        let (tensors, _) = self.params.split_mut();
        for t in tensors {
            for v in &mut t.values {
                *v += noise.sample(rng);
            }
        }
    }

    /// Inference-mode NLL of `batch` and its gradient per parameter tensor.
    pub fn nll_gradient(&self, batch: &[SurvivalRecord]) -> Result<(f64, Vec<Vec<f64>>)> {
        validate_batch(batch, self.input_dim())?;
        let refs: Vec<&SurvivalRecord> = batch.iter().collect();
        let mut tape = Tape::new();
        let bound = tape.bind(&self.params);
        let out = self.nll_graph(&mut tape, &bound, &refs, &mut Regime::Inference, None);
        tape.set_output(out);
        tape.backward()?;
        Ok((tape.value(out), tape.param_gradients(&bound)))
    }

    /// Compares the inference-mode NLL gradient with central differences.
    pub fn gradient_check(&self, batch: &[SurvivalRecord], opts: &GradCheckOptions) -> Result<GradCheckReport> {
        validate_batch(batch, self.input_dim())?;
        let refs: Vec<&SurvivalRecord> = batch.iter().collect();
        let report = check_gradients(
            |tape, bound| self.nll_graph(tape, bound, &refs, &mut Regime::Inference, None),
            &self.params,
            opts,
        )?;
        Ok(report)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(())
    }

    /// Mixture parameters for one standardized input.
    pub fn head_forward(&self, x: &[f64]) -> Result<MixtureParams> {
        Ok(self.head_forward_batch(&[x])?.pop().expect("one row"))
    }

    pub fn head_forward_batch(&self, xs: &[&[f64]]) -> Result<Vec<MixtureParams>> {
        for x in xs {
            self.check_dim(x)?;
        }
        let mut e = Eval;
        let bound = e.bind(&self.params);
        Ok(self
            .network
            .forward(&mut e, &bound, &self.norm_stats, xs, &mut Regime::Inference, None))
    }

    pub fn log_event_density(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.head_forward(x)?.log_event_density(t)
    }

    pub fn event_cdf(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.head_forward(x)?.event_cdf(t))
    }

    pub fn survival(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.head_forward(x)?.survival(t))
    }

    pub fn sample_event_time<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        Ok(self.head_forward(x)?.sample_event_time(rng))
    }

    /// Mean negative censored log-likelihood in inference mode.
    pub fn nll(&self, batch: &[SurvivalRecord]) -> Result<f64> {
        validate_batch(batch, self.input_dim())?;
        let refs: Vec<&SurvivalRecord> = batch.iter().collect();
        let mut e = Eval;
        let bound = e.bind(&self.params);
        Ok(self.nll_graph(&mut e, &bound, &refs, &mut Regime::Inference, None))
    }

    /// `−(1/n) Σ [Δ log p(u|x) + (1 − Δ) log S(u|x)]` on any back end.
    ///
    /// When records do not interact, identical feature vectors share one
    /// network evaluation.
    pub(crate) fn nll_graph<A: Arith>(
        &self,
        a: &mut A,
        p: &Bound<A::V>,
        batch: &[&SurvivalRecord],
        regime: &mut Regime<'_>,
        observed: Option<&mut Vec<NormStats>>,
    ) -> A::V {
        let (inputs, slot): (Vec<&[f64]>, Vec<usize>) = if self.couples_records(regime) {
            (batch.iter().map(|r| r.features.as_slice()).collect(), (0..batch.len()).collect())
        } else {
            let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
            let mut inputs = Vec::new();
            let slot = batch
                .iter()
                .map(|r| {
                    let key: Vec<u64> = r.features.iter().map(|v| v.to_bits()).collect();
                    *seen.entry(key).or_insert_with(|| {
                        inputs.push(r.features.as_slice());
                        inputs.len() - 1
                    })
                })
                .collect();
            (inputs, slot)
        };
        let mixes = self.network.forward(a, p, &self.norm_stats, &inputs, regime, observed);
        let terms: Vec<A::V> = batch
            .iter()
            .zip(&slot)
            .map(|(r, &s)| mixes[s].log_likelihood_ad(a, r.time, r.event))
            .collect();
        let total = a.sum(&terms);
        a.scale(total, -1.0 / batch.len() as f64)
    }
}

pub(crate) fn validate_batch(batch: &[SurvivalRecord], dim: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    for r in batch {
        if r.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.features.len(),
            });
        }
        if !(r.time > 0.0) || !r.time.is_finite() {
            return Err(Error::Domain(format!("observed time must be positive, got {}", r.time)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingMetadata {
    pub epochs_run: usize,
    /// Optimizer steps taken.
    pub iterations: usize,
    pub best_epoch: Option<usize>,
    pub best_val_nll: Option<f64>,
    pub seed: u64,
}

/// A model together with the feature standardization it was trained with.
/// Methods taking `x` expect raw (unstandardized) features.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub mdn: SurvivalMdn,
    pub standardizer: Standardizer,
    pub feature_names: Vec<String>,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    input_dim: usize,
    config: MdnConfig,
    feature_names: Vec<String>,
    standardizer: Standardizer,
    params: Vec<Tensor>,
    norm_stats: Vec<NormStats>,
    metadata: TrainingMetadata,
}

impl TrainedModel {
    pub fn new(mdn: SurvivalMdn, standardizer: Standardizer, feature_names: Vec<String>) -> Result<Self> {
        if standardizer.dim() != mdn.input_dim() || feature_names.len() != mdn.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: mdn.input_dim(),
                actual: standardizer.dim(),
            });
        }
        Ok(TrainedModel {
            mdn,
            standardizer,
            feature_names,
            metadata: TrainingMetadata::default(),
        })
    }

    pub fn mixture(&self, x: &[f64]) -> Result<MixtureParams> {
        self.mdn.head_forward(&self.standardizer.apply(x)?)
    }

    pub fn mixtures(&self, xs: &[&[f64]]) -> Result<Vec<MixtureParams>> {
        let z = xs
            .iter()
            .map(|x| self.standardizer.apply(x))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
        self.mdn.head_forward_batch(&refs)
    }

    pub fn survival(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.mixture(x)?.survival(t))
    }

    pub fn event_cdf(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.mixture(x)?.event_cdf(t))
    }

    pub fn log_event_density(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.mixture(x)?.log_event_density(t)
    }

    /// Mean negative log-likelihood of raw records.
    pub fn nll(&self, records: &[SurvivalRecord]) -> Result<f64> {
        let z = self.standardizer.apply_records(records)?;
        self.mdn.nll(&z)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            input_dim: self.mdn.input_dim(),
            config: self.mdn.config.clone(),
            feature_names: self.feature_names.clone(),
            standardizer: self.standardizer.clone(),
            params: self.mdn.params.tensors().to_vec(),
            norm_stats: self.mdn.norm_stats.clone(),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates a model document.
    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model format '{}' version {}",
                file.format, file.version
            )));
        }
        let st = &file.standardizer;
        if st.dim() != file.input_dim
            || st.std.len() != file.input_dim
            || file.feature_names.len() != file.input_dim
            || st.mean.iter().chain(&st.std).any(|v| !v.is_finite())
        {
            return Err(Error::invalid("standardizer or feature names do not match input_dim"));
        }
        let mdn = SurvivalMdn::from_parts(file.input_dim, &file.config, file.params, file.norm_stats)?;
        Ok(TrainedModel {
            mdn,
            standardizer: file.standardizer,
            feature_names: file.feature_names,
            metadata: file.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}
