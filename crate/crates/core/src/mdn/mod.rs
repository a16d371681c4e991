//! The survival mixture density network.
//!
//! `x → MLP backbone → per-parameter heads → {w_i, μ_i, σ_i(, α_i)}`, a
//! mixture over `y ∈ ℝ`, and event time `t = softplus(y)`. With
//! `y = softplus⁻¹(t)`:
//!
//! - `log p(t|x) = −log(1 − e^{−t}) + log Σ_i w_i f_i(y)`
//! - `F(t|x) = Σ_i w_i F_i(y)`, `S(t|x) = Σ_i w_i (1 − F_i(y))`
//!
//! The Jacobian term is parameter free, so only the mixture carries
//! gradients.

mod mixture;
mod model;
mod network;

pub use mixture::{Mixture, MixtureParams};
pub use model::{softplus_inverse, SurvivalMdn, TrainedModel, TrainingMetadata, MODEL_FORMAT};
pub use network::{NormStats, Regime};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clamp applied to survival probabilities where their logarithm is taken.
pub const SURVIVAL_EPS: f64 = 1e-12;

/// Largest accepted layer width or component count.
pub const MAX_WIDTH: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    Gaussian,
    GeneralizedLogistic,
}

impl std::str::FromStr for Base {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Base::Gaussian),
            "generalized_logistic" => Ok(Base::GeneralizedLogistic),
            _ => Err(Error::invalid(format!("unknown base distribution '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::invalid(format!("unknown activation '{s}'"))),
        }
    }
}

/// Architecture of a survival MDN. Layer lists give hidden widths; each
/// head adds a final linear layer with `num_components` outputs, so the
/// default is a three-layer backbone and three-layer heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdnConfig {
    pub num_components: usize,
    pub backbone_hidden: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub base: Base,
    pub activation: Activation,
    /// Dropout rate on backbone hidden layers during training.
    pub dropout: f64,
    /// Batch normalization before each backbone activation.
    pub batch_norm: bool,
}

impl Default for MdnConfig {
    fn default() -> Self {
        MdnConfig {
            num_components: 10,
            backbone_hidden: vec![32, 32, 32],
            head_hidden: vec![32, 32],
            base: Base::Gaussian,
            activation: Activation::Tanh,
            dropout: 0.0,
            batch_norm: false,
        }
    }
}

impl MdnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_components == 0 || self.num_components > MAX_WIDTH {
            return Err(Error::invalid(format!(
                "num_components must be in 1..={MAX_WIDTH}, got {}",
                self.num_components
            )));
        }
        for &h in self.backbone_hidden.iter().chain(&self.head_hidden) {
            if h == 0 || h > MAX_WIDTH {
                return Err(Error::invalid(format!("hidden sizes must be in 1..={MAX_WIDTH}, got {h}")));
            }
        }
        if self.backbone_hidden.len() > 64 || self.head_hidden.len() > 64 {
            return Err(Error::invalid("at most 64 hidden layers per stack"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout must be in [0, 1), got {}", self.dropout)));
        }
        Ok(())
    }
}
