use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mixture::Mixture;
use super::{Activation, Base, MdnConfig};
use crate::autodiff::{Arith, Bound, ParamId, ParamStore, Tensor};
use crate::distributions::SIGMA_FLOOR;
use crate::error::{Error, Result};

const NORM_EPS: f64 = 1e-5;
const NORM_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HeadKind {
    Weights,
    Locations,
    Scales,
    Shapes,
}

impl HeadKind {
    fn name(self) -> &'static str {
        match self {
            HeadKind::Weights => "weights",
            HeadKind::Locations => "locations",
            HeadKind::Scales => "scales",
            HeadKind::Shapes => "shapes",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    weight: ParamId,
    bias: ParamId,
    fan_in: usize,
    fan_out: usize,
}

#[derive(Debug, Clone, Copy)]
struct Norm {
    gamma: ParamId,
    beta: ParamId,
}

#[derive(Debug, Clone)]
struct BackboneLayer {
    dense: Dense,
    norm: Option<Norm>,
}

#[derive(Debug, Clone)]
struct Head {
    kind: HeadKind,
    layers: Vec<Dense>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum InitRole {
    HiddenWeight { fan_in: usize },
    HiddenBias,
    OutputWeight,
    OutputBias(HeadKind),
    NormGamma,
    NormBeta,
}

#[derive(Debug, Clone)]
pub(crate) struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub role: InitRole,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Running batch-norm statistics for one backbone layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// How a forward pass treats dropout and batch normalization.
pub enum Regime<'r> {
    /// Dropout off; batch norm uses running statistics.
    Inference,
    /// Dropout masks drawn from `rng`; batch norm uses batch statistics.
    Training { rng: &'r mut ChaCha8Rng },
}

impl Regime<'_> {
    pub fn is_training(&self) -> bool {
        matches!(self, Regime::Training { .. })
    }
}

/// Parameter layout and forward pass. Values live in a [`ParamStore`].
#[derive(Debug, Clone)]
pub(crate) struct Network {
    input_dim: usize,
    num_components: usize,
    base: Base,
    activation: Activation,
    dropout: f64,
    backbone: Vec<BackboneLayer>,
    heads: Vec<Head>,
}

struct LayoutBuilder {
    specs: Vec<TensorSpec>,
}

impl LayoutBuilder {
    fn push(&mut self, name: String, shape: Vec<usize>, role: InitRole) -> Result<ParamId> {
        shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::invalid(format!("tensor {name} is too large")))?;
        self.specs.push(TensorSpec { name, shape, role });
        Ok(ParamId(self.specs.len() - 1))
    }

    fn dense(&mut self, prefix: &str, fan_in: usize, fan_out: usize, output_of: Option<HeadKind>) -> Result<Dense> {
        let (wr, br) = match output_of {
            Some(kind) => (InitRole::OutputWeight, InitRole::OutputBias(kind)),
            None => (InitRole::HiddenWeight { fan_in }, InitRole::HiddenBias),
        };
        Ok(Dense {
            weight: self.push(format!("{prefix}.weight"), vec![fan_out, fan_in], wr)?,
            bias: self.push(format!("{prefix}.bias"), vec![fan_out], br)?,
            fan_in,
            fan_out,
        })
    }
}

impl Network {
    /// Deterministic parameter layout for `(input_dim, config)`. Tensor
    /// `i` of the returned specs has `ParamId(i)`.
    pub fn layout(input_dim: usize, config: &MdnConfig) -> Result<(Network, Vec<TensorSpec>)> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be at least 1"));
        }
        let mut b = LayoutBuilder { specs: Vec::new() };
        let mut width = input_dim;
        let mut backbone = Vec::new();
        for (l, &h) in config.backbone_hidden.iter().enumerate() {
            let dense = b.dense(&format!("backbone.{l}"), width, h, None)?;
            let norm = if config.batch_norm {
                Some(Norm {
                    gamma: b.push(format!("backbone.{l}.norm.gamma"), vec![h], InitRole::NormGamma)?,
                    beta: b.push(format!("backbone.{l}.norm.beta"), vec![h], InitRole::NormBeta)?,
                })
            } else {
                None
            };
            backbone.push(BackboneLayer { dense, norm });
            width = h;
        }
        let latent = width;

        let mut kinds = vec![HeadKind::Weights, HeadKind::Locations, HeadKind::Scales];
        if config.base == Base::GeneralizedLogistic {
            kinds.push(HeadKind::Shapes);
        }
        let mut heads = Vec::new();
        for kind in kinds {
            let mut layers = Vec::new();
            let mut w = latent;
            for (l, &h) in config.head_hidden.iter().enumerate() {
                layers.push(b.dense(&format!("head.{}.{l}", kind.name()), w, h, None)?);
                w = h;
            }
            let l = config.head_hidden.len();
            layers.push(b.dense(&format!("head.{}.{l}", kind.name()), w, config.num_components, Some(kind))?);
            heads.push(Head { kind, layers });
        }

        let net = Network {
            input_dim,
            num_components: config.num_components,
            base: config.base,
            activation: config.activation,
            dropout: config.dropout,
            backbone,
            heads,
        };
        Ok((net, b.specs))
    }

    /// Kaiming-uniform hidden weights, zero biases, zero output weights,
    /// location biases spread over `[−1, 2]`.
    pub fn initialize(specs: &[TensorSpec], rng: &mut ChaCha8Rng) -> ParamStore {
        let mut store = ParamStore::new();
        for spec in specs {
            let n = spec.len();
            let values = match spec.role {
                InitRole::HiddenWeight { fan_in } => {
                    let bound = (6.0 / fan_in as f64).sqrt();
                    (0..n).map(|_| rng.random_range(-bound..bound)).collect()
                }
                InitRole::OutputBias(HeadKind::Locations) => {
                    if n == 1 {
                        vec![0.5]
                    } else {
                        (0..n).map(|i| -1.0 + 3.0 * i as f64 / (n - 1) as f64).collect()
                    }
                }
                InitRole::NormGamma => vec![1.0; n],
                InitRole::HiddenBias | InitRole::OutputWeight | InitRole::OutputBias(_) | InitRole::NormBeta => {
                    vec![0.0; n]
                }
            };
            store.add(spec.name.clone(), spec.shape.clone(), values);
        }
        store
    }

    /// Checks loaded tensors against the layout.
    pub fn check_tensors(specs: &[TensorSpec], tensors: &[Tensor]) -> Result<()> {
        if specs.len() != tensors.len() {
            return Err(Error::invalid(format!(
                "expected {} parameter tensors, found {}",
                specs.len(),
                tensors.len()
            )));
        }
        for (s, t) in specs.iter().zip(tensors) {
            if s.name != t.name || s.shape != t.shape || t.values.len() != s.len() {
                return Err(Error::invalid(format!(
                    "tensor '{}' {:?} does not match expected '{}' {:?}",
                    t.name, t.shape, s.name, s.shape
                )));
            }
            if t.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("tensor '{}' has non-finite values", t.name)));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Widths of the batch-normalized backbone layers.
    pub fn norm_widths(&self) -> Vec<usize> {
        self.backbone
            .iter()
            .filter(|l| l.norm.is_some())
            .map(|l| l.dense.fan_out)
            .collect()
    }

    pub fn initial_norm_stats(&self) -> Vec<NormStats> {
        self.norm_widths()
            .into_iter()
            .map(|w| NormStats {
                mean: vec![0.0; w],
                var: vec![1.0; w],
            })
            .collect()
    }

    /// Whether records in a batch influence each other's outputs (batch
    /// statistics) or draw independent masks, so identical inputs cannot
    /// share one forward pass.
    pub fn couples_records(&self, regime: &Regime<'_>) -> bool {
        regime.is_training() && (self.dropout > 0.0 || self.backbone.iter().any(|l| l.norm.is_some()))
    }

    fn activate<A: Arith>(&self, a: &mut A, v: A::V) -> A::V {
        match self.activation {
            Activation::Relu => a.relu(v),
            Activation::Tanh => a.tanh(v),
        }
    }

    fn dense<A: Arith>(a: &mut A, p: &Bound<A::V>, d: &Dense, h: &[A::V]) -> Vec<A::V> {
        let w = p.get(d.weight);
        let b = p.get(d.bias);
        (0..d.fan_out)
            .map(|o| {
                let s = a.dot(&w[o * d.fan_in..(o + 1) * d.fan_in], h);
                a.add(s, b[o])
            })
            .collect()
    }

    /// Mixture parameters for every input row.
    ///
    /// In the training regime, batch-norm statistics of this batch are
    /// appended to `observed` (one entry per normalized layer).
    pub fn forward<A: Arith>(
        &self,
        a: &mut A,
        p: &Bound<A::V>,
        stats: &[NormStats],
        inputs: &[&[f64]],
        regime: &mut Regime<'_>,
        mut observed: Option<&mut Vec<NormStats>>,
    ) -> Vec<Mixture<A::V>> {
        let mut h: Vec<Vec<A::V>> = inputs
            .iter()
            .map(|x| x.iter().map(|&v| a.constant(v)).collect())
            .collect();

        let mut norm_idx = 0;
        for layer in &self.backbone {
            let mut z: Vec<Vec<A::V>> = h.iter().map(|row| Self::dense(a, p, &layer.dense, row)).collect();
            if let Some(norm) = layer.norm {
                match regime {
                    Regime::Training { .. } => {
                        let batch = Self::batch_norm(a, p, norm, &mut z);
                        if let Some(obs) = observed.as_deref_mut() {
                            obs.push(batch);
                        }
                    }
                    Regime::Inference => Self::running_norm(a, p, norm, &stats[norm_idx], &mut z),
                }
                norm_idx += 1;
            }
            for row in &mut z {
                for v in row.iter_mut() {
                    *v = self.activate(a, *v);
                }
            }
            if let Regime::Training { rng } = regime {
                if self.dropout > 0.0 {
                    let keep = 1.0 - self.dropout;
                    for row in &mut z {
                        for v in row.iter_mut() {
                            *v = if rng.random_bool(keep) {
                                a.scale(*v, 1.0 / keep)
                            } else {
                                a.constant(0.0)
                            };
                        }
                    }
                }
            }
            h = z;
        }

        h.iter().map(|latent| self.heads_forward(a, p, latent)).collect()
    }

    fn heads_forward<A: Arith>(&self, a: &mut A, p: &Bound<A::V>, latent: &[A::V]) -> Mixture<A::V> {
        let mut raw: Vec<Vec<A::V>> = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let mut v = latent.to_vec();
            let last = head.layers.len() - 1;
            for (i, d) in head.layers.iter().enumerate() {
                v = Self::dense(a, p, d, &v);
                if i < last {
                    for x in v.iter_mut() {
                        *x = self.activate(a, *x);
                    }
                }
            }
            raw.push(v);
        }
        let mut mix = Mixture {
            base: self.base,
            log_weights: Vec::new(),
            weights: Vec::new(),
            locs: Vec::new(),
            scales: Vec::new(),
            log_scales: Vec::new(),
            shapes: Vec::new(),
            log_shapes: Vec::new(),
        };
        for (head, out) in self.heads.iter().zip(raw) {
            match head.kind {
                HeadKind::Weights => {
                    let lse = a.logsumexp(&out);
                    for &logit in &out {
                        let lw = a.sub(logit, lse);
                        mix.log_weights.push(lw);
                        mix.weights.push(a.exp(lw));
                    }
                }
                HeadKind::Locations => mix.locs = out,
                HeadKind::Scales => {
                    let floor = a.constant(SIGMA_FLOOR);
                    for &r in &out {
                        let e = a.exp(r);
                        let s = a.max(e, floor);
                        mix.scales.push(s);
                        mix.log_scales.push(a.log(s));
                    }
                }
                HeadKind::Shapes => {
                    for &r in &out {
                        mix.shapes.push(a.exp(r));
                        mix.log_shapes.push(r);
                    }
                }
            }
        }
        debug_assert_eq!(mix.weights.len(), self.num_components);
        mix
    }

    fn batch_norm<A: Arith>(a: &mut A, p: &Bound<A::V>, norm: Norm, z: &mut [Vec<A::V>]) -> NormStats {
        let n = z.len();
        let width = z.first().map_or(0, Vec::len);
        let gamma = p.get(norm.gamma);
        let beta = p.get(norm.beta);
        let mut stats = NormStats {
            mean: Vec::with_capacity(width),
            var: Vec::with_capacity(width),
        };
        for u in 0..width {
            let col: Vec<A::V> = z.iter().map(|row| row[u]).collect();
            let s = a.sum(&col);
            let mean = a.scale(s, 1.0 / n as f64);
            let centered: Vec<A::V> = col.iter().map(|&v| a.sub(v, mean)).collect();
            let ss = a.dot(&centered, &centered);
            let var = a.scale(ss, 1.0 / n as f64);
            let ve = a.shift(var, NORM_EPS);
            let inv = a.powc(ve, -0.5);
            stats.mean.push(a.value(mean));
            stats.var.push(a.value(var));
            for (row, &c) in z.iter_mut().zip(&centered) {
                let xn = a.mul(c, inv);
                let g = a.mul(xn, gamma[u]);
                row[u] = a.add(g, beta[u]);
            }
        }
        stats
    }

    fn running_norm<A: Arith>(a: &mut A, p: &Bound<A::V>, norm: Norm, stats: &NormStats, z: &mut [Vec<A::V>]) {
        let gamma = p.get(norm.gamma);
        let beta = p.get(norm.beta);
        for row in z.iter_mut() {
            for (u, v) in row.iter_mut().enumerate() {
                let c = a.shift(*v, -stats.mean[u]);
                let xn = a.scale(c, 1.0 / (stats.var[u] + NORM_EPS).sqrt());
                let g = a.mul(xn, gamma[u]);
                *v = a.add(g, beta[u]);
            }
        }
    }

    /// Exponential moving average of batch statistics.
    pub fn update_running(stats: &mut [NormStats], observed: &[NormStats]) {
        for (s, o) in stats.iter_mut().zip(observed) {
            for (m, &om) in s.mean.iter_mut().zip(&o.mean) {
                *m = (1.0 - NORM_MOMENTUM) * *m + NORM_MOMENTUM * om;
            }
            for (v, &ov) in s.var.iter_mut().zip(&o.var) {
                *v = (1.0 - NORM_MOMENTUM) * *v + NORM_MOMENTUM * ov;
            }
        }
    }
}
