use rand::Rng;

use super::{Base, SURVIVAL_EPS};
use crate::autodiff::{Arith, Eval};
use crate::distributions::{
    gaussian_log_pdf_ad, gaussian_survival_ad, genlogistic_log_pdf_ad, genlogistic_survival_ad, Component,
    GaussianComponent, GenLogisticComponent, SIGMA_FLOOR,
};
use crate::error::{Error, Result};
use crate::special::{log_softplus_inverse_jacobian, softplus, softplus_inverse};

/// Mixture over `y = softplus⁻¹(t)` for one input. `V` is `f64` for plain
/// evaluation or a tape variable during training.
///
/// `shapes`/`log_shapes` are empty for the Gaussian base.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture<V> {
    pub base: Base,
    pub log_weights: Vec<V>,
    pub weights: Vec<V>,
    pub locs: Vec<V>,
    pub scales: Vec<V>,
    pub log_scales: Vec<V>,
    pub shapes: Vec<V>,
    pub log_shapes: Vec<V>,
}

/// Evaluated head output.
pub type MixtureParams = Mixture<f64>;

impl<V: Copy> Mixture<V> {
    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    fn component_log_pdf<A: Arith<V = V>>(&self, a: &mut A, i: usize, y: f64) -> V {
        match self.base {
            Base::Gaussian => gaussian_log_pdf_ad(a, y, self.locs[i], self.scales[i], self.log_scales[i]),
            Base::GeneralizedLogistic => genlogistic_log_pdf_ad(
                a,
                y,
                self.locs[i],
                self.scales[i],
                self.log_scales[i],
                self.shapes[i],
                self.log_shapes[i],
            ),
        }
    }

    fn component_survival<A: Arith<V = V>>(&self, a: &mut A, i: usize, y: f64) -> V {
        match self.base {
            Base::Gaussian => gaussian_survival_ad(a, y, self.locs[i], self.scales[i]),
            Base::GeneralizedLogistic => genlogistic_survival_ad(a, y, self.locs[i], self.scales[i], self.shapes[i]),
        }
    }

    /// `log p(t|x)` for `t > 0`.
    pub(crate) fn log_density_ad<A: Arith<V = V>>(&self, a: &mut A, t: f64) -> V {
        let y = softplus_inverse(t);
        let terms: Vec<V> = (0..self.num_components())
            .map(|i| {
                let lp = self.component_log_pdf(a, i, y);
                a.add(self.log_weights[i], lp)
            })
            .collect();
        let lse = a.logsumexp(&terms);
        a.shift(lse, log_softplus_inverse_jacobian(t))
    }

    /// `S(t|x) = Σ w_i S_i(y)` for `t > 0`.
    pub(crate) fn survival_ad<A: Arith<V = V>>(&self, a: &mut A, t: f64) -> V {
        let y = softplus_inverse(t);
        let terms: Vec<V> = (0..self.num_components())
            .map(|i| {
                let s = self.component_survival(a, i, y);
                a.mul(self.weights[i], s)
            })
            .collect();
        a.sum(&terms)
    }

    /// `log S(t|x)` with `S` clamped to `[ε, 1 − ε]`.
    pub(crate) fn log_survival_ad<A: Arith<V = V>>(&self, a: &mut A, t: f64) -> V {
        let s = self.survival_ad(a, t);
        let hi = a.constant(1.0 - SURVIVAL_EPS);
        let lo = a.constant(SURVIVAL_EPS);
        let s = a.min(s, hi);
        let s = a.max(s, lo);
        a.log(s)
    }

    /// Censored log-likelihood contribution of one observation.
    pub(crate) fn log_likelihood_ad<A: Arith<V = V>>(&self, a: &mut A, time: f64, event: bool) -> V {
        if event {
            self.log_density_ad(a, time)
        } else {
            self.log_survival_ad(a, time)
        }
    }
}

impl MixtureParams {
    /// A mixture from explicit parameters. `shapes` must be empty for the
    /// Gaussian base.
    pub fn new(base: Base, weights: Vec<f64>, locs: Vec<f64>, scales: Vec<f64>, shapes: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        let want_shapes = if base == Base::Gaussian { 0 } else { k };
        if k == 0 || locs.len() != k || scales.len() != k || shapes.len() != want_shapes {
            return Err(Error::invalid("mixture parameter lengths disagree"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("mixture weights must be positive and sum to one"));
        }
        if locs.iter().any(|m| !m.is_finite())
            || scales.iter().any(|s| !(*s >= SIGMA_FLOOR) || !s.is_finite())
            || shapes.iter().any(|a| !(*a > 0.0) || !a.is_finite())
        {
            return Err(Error::invalid("invalid mixture location, scale or shape"));
        }
        Ok(Mixture {
            base,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            log_scales: scales.iter().map(|s| s.ln()).collect(),
            log_shapes: shapes.iter().map(|a| a.ln()).collect(),
            weights,
            locs,
            scales,
            shapes,
        })
    }

    pub fn component(&self, i: usize) -> Component {
        match self.base {
            Base::Gaussian => Component::Gaussian(GaussianComponent {
                mu: self.locs[i],
                sigma: self.scales[i],
            }),
            Base::GeneralizedLogistic => Component::GenLogistic(GenLogisticComponent {
                alpha: self.shapes[i],
                loc: self.locs[i],
                scale: self.scales[i],
            }),
        }
    }

    pub fn log_event_density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("event density needs t > 0, got {t}")));
        }
        Ok(self.log_density_ad(&mut Eval, t))
    }

    /// `F(t|x)`; zero for `t <= 0`.
    pub fn event_cdf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let y = softplus_inverse(t);
        (0..self.num_components())
            .map(|i| self.weights[i] * self.component(i).cdf(y))
            .fold(0.0, |acc, v| acc + v)
    }

    /// `S(t|x)`; one for `t <= 0`.
    pub fn survival(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 1.0;
        }
        self.survival_ad(&mut Eval, t)
    }

    /// The censored log-likelihood of `(time, event)`.
    pub fn log_likelihood(&self, time: f64, event: bool) -> Result<f64> {
        if !(time > 0.0) {
            return Err(Error::Domain(format!("observed time must be positive, got {time}")));
        }
        Ok(self.log_likelihood_ad(&mut Eval, time, event))
    }

    /// Index drawn with probability `w_i`.
    pub fn sample_component_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    /// Component draw, mixture sample `y`, then `t = softplus(y)`.
    pub fn sample_event_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let i = self.sample_component_index(rng);
        let y = self.component(i).sample(rng);
        softplus(y).max(f64::MIN_POSITIVE)
    }
}
