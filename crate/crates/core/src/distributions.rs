//! Mixture base distributions: Gaussian and a shape-`α` generalized
//! logistic with CDF `1 − e^{−αz}(1 + e^{−z})^{−α}`.
//!
//! Two identities keep the generalized logistic cheap and stable:
//! `αz + α·log(1 + e^{−z}) = α·softplus(z)`, so the survival function is
//! `exp(−α·softplus(z))` and the quantile function has a closed form.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::autodiff::{Arith, Eval};
use crate::error::{Error, Result};
use crate::special::{self, LN_SQRT_2PI};

/// Lower bound on every scale parameter produced by the model heads.
pub const SIGMA_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenLogisticComponent {
    pub alpha: f64,
    pub loc: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Gaussian(GaussianComponent),
    GenLogistic(GenLogisticComponent),
}

impl GaussianComponent {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < SIGMA_FLOOR {
            return Err(Error::invalid(format!(
                "gaussian component needs finite mu and sigma >= {SIGMA_FLOOR}, got ({mu}, {sigma})"
            )));
        }
        Ok(GaussianComponent { mu, sigma })
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        let mut e = Eval;
        gaussian_log_pdf_ad(&mut e, y, self.mu, self.sigma, self.sigma.ln())
    }

    pub fn cdf(&self, y: f64) -> f64 {
        special::normal_cdf((y - self.mu) / self.sigma)
    }

    pub fn survival(&self, y: f64) -> f64 {
        special::normal_cdf(-(y - self.mu) / self.sigma)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mu + self.sigma * z
    }
}

impl GenLogisticComponent {
    pub fn new(alpha: f64, loc: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() || !loc.is_finite() || !scale.is_finite() || scale < SIGMA_FLOOR {
            return Err(Error::invalid(format!(
                "generalized logistic needs alpha > 0 and scale >= {SIGMA_FLOOR}, got (alpha={alpha}, loc={loc}, scale={scale})"
            )));
        }
        Ok(GenLogisticComponent { alpha, loc, scale })
    }

    fn standardize(&self, x: f64) -> f64 {
        (x - self.loc) / self.scale
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let mut e = Eval;
        genlogistic_log_pdf_ad(
            &mut e,
            x,
            self.loc,
            self.scale,
            self.scale.ln(),
            self.alpha,
            self.alpha.ln(),
        )
    }

    pub fn cdf(&self, x: f64) -> f64 {
        -(-self.alpha * special::softplus(self.standardize(x))).exp_m1()
    }

    pub fn survival(&self, x: f64) -> f64 {
        (-self.alpha * special::softplus(self.standardize(x))).exp()
    }

    /// Inverse CDF: `softplus(z) = −log(1 − u)/α`.
    pub fn quantile(&self, u: f64) -> f64 {
        let s = -(-u).ln_1p() / self.alpha;
        self.loc + self.scale * special::softplus_inverse(s)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }
}

impl Component {
    pub fn log_pdf(&self, y: f64) -> f64 {
        match self {
            Component::Gaussian(c) => c.log_pdf(y),
            Component::GenLogistic(c) => c.log_pdf(y),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            Component::Gaussian(c) => c.cdf(y),
            Component::GenLogistic(c) => c.cdf(y),
        }
    }

    pub fn survival(&self, y: f64) -> f64 {
        match self {
            Component::Gaussian(c) => c.survival(y),
            Component::GenLogistic(c) => c.survival(y),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Component::Gaussian(c) => c.sample(rng),
            Component::GenLogistic(c) => c.sample(rng),
        }
    }
}

pub fn gaussian_log_pdf(y: f64, c: &GaussianComponent) -> f64 {
    c.log_pdf(y)
}

pub fn gaussian_cdf(y: f64, c: &GaussianComponent) -> f64 {
    c.cdf(y)
}

pub fn genlogistic_cdf(x: f64, c: &GenLogisticComponent) -> f64 {
    c.cdf(x)
}

pub fn genlogistic_log_pdf(x: f64, c: &GenLogisticComponent) -> f64 {
    c.log_pdf(x)
}

pub fn sample_component<R: Rng + ?Sized>(c: &Component, rng: &mut R) -> f64 {
    c.sample(rng)
}

// Differentiable kernels. `y` is always data, so it enters as a constant.

pub(crate) fn gaussian_log_pdf_ad<A: Arith>(
    a: &mut A,
    y: f64,
    mu: A::V,
    sigma: A::V,
    log_sigma: A::V,
) -> A::V {
    let z = gaussian_z(a, y, mu, sigma);
    let zz = a.mul(z, z);
    let half = a.scale(zz, -0.5);
    let d = a.sub(half, log_sigma);
    a.shift(d, -LN_SQRT_2PI)
}

fn gaussian_z<A: Arith>(a: &mut A, y: f64, mu: A::V, sigma: A::V) -> A::V {
    let y = a.constant(y);
    let d = a.sub(y, mu);
    a.div(d, sigma)
}

/// `P(Y > y)` for one Gaussian component.
pub(crate) fn gaussian_survival_ad<A: Arith>(a: &mut A, y: f64, mu: A::V, sigma: A::V) -> A::V {
    let z = gaussian_z(a, y, mu, sigma);
    let nz = a.neg(z);
    a.normal_cdf(nz)
}

/// `log α − (α + 1)·softplus(z) + z − log scale`
pub(crate) fn genlogistic_log_pdf_ad<A: Arith>(
    a: &mut A,
    x: f64,
    loc: A::V,
    scale: A::V,
    log_scale: A::V,
    alpha: A::V,
    log_alpha: A::V,
) -> A::V {
    let z = gaussian_z(a, x, loc, scale);
    let sp = a.softplus(z);
    let alpha1 = a.shift(alpha, 1.0);
    let t = a.mul(alpha1, sp);
    let r = a.sub(log_alpha, t);
    let r = a.add(r, z);
    a.sub(r, log_scale)
}

/// `exp(−α·softplus(z))`
pub(crate) fn genlogistic_survival_ad<A: Arith>(
    a: &mut A,
    x: f64,
    loc: A::V,
    scale: A::V,
    alpha: A::V,
) -> A::V {
    let z = gaussian_z(a, x, loc, scale);
    let sp = a.softplus(z);
    let t = a.mul(alpha, sp);
    let nt = a.neg(t);
    a.exp(nt)
}
