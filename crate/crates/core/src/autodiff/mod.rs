//! Scalar reverse-mode automatic differentiation.
//!
//! Model code is written once against [`Arith`] and runs either on plain
//! `f64` values ([`Eval`]) or on a recording [`Tape`] that can be
//! differentiated. Both back ends share the scalar kernels in
//! [`crate::special`], so they produce identical values.

mod gradcheck;
mod params;
mod tape;

pub use gradcheck::{check_gradients, GradCheckEntry, GradCheckOptions, GradCheckReport};
pub use params::{Bound, ParamId, ParamStore, Tensor};
pub use tape::{forward_eval, AdError, Op, Tape, Var};

use crate::special;

/// Arithmetic back end over scalar values.
pub trait Arith {
    type V: Copy;

    /// A value that does not depend on parameters.
    fn constant(&mut self, x: f64) -> Self::V;
    /// A trainable leaf.
    fn param(&mut self, x: f64) -> Self::V;
    fn value(&self, v: Self::V) -> f64;

    fn add(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sub(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn div(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn neg(&mut self, a: Self::V) -> Self::V;
    fn exp(&mut self, a: Self::V) -> Self::V;
    fn log(&mut self, a: Self::V) -> Self::V;
    fn softplus(&mut self, a: Self::V) -> Self::V;
    fn tanh(&mut self, a: Self::V) -> Self::V;
    fn relu(&mut self, a: Self::V) -> Self::V;
    /// `a^p` for a constant exponent.
    fn powc(&mut self, a: Self::V, p: f64) -> Self::V;
    fn normal_cdf(&mut self, a: Self::V) -> Self::V;
    fn max(&mut self, a: Self::V, b: Self::V) -> Self::V;
    fn sum(&mut self, xs: &[Self::V]) -> Self::V;
    fn logsumexp(&mut self, xs: &[Self::V]) -> Self::V;
    /// `Σ a_i·b_i`, a fused sum of products.
    fn dot(&mut self, a: &[Self::V], b: &[Self::V]) -> Self::V;

    fn min(&mut self, a: Self::V, b: Self::V) -> Self::V {
        let na = self.neg(a);
        let nb = self.neg(b);
        let m = self.max(na, nb);
        self.neg(m)
    }

    fn scale(&mut self, a: Self::V, c: f64) -> Self::V {
        let c = self.constant(c);
        self.mul(a, c)
    }

    fn shift(&mut self, a: Self::V, c: f64) -> Self::V {
        let c = self.constant(c);
        self.add(a, c)
    }

    fn bind(&mut self, store: &ParamStore) -> Bound<Self::V> {
        Bound::new(
            store
                .tensors()
                .iter()
                .map(|t| t.values.iter().map(|&x| self.param(x)).collect())
                .collect(),
        )
    }
}

/// Plain `f64` evaluation with no recording.
#[derive(Debug, Default, Clone, Copy)]
pub struct Eval;

pub(crate) fn dot_f64(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

impl Arith for Eval {
    type V = f64;

    fn constant(&mut self, x: f64) -> f64 {
        x
    }
    fn param(&mut self, x: f64) -> f64 {
        x
    }
    fn value(&self, v: f64) -> f64 {
        v
    }
    fn add(&mut self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&mut self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        a * b
    }
    fn div(&mut self, a: f64, b: f64) -> f64 {
        a / b
    }
    fn neg(&mut self, a: f64) -> f64 {
        -a
    }
    fn exp(&mut self, a: f64) -> f64 {
        a.exp()
    }
    fn log(&mut self, a: f64) -> f64 {
        a.ln()
    }
    fn softplus(&mut self, a: f64) -> f64 {
        special::softplus(a)
    }
    fn tanh(&mut self, a: f64) -> f64 {
        a.tanh()
    }
    fn relu(&mut self, a: f64) -> f64 {
        if a > 0.0 {
            a
        } else {
            0.0
        }
    }
    fn powc(&mut self, a: f64, p: f64) -> f64 {
        a.powf(p)
    }
    fn normal_cdf(&mut self, a: f64) -> f64 {
        special::normal_cdf(a)
    }
    fn max(&mut self, a: f64, b: f64) -> f64 {
        if a >= b {
            a
        } else {
            b
        }
    }
    fn sum(&mut self, xs: &[f64]) -> f64 {
        xs.iter().fold(0.0, |acc, x| acc + x)
    }
    fn logsumexp(&mut self, xs: &[f64]) -> f64 {
        special::logsumexp(xs)
    }
    fn dot(&mut self, a: &[f64], b: &[f64]) -> f64 {
        dot_f64(a, b)
    }
}
