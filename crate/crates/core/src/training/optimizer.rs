use super::TrainConfig;
use crate::autodiff::ParamStore;
use crate::error::{Error, Result};

pub const RMSPROP_RHO: f64 = 0.99;
pub const RMSPROP_EPS: f64 = 1e-8;

/// Running squared-gradient averages and momentum buffers, shaped like the
/// parameter store.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsPropState {
    pub square_avg: Vec<Vec<f64>>,
    pub momentum: Vec<Vec<f64>>,
    pub rho: f64,
    pub eps: f64,
}

impl RmsPropState {
    pub fn new(params: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.values.len()]).collect();
        RmsPropState {
            square_avg: zeros.clone(),
            momentum: zeros,
            rho: RMSPROP_RHO,
            eps: RMSPROP_EPS,
        }
    }
}

/// `v ← ρv + (1−ρ)g²`, `m ← μm + g/√(v+ε)`, `θ ← θ − lr·m − lr·wd·θ`.
///
/// Nothing is modified if any gradient is non-finite.
pub fn rmsprop_step(
    params: &mut ParamStore,
    grads: &[Vec<f64>],
    state: &mut RmsPropState,
    cfg: &TrainConfig,
) -> Result<()> {
    let tensors = params.tensors();
    if grads.len() != tensors.len() {
        return Err(Error::DimensionMismatch {
            expected: tensors.len(),
            actual: grads.len(),
        });
    }
    for (t, g) in tensors.iter().zip(grads) {
        if g.len() != t.values.len() {
            return Err(Error::DimensionMismatch {
                expected: t.values.len(),
                actual: g.len(),
            });
        }
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite gradient {} at {}[{i}]", g[i], t.name)));
        }
    }
    let (lr, mu, wd) = (cfg.learning_rate, cfg.momentum, cfg.weight_decay);
    let (rho, eps) = (state.rho, state.eps);
    let (tensors, _) = params.split_mut();
    for (((t, g), v), m) in tensors
        .iter_mut()
        .zip(grads)
        .zip(&mut state.square_avg)
        .zip(&mut state.momentum)
    {
        for (((theta, &g), v), m) in t.values.iter_mut().zip(g).zip(v.iter_mut()).zip(m.iter_mut()) {
            *v = rho * *v + (1.0 - rho) * g * g;
            *m = mu * *m + g / (*v + eps).sqrt();
            *theta -= lr * *m + lr * wd * *theta;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(values: Vec<f64>) -> ParamStore {
        let mut p = ParamStore::new();
        let n = values.len();
        p.add("w", vec![n], values);
        p
    }

    fn cfg(lr: f64, momentum: f64, wd: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: lr,
            momentum,
            weight_decay: wd,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_gradient_only_decays() {
        let mut p = store(vec![2.0, -4.0]);
        let mut s = RmsPropState::new(&p);
        rmsprop_step(&mut p, &[vec![0.0, 0.0]], &mut s, &cfg(0.1, 0.9, 0.01)).unwrap();
        assert_eq!(p.tensors()[0].values, vec![2.0 * (1.0 - 0.1 * 0.01), -4.0 * (1.0 - 0.1 * 0.01)]);
    }

    #[test]
    fn constant_gradient_reaches_geometric_limit() {
        let (lr, mu, g) = (1e-3, 0.9, 0.3);
        let mut p = store(vec![0.0]);
        let mut s = RmsPropState::new(&p);
        let c = cfg(lr, mu, 0.0);
        let mut prev = 0.0;
        let mut step = 0.0;
        for _ in 0..5000 {
            rmsprop_step(&mut p, &[vec![g]], &mut s, &c).unwrap();
            let now = p.tensors()[0].values[0];
            step = prev - now;
            prev = now;
        }
        let limit = lr * g / ((g * g + RMSPROP_EPS).sqrt() * (1.0 - mu));
        assert!((s.square_avg[0][0] - g * g).abs() < 1e-12);
        assert!((step - limit).abs() < 1e-12 * limit.max(1.0), "{step} vs {limit}");
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut p = store(vec![1.0, 1.0]);
        let mut s = RmsPropState::new(&p);
        let err = rmsprop_step(&mut p, &[vec![0.0, f64::NAN]], &mut s, &cfg(0.1, 0.0, 0.0)).unwrap_err();
        assert!(err.to_string().contains("w[1]"), "{err}");
        assert_eq!(p.tensors()[0].values, vec![1.0, 1.0]);
        assert!(s.square_avg[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn running_averages_stay_non_negative() {
        let mut p = store(vec![0.5; 3]);
        let mut s = RmsPropState::new(&p);
        for k in 0..100 {
            let g = vec![(k as f64).sin(), -(k as f64), 1e-3];
            rmsprop_step(&mut p, &[g], &mut s, &cfg(1e-2, 0.5, 1e-4)).unwrap();
            assert!(s.square_avg[0].iter().all(|&v| v >= 0.0));
        }
    }
}
