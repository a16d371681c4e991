use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{Arith, Tape};
use crate::data::SurvivalRecord;
use crate::error::Result;
use crate::mdn::{NormStats, Regime, SurvivalMdn};

/// Global gradient-norm threshold applied before each optimizer step.
pub const CLIP_NORM: f64 = 100.0;

// Records per independent tape when records do not interact. Fixed so the
// result does not depend on the thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone)]
pub struct BatchGradient {
    /// Training-regime NLL of the batch.
    pub loss: f64,
    pub grads: Vec<Vec<f64>>,
    /// Batch-norm statistics observed in this pass.
    pub observed: Vec<NormStats>,
}

/// NLL of a batch in the training regime and its gradient with respect to
/// every parameter. Records are expected standardized.
pub fn batch_gradient(
    mdn: &SurvivalMdn,
    batch: &[&SurvivalRecord],
    dropout_rng: &mut ChaCha8Rng,
) -> Result<BatchGradient> {
    let mut regime = Regime::Training { rng: dropout_rng };
    if mdn.couples_records(&regime) || batch.len() <= CHUNK {
        let mut tape = Tape::new();
        let bound = tape.bind(mdn.params());
        let mut observed = Vec::new();
        let out = mdn.nll_graph(&mut tape, &bound, batch, &mut regime, Some(&mut observed));
        tape.set_output(out);
        tape.backward()?;
        return Ok(BatchGradient {
            loss: tape.value(out),
            grads: tape.param_gradients(&bound),
            observed,
        });
    }

    // Without dropout or batch statistics the training pass equals the
    // inference pass, so chunks can be differentiated independently.
    let parts: Vec<Result<(f64, Vec<Vec<f64>>)>> = batch
        .par_chunks(CHUNK)
        .map_init(Tape::new, |tape, chunk| {
            tape.reset();
            let bound = tape.bind(mdn.params());
            let out = mdn.nll_graph(tape, &bound, chunk, &mut Regime::Inference, None);
            tape.set_output(out);
            tape.backward()?;
            Ok((tape.value(out), tape.param_gradients(&bound)))
        })
        .collect();

    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grads: Vec<Vec<f64>> = mdn.params().tensors().iter().map(|t| vec![0.0; t.values.len()]).collect();
    for (part, chunk) in parts.into_iter().zip(batch.chunks(CHUNK)) {
        let (l, g) = part?;
        let w = chunk.len() as f64 / n;
        loss += w * l;
        for (acc, gi) in grads.iter_mut().zip(&g) {
            for (a, &v) in acc.iter_mut().zip(gi) {
                *a += w * v;
            }
        }
    }
    Ok(BatchGradient {
        loss,
        grads,
        observed: Vec::new(),
    })
}

/// Rescales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdn::MdnConfig;
    use rand::{Rng, SeedableRng};

    fn records(n: usize, seed: u64) -> Vec<SurvivalRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| SurvivalRecord {
                features: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                time: rng.random_range(0.1..3.0),
                event: rng.random_bool(0.6),
            })
            .collect()
    }

    #[test]
    fn chunked_gradient_matches_single_tape() {
        let cfg = MdnConfig {
            num_components: 3,
            backbone_hidden: vec![8],
            head_hidden: vec![8],
            ..MdnConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mdn = SurvivalMdn::new(2, &cfg, &mut rng).unwrap();
        let recs = records(200, 2);
        let refs: Vec<&SurvivalRecord> = recs.iter().collect();
        let chunked = batch_gradient(&mdn, &refs, &mut rng).unwrap();

        let mut tape = Tape::new();
        let bound = tape.bind(mdn.params());
        let out = mdn.nll_graph(&mut tape, &bound, &refs, &mut Regime::Inference, None);
        tape.set_output(out);
        tape.backward().unwrap();
        let whole = tape.param_gradients(&bound);

        assert!((chunked.loss - tape.value(out)).abs() < 1e-12);
        assert!((chunked.loss - mdn.nll(&recs).unwrap()).abs() < 1e-12);
        for (a, b) in chunked.grads.iter().flatten().zip(whole.iter().flatten()) {
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn clipping_bounds_the_norm() {
        let mut g = vec![vec![300.0, 400.0], vec![0.0]];
        assert_eq!(clip_global_norm(&mut g, 100.0), 500.0);
        assert!((g[0][0] - 60.0).abs() < 1e-12 && (g[0][1] - 80.0).abs() < 1e-12);
        let mut small = vec![vec![1.0]];
        clip_global_norm(&mut small, 100.0);
        assert_eq!(small[0][0], 1.0);
    }
}
