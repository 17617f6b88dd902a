//! Analytic gradients of the batch-mean grounding loss, plus the
//! central-difference oracle used to verify them.

use ndarray::Axis;

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::model::forward::{
    batch_loss, grounding_loss, pool_phrases, regions_matrix, sigmoid, targets_matrix,
};
use crate::model::params::{Gradients, ModelParams};

/// Batch-mean loss and its exact partial derivatives with respect to every
/// parameter.
pub fn backward(params: &ModelParams, batch: &[&Sample]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Dimension("empty batch".into()));
    }
    let mut grads = params.zeros_like();
    let mut loss_sum = 0.0;

    for sample in batch {
        let regions = regions_matrix(sample)?;
        if regions.ncols() != params.feature_dim() {
            return Err(Error::Dimension(format!(
                "region width {} != feature_dim {}",
                regions.ncols(),
                params.feature_dim()
            )));
        }
        let pooled = pool_phrases(params, &sample.phrases)?;
        let o = regions.dot(&params.w_img) + &params.b_img;
        let p = pooled.dot(&params.w_txt) + &params.b_txt;
        let s = o.dot(&p.t());
        let t = targets_matrix(sample);
        loss_sum += grounding_loss(&s, &t)?;

        // dL/dS for the per-sample cell mean: (sigma(S) - T) / (N*M)
        let cells = s.len() as f64;
        let gs = (s.mapv(sigmoid) - &t) / cells;

        let d_o = gs.dot(&p);
        let d_p = gs.t().dot(&o);
        grads.w_img += &regions.t().dot(&d_o);
        grads.b_img += &d_o.sum_axis(Axis(0));
        grads.w_txt += &pooled.t().dot(&d_p);
        grads.b_txt += &d_p.sum_axis(Axis(0));

        // Through the projection into the mean-pool: a token appearing k
        // times in a phrase of length L receives weight k/L.
        let d_pooled = d_p.dot(&params.w_txt.t());
        for (j, phrase) in sample.phrases.iter().enumerate() {
            let weight = 1.0 / phrase.len() as f64;
            for &id in phrase {
                grads
                    .embed
                    .row_mut(id)
                    .scaled_add(weight, &d_pooled.row(j));
            }
        }
    }

    let inv_b = 1.0 / batch.len() as f64;
    for tensor in grads.tensors_mut() {
        for g in tensor {
            *g *= inv_b;
        }
    }
    Ok((loss_sum * inv_b, grads))
}

/// Central differences `(L(theta+eps) - L(theta-eps)) / (2 eps)` per
/// parameter. Exact-gradient oracle; quadratic in `eps`.
pub fn finite_diff_grad(params: &ModelParams, batch: &[&Sample], eps: f64) -> Result<Gradients> {
    if !(eps > 0.0) {
        return Err(Error::InvalidSpec(format!("eps {eps} must be > 0")));
    }
    let mut work = params.clone();
    let mut grads = params.zeros_like();
    for tensor_idx in 0..5 {
        let len = params.tensors()[tensor_idx].len();
        for i in 0..len {
            let orig = work.tensors()[tensor_idx][i];
            work.tensors_mut()[tensor_idx][i] = orig + eps;
            let loss_plus = batch_loss(&work, batch)?;
            work.tensors_mut()[tensor_idx][i] = orig - eps;
            let loss_minus = batch_loss(&work, batch)?;
            work.tensors_mut()[tensor_idx][i] = orig;
            grads.tensors_mut()[tensor_idx][i] = (loss_plus - loss_minus) / (2.0 * eps);
        }
    }
    Ok(grads)
}

/// Relative error with floor: `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest relative discrepancy between two gradient sets.
pub fn max_rel_err(a: &Gradients, b: &Gradients) -> f64 {
    a.tensors()
        .iter()
        .zip(b.tensors().iter())
        .flat_map(|(ta, tb)| ta.iter().zip(tb.iter()))
        .map(|(&x, &y)| rel_err(x, y))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::init_params;
    use ndarray::{array, Array1};
    use rand::Rng;

    /// A random small instance with the given dims, deterministic per seed.
    pub(crate) fn random_batch(
        n: usize,
        m: usize,
        f: usize,
        vocab: usize,
        batch: usize,
        seed: u64,
    ) -> Vec<Sample> {
        let mut rng = crate::seeding::derived_rng(seed, "gradcheck");
        (0..batch)
            .map(|_| {
                let regions = (0..n)
                    .map(|_| (0..f).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .collect();
                let phrases = (0..m)
                    .map(|_| {
                        let len = rng.random_range(1..=3);
                        (0..len).map(|_| rng.random_range(0..vocab)).collect()
                    })
                    .collect();
                let targets = (0..n)
                    .map(|_| (0..m).map(|_| u8::from(rng.random::<bool>())).collect())
                    .collect();
                Sample {
                    regions,
                    phrases,
                    targets,
                }
            })
            .collect()
    }

    #[test]
    fn analytic_matches_finite_differences() {
        let params = init_params(4, 10, 3, 99).unwrap();
        let samples = random_batch(3, 2, 4, 10, 2, 99);
        let batch: Vec<&Sample> = samples.iter().collect();
        let (_, analytic) = backward(&params, &batch).unwrap();
        let numeric = finite_diff_grad(&params, &batch, 1e-5).unwrap();
        let err = max_rel_err(&analytic, &numeric);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn saturated_batch_has_vanishing_gradients() {
        // One region, one phrase; rig the parameters so the logit is +20 on
        // the positive cell.
        let params = ModelParams {
            w_img: array![[20.0]],
            b_img: Array1::zeros(1),
            embed: array![[1.0]],
            w_txt: array![[1.0]],
            b_txt: Array1::zeros(1),
        };
        let sample = Sample {
            regions: vec![vec![1.0]],
            phrases: vec![vec![0]],
            targets: vec![vec![1]],
        };
        let (loss, grads) = backward(&params, &[&sample]).unwrap();
        assert!(loss < 1e-8);
        for tensor in grads.tensors() {
            assert!(tensor.iter().all(|g| g.abs() < 1e-6));
        }
    }

    #[test]
    fn duplicating_the_batch_changes_nothing() {
        let params = init_params(3, 6, 2, 5).unwrap();
        let samples = random_batch(2, 2, 3, 6, 3, 5);
        let single: Vec<&Sample> = samples.iter().collect();
        let doubled: Vec<&Sample> = samples.iter().chain(samples.iter()).collect();
        let (loss1, g1) = backward(&params, &single).unwrap();
        let (loss2, g2) = backward(&params, &doubled).unwrap();
        assert!((loss1 - loss2).abs() < 1e-12);
        for (ta, tb) in g1.tensors().iter().zip(g2.tensors().iter()) {
            for (&a, &b) in ta.iter().zip(tb.iter()) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn empty_batch_is_error() {
        let params = init_params(2, 2, 2, 0).unwrap();
        assert!(backward(&params, &[]).is_err());
    }

    #[test]
    fn finite_diff_matches_scalar_sigmoid_derivative() {
        // With r=1, E=[1], W_txt=[1]: S = w and dL/dw = sigma(S) - T.
        let logit = 0.5;
        let params = ModelParams {
            w_img: array![[logit]],
            b_img: Array1::zeros(1),
            embed: array![[1.0]],
            w_txt: array![[1.0]],
            b_txt: Array1::zeros(1),
        };
        let sample = Sample {
            regions: vec![vec![1.0]],
            phrases: vec![vec![0]],
            targets: vec![vec![1]],
        };
        let numeric = finite_diff_grad(&params, &[&sample], 1e-5).unwrap();
        let expected = sigmoid(logit) - 1.0;
        assert!((numeric.w_img[[0, 0]] - expected).abs() < 1e-6);
    }

    #[test]
    fn halving_eps_shrinks_error_quadratically() {
        let params = init_params(3, 5, 2, 17).unwrap();
        let samples = random_batch(2, 2, 3, 5, 1, 17);
        let batch: Vec<&Sample> = samples.iter().collect();
        let (_, analytic) = backward(&params, &batch).unwrap();

        let err_at = |eps: f64| -> f64 {
            let numeric = finite_diff_grad(&params, &batch, eps).unwrap();
            analytic
                .tensors()
                .iter()
                .zip(numeric.tensors().iter())
                .flat_map(|(a, n)| a.iter().zip(n.iter()))
                .map(|(&a, &n)| (a - n).abs())
                .fold(0.0, f64::max)
        };
        let coarse = err_at(1e-3);
        let fine = err_at(5e-4);
        assert!(fine > 0.0, "finite-difference error vanished; widen the fixture");
        let ratio = coarse / fine;
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected ~4x error reduction, got {ratio} ({coarse} -> {fine})"
        );
    }

    #[test]
    fn zero_gradient_point_returns_near_zero() {
        let params = ModelParams {
            w_img: array![[20.0]],
            b_img: Array1::zeros(1),
            embed: array![[1.0]],
            w_txt: array![[1.0]],
            b_txt: Array1::zeros(1),
        };
        let sample = Sample {
            regions: vec![vec![1.0]],
            phrases: vec![vec![0]],
            targets: vec![vec![1]],
        };
        let numeric = finite_diff_grad(&params, &[&sample], 1e-5).unwrap();
        for tensor in numeric.tensors() {
            assert!(tensor.iter().all(|g| g.abs() < 1e-6));
        }
    }

    #[test]
    fn non_positive_eps_rejected() {
        let params = init_params(2, 2, 2, 0).unwrap();
        let samples = random_batch(1, 1, 2, 2, 1, 0);
        let batch: Vec<&Sample> = samples.iter().collect();
        assert!(finite_diff_grad(&params, &batch, 0.0).is_err());
        assert!(finite_diff_grad(&params, &batch, -1e-5).is_err());
    }
}
