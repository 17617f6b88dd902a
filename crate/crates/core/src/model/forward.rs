//! Forward pass: encoders, alignment scores, and the grounding loss.

use ndarray::{Array1, Array2};

use crate::data::Sample;
use crate::error::{Error, Result};
use crate::model::params::ModelParams;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Project region features into the shared space: `O[i] = r_i W_img + b_img`.
pub fn encode_image(params: &ModelParams, regions: &Array2<f64>) -> Result<Array2<f64>> {
    if regions.ncols() != params.feature_dim() {
        return Err(Error::Dimension(format!(
            "region width {} != feature_dim {}",
            regions.ncols(),
            params.feature_dim()
        )));
    }
    Ok(regions.dot(&params.w_img) + &params.b_img)
}

/// Mean-pool token embeddings per phrase, then project:
/// `P[j] = meanPool(E[phrase_j]) W_txt + b_txt`.
pub fn encode_text(params: &ModelParams, phrases: &[Vec<usize>]) -> Result<Array2<f64>> {
    let pooled = pool_phrases(params, phrases)?;
    Ok(pooled.dot(&params.w_txt) + &params.b_txt)
}

/// Mean-pooled embedding rows per phrase (the text encoder's input to its
/// projection). Shared between forward and backward.
pub(crate) fn pool_phrases(params: &ModelParams, phrases: &[Vec<usize>]) -> Result<Array2<f64>> {
    let d = params.embed_dim();
    let mut pooled = Array2::zeros((phrases.len(), d));
    for (j, phrase) in phrases.iter().enumerate() {
        if phrase.is_empty() {
            return Err(Error::EmptyPhrase);
        }
        let mut acc = Array1::<f64>::zeros(d);
        for &id in phrase {
            if id >= params.vocab_size() {
                return Err(Error::VocabId {
                    id,
                    vocab_size: params.vocab_size(),
                });
            }
            acc += &params.embed.row(id);
        }
        acc /= phrase.len() as f64;
        pooled.row_mut(j).assign(&acc);
    }
    Ok(pooled)
}

/// Cross-modal alignment scores `S = O P^T`; `S[i][j]` is the logit for
/// region i against phrase j.
pub fn alignment_scores(o: &Array2<f64>, p: &Array2<f64>) -> Result<Array2<f64>> {
    if o.ncols() != p.ncols() {
        return Err(Error::Dimension(format!(
            "embedding dims differ: O has {}, P has {}",
            o.ncols(),
            p.ncols()
        )));
    }
    Ok(o.dot(&p.t()))
}

/// Mean per-cell sigmoid binary cross-entropy between logits `s` and binary
/// targets `t`: `mean(softplus(s) - t * s)`.
pub fn grounding_loss(s: &Array2<f64>, t: &Array2<f64>) -> Result<f64> {
    if s.dim() != t.dim() {
        return Err(Error::Dimension(format!(
            "scores {:?} vs targets {:?}",
            s.dim(),
            t.dim()
        )));
    }
    let cells = s.len();
    if cells == 0 {
        return Err(Error::Dimension("empty score matrix".into()));
    }
    let mut sum = 0.0;
    for (&sij, &tij) in s.iter().zip(t.iter()) {
        if tij != 0.0 && tij != 1.0 {
            return Err(Error::Target(format!("entry {tij} is not 0 or 1")));
        }
        sum += softplus(sij) - tij * sij;
    }
    Ok(sum / cells as f64)
}

/// Alignment scores of one sample under `params`.
pub fn sample_scores(params: &ModelParams, sample: &Sample) -> Result<Array2<f64>> {
    let regions = regions_matrix(sample)?;
    let o = encode_image(params, &regions)?;
    let p = encode_text(params, &sample.phrases)?;
    alignment_scores(&o, &p)
}

/// Mean loss over a batch of samples (forward only).
pub fn batch_loss(params: &ModelParams, batch: &[&Sample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Dimension("empty batch".into()));
    }
    let mut total = 0.0;
    for sample in batch {
        let s = sample_scores(params, sample)?;
        let t = targets_matrix(sample);
        total += grounding_loss(&s, &t)?;
    }
    Ok(total / batch.len() as f64)
}

pub(crate) fn regions_matrix(sample: &Sample) -> Result<Array2<f64>> {
    let n = sample.n_regions();
    let f = sample.feature_dim();
    let flat: Vec<f64> = sample.regions.iter().flatten().copied().collect();
    Array2::from_shape_vec((n, f), flat)
        .map_err(|e| Error::Dimension(format!("ragged region rows: {e}")))
}

pub(crate) fn targets_matrix(sample: &Sample) -> Array2<f64> {
    let n = sample.n_regions();
    let m = sample.n_phrases();
    Array2::from_shape_fn((n, m), |(i, j)| f64::from(sample.targets[i][j]))
}
