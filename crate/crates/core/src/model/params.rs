//! Dual-encoder parameters.
//!
//! The image encoder is an affine projection of region features into the
//! shared d-dimensional space; the text encoder mean-pools token embeddings
//! and applies its own affine projection.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::derived_rng;

/// All trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Image projection, `feature_dim x embed_dim`.
    pub w_img: Array2<f64>,
    /// Image projection bias, `embed_dim`.
    pub b_img: Array1<f64>,
    /// Token embedding table, `vocab_size x embed_dim`.
    pub embed: Array2<f64>,
    /// Text projection, `embed_dim x embed_dim`.
    pub w_txt: Array2<f64>,
    /// Text projection bias, `embed_dim`.
    pub b_txt: Array1<f64>,
}

/// Partial derivatives, shape-congruent to [`ModelParams`].
pub type Gradients = ModelParams;

impl ModelParams {
    pub fn feature_dim(&self) -> usize {
        self.w_img.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.w_img.ncols()
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            w_img: Array2::zeros(self.w_img.raw_dim()),
            b_img: Array1::zeros(self.b_img.raw_dim()),
            embed: Array2::zeros(self.embed.raw_dim()),
            w_txt: Array2::zeros(self.w_txt.raw_dim()),
            b_txt: Array1::zeros(self.b_txt.raw_dim()),
        }
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        self.w_img.raw_dim() == other.w_img.raw_dim()
            && self.b_img.raw_dim() == other.b_img.raw_dim()
            && self.embed.raw_dim() == other.embed.raw_dim()
            && self.w_txt.raw_dim() == other.w_txt.raw_dim()
            && self.b_txt.raw_dim() == other.b_txt.raw_dim()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// The five parameter tensors as flat slices, in a fixed order:
    /// w_img, b_img, embed, w_txt, b_txt.
    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            self.w_img.as_slice().expect("standard layout"),
            self.b_img.as_slice().expect("standard layout"),
            self.embed.as_slice().expect("standard layout"),
            self.w_txt.as_slice().expect("standard layout"),
            self.b_txt.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.w_img.as_slice_mut().expect("standard layout"),
            self.b_img.as_slice_mut().expect("standard layout"),
            self.embed.as_slice_mut().expect("standard layout"),
            self.w_txt.as_slice_mut().expect("standard layout"),
            self.b_txt.as_slice_mut().expect("standard layout"),
        ]
    }
}

/// Tensor index into [`ModelParams::tensors`] for the text-encoder group
/// (embedding table and text projection), which trains at its own rate.
pub fn is_text_group(tensor_idx: usize) -> bool {
    tensor_idx >= 2
}

/// Initialize weights from Uniform(-1/sqrt(d), 1/sqrt(d)); biases start at
/// zero. Deterministic per seed.
pub fn init_params(feature_dim: usize, vocab_size: usize, embed_dim: usize, seed: u64) -> Result<ModelParams> {
    if feature_dim == 0 || vocab_size == 0 || embed_dim == 0 {
        return Err(Error::InvalidDims(format!(
            "(f={feature_dim}, V={vocab_size}, d={embed_dim}) must all be >= 1"
        )));
    }
    let scale = 1.0 / (embed_dim as f64).sqrt();
    let mut rng = derived_rng(seed, "init");
    let mut fill = |rows: usize, cols: usize| -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
    };
    Ok(ModelParams {
        w_img: fill(feature_dim, embed_dim),
        b_img: Array1::zeros(embed_dim),
        embed: fill(vocab_size, embed_dim),
        w_txt: fill(embed_dim, embed_dim),
        b_txt: Array1::zeros(embed_dim),
    })
}
