//! Checkpoint files: dims, flat row-major parameter arrays, optimizer state.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::adam::{AdamHyper, OptState};
use crate::model::params::ModelParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatTensors {
    pub w_img: Vec<f64>,
    pub b_img: Vec<f64>,
    pub embed: Vec<f64>,
    pub w_txt: Vec<f64>,
    pub b_txt: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatOptState {
    pub t: u64,
    pub hyper: AdamHyper,
    pub m: FlatTensors,
    pub v: FlatTensors,
}

/// On-disk checkpoint: model dims, parameters and optimizer state, plus the
/// step index and domain the model had just trained on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub feature_dim: usize,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub step: usize,
    pub domain_id: String,
    pub params: FlatTensors,
    pub opt: FlatOptState,
}

fn flatten(params: &ModelParams) -> FlatTensors {
    let t = params.tensors();
    FlatTensors {
        w_img: t[0].to_vec(),
        b_img: t[1].to_vec(),
        embed: t[2].to_vec(),
        w_txt: t[3].to_vec(),
        b_txt: t[4].to_vec(),
    }
}

fn unflatten(flat: &FlatTensors, f: usize, v: usize, d: usize) -> Result<ModelParams> {
    let check = |name: &str, got: usize, want: usize| -> Result<()> {
        if got != want {
            return Err(Error::Checkpoint(format!(
                "{name} has {got} values, expected {want}"
            )));
        }
        Ok(())
    };
    check("w_img", flat.w_img.len(), f * d)?;
    check("b_img", flat.b_img.len(), d)?;
    check("embed", flat.embed.len(), v * d)?;
    check("w_txt", flat.w_txt.len(), d * d)?;
    check("b_txt", flat.b_txt.len(), d)?;
    let shape_err = |e: ndarray::ShapeError| Error::Checkpoint(e.to_string());
    Ok(ModelParams {
        w_img: Array2::from_shape_vec((f, d), flat.w_img.clone()).map_err(shape_err)?,
        b_img: Array1::from_vec(flat.b_img.clone()),
        embed: Array2::from_shape_vec((v, d), flat.embed.clone()).map_err(shape_err)?,
        w_txt: Array2::from_shape_vec((d, d), flat.w_txt.clone()).map_err(shape_err)?,
        b_txt: Array1::from_vec(flat.b_txt.clone()),
    })
}

impl CheckpointFile {
    pub fn new(step: usize, domain_id: &str, params: &ModelParams, opt: &OptState) -> Self {
        CheckpointFile {
            feature_dim: params.feature_dim(),
            vocab_size: params.vocab_size(),
            embed_dim: params.embed_dim(),
            step,
            domain_id: domain_id.to_string(),
            params: flatten(params),
            opt: FlatOptState {
                t: opt.t,
                hyper: opt.hyper,
                m: flatten(&opt.m),
                v: flatten(&opt.v),
            },
        }
    }

    pub fn into_parts(&self) -> Result<(ModelParams, OptState)> {
        let (f, v, d) = (self.feature_dim, self.vocab_size, self.embed_dim);
        if f == 0 || v == 0 || d == 0 {
            return Err(Error::Checkpoint(format!(
                "invalid dims (f={f}, V={v}, d={d})"
            )));
        }
        let params = unflatten(&self.params, f, v, d)?;
        let m = unflatten(&self.opt.m, f, v, d)?;
        let vmom = unflatten(&self.opt.v, f, v, d)?;
        if !params.all_finite() {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok((
            params,
            OptState {
                m,
                v: vmom,
                t: self.opt.t,
                hyper: self.opt.hyper,
            },
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text =
            serde_json::to_string(self).map_err(|e| Error::Checkpoint(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::init_params;

    #[test]
    fn checkpoint_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let params = init_params(4, 10, 3, 11).unwrap();
        let opt = OptState::new(&params, AdamHyper::default());
        let file = CheckpointFile::new(2, "siteB", &params, &opt);
        file.save(&path).unwrap();
        let loaded = CheckpointFile::load(&path).unwrap();
        let (p2, o2) = loaded.into_parts().unwrap();
        assert_eq!(params, p2);
        assert_eq!(opt, o2);
        assert_eq!(loaded.step, 2);
        assert_eq!(loaded.domain_id, "siteB");
    }

    #[test]
    fn wrong_lengths_rejected() {
        let params = init_params(4, 10, 3, 11).unwrap();
        let opt = OptState::new(&params, AdamHyper::default());
        let mut file = CheckpointFile::new(1, "x", &params, &opt);
        file.params.w_img.pop();
        assert!(matches!(file.into_parts(), Err(Error::Checkpoint(_))));
    }
}
