//! Grounding instances and per-domain datasets.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::seeding::derived_rng;

/// One grounding instance: N region feature vectors, M tokenized phrases and
/// the binary N x M target matrix marking which region realizes which phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub regions: Vec<Vec<f64>>,
    pub phrases: Vec<Vec<usize>>,
    pub targets: Vec<Vec<u8>>,
}

impl Sample {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_phrases(&self) -> usize {
        self.phrases.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.regions.first().map_or(0, Vec::len)
    }

    /// Check the structural invariants: non-empty regions and phrases, a
    /// consistent feature width, binary targets of shape N x M.
    pub fn validate(&self, feature_dim: usize) -> Result<()> {
        if self.regions.is_empty() {
            return Err(Error::InvalidSpec("sample has no regions".into()));
        }
        if self.phrases.is_empty() {
            return Err(Error::InvalidSpec("sample has no phrases".into()));
        }
        for region in &self.regions {
            if region.len() != feature_dim {
                return Err(Error::Dimension(format!(
                    "region width {} != feature_dim {feature_dim}",
                    region.len()
                )));
            }
            if region.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSpec("non-finite region feature".into()));
            }
        }
        if self.phrases.iter().any(Vec::is_empty) {
            return Err(Error::EmptyPhrase);
        }
        if self.targets.len() != self.n_regions() {
            return Err(Error::Dimension(format!(
                "targets have {} rows, expected {}",
                self.targets.len(),
                self.n_regions()
            )));
        }
        for row in &self.targets {
            if row.len() != self.n_phrases() {
                return Err(Error::Dimension(format!(
                    "target row width {} != phrase count {}",
                    row.len(),
                    self.n_phrases()
                )));
            }
            if row.iter().any(|&t| t > 1) {
                return Err(Error::Target("entries must be 0 or 1".into()));
            }
        }
        Ok(())
    }
}

/// Train/test splits for one domain, sharing one vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainDataset {
    pub domain_id: String,
    pub feature_dim: usize,
    pub vocab: Vocabulary,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DomainDataset {
    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "domain {} has an empty split",
                self.domain_id
            )));
        }
        for sample in self.train.iter().chain(&self.test) {
            sample.validate(self.feature_dim)?;
            for phrase in &sample.phrases {
                for &id in phrase {
                    if id >= self.vocab.len() {
                        return Err(Error::VocabId {
                            id,
                            vocab_size: self.vocab.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Keep `k` distinct train samples, chosen by a seeded shuffle-and-take; the
/// test split is untouched.
pub fn k_shot_subsample(ds: &DomainDataset, k: usize, seed: u64) -> Result<DomainDataset> {
    if k == 0 || k > ds.train.len() {
        return Err(Error::InvalidK {
            k,
            max: ds.train.len(),
        });
    }
    let mut rng = derived_rng(seed, &format!("kshot/{}", ds.domain_id));
    let mut indices: Vec<usize> = (0..ds.train.len()).collect();
    indices.shuffle(&mut rng);
    let train = indices[..k].iter().map(|&i| ds.train[i].clone()).collect();
    Ok(DomainDataset {
        domain_id: ds.domain_id.clone(),
        feature_dim: ds.feature_dim,
        vocab: ds.vocab.clone(),
        train,
        test: ds.test.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset(n_train: usize) -> DomainDataset {
        let vocab = Vocabulary::build(["pink", "polyp"]);
        let sample = |tag: f64| Sample {
            regions: vec![vec![tag, 0.0]],
            phrases: vec![vec![2, 3]],
            targets: vec![vec![1]],
        };
        DomainDataset {
            domain_id: "tiny".into(),
            feature_dim: 2,
            vocab,
            train: (0..n_train).map(|i| sample(i as f64)).collect(),
            test: vec![sample(-1.0)],
        }
    }

    #[test]
    fn k_shot_draws_distinct_and_leaves_test() {
        let ds = tiny_dataset(50);
        let sub = k_shot_subsample(&ds, 10, 7).unwrap();
        assert_eq!(sub.train.len(), 10);
        assert_eq!(sub.test, ds.test);
        let mut tags: Vec<i64> = sub.train.iter().map(|s| s.regions[0][0] as i64).collect();
        tags.sort_unstable();
        tags.dedup();
        assert_eq!(tags.len(), 10, "k-shot produced duplicates");
    }

    #[test]
    fn full_k_is_a_permutation() {
        let ds = tiny_dataset(20);
        let sub = k_shot_subsample(&ds, 20, 3).unwrap();
        let mut original: Vec<i64> = ds.train.iter().map(|s| s.regions[0][0] as i64).collect();
        let mut taken: Vec<i64> = sub.train.iter().map(|s| s.regions[0][0] as i64).collect();
        original.sort_unstable();
        taken.sort_unstable();
        assert_eq!(original, taken);
    }

    #[test]
    fn k_out_of_range_is_error() {
        let ds = tiny_dataset(5);
        assert!(matches!(
            k_shot_subsample(&ds, 0, 1),
            Err(Error::InvalidK { k: 0, .. })
        ));
        assert!(matches!(
            k_shot_subsample(&ds, 6, 1),
            Err(Error::InvalidK { k: 6, .. })
        ));
    }

    #[test]
    fn k_shot_is_deterministic() {
        let ds = tiny_dataset(30);
        assert_eq!(k_shot_subsample(&ds, 7, 9).unwrap(), k_shot_subsample(&ds, 7, 9).unwrap());
    }

    #[test]
    fn sample_validation_catches_bad_targets() {
        let mut s = Sample {
            regions: vec![vec![0.0, 0.0]],
            phrases: vec![vec![2]],
            targets: vec![vec![2]],
        };
        assert!(matches!(s.validate(2), Err(Error::Target(_))));
        s.targets = vec![vec![1, 0]];
        assert!(matches!(s.validate(2), Err(Error::Dimension(_))));
    }
}
