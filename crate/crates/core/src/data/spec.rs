//! Declarative description of one synthetic shifted domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One nameable concept: its prompt template and where its region features
/// cluster in feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSpec {
    pub name: String,
    /// Prompt template with optional `[attribute]` slots.
    pub template: String,
    /// Cluster center for regions realizing this concept; length `feature_dim`.
    pub cluster_mean: Vec<f64>,
}

fn default_concepts_per_sample() -> usize {
    1
}

fn default_positives_per_concept() -> usize {
    2
}

/// Generation parameters for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub domain_id: String,
    pub feature_dim: usize,
    pub regions_per_sample: usize,
    pub phrases_per_sample: usize,
    /// How many concepts are present (have positive regions) in each sample.
    #[serde(default = "default_concepts_per_sample")]
    pub concepts_per_sample: usize,
    /// Positive regions drawn from each present concept's cluster.
    #[serde(default = "default_positives_per_concept")]
    pub positives_per_concept: usize,
    pub train_count: usize,
    pub test_count: usize,
    /// Isotropic standard deviation around cluster means (and around zero for
    /// background regions).
    pub cluster_spread: f64,
    /// Fraction of this domain's phrase words remapped into the shared word
    /// pool; 0 keeps the authored words, 1 replaces them all.
    pub vocab_overlap: f64,
    pub concepts: Vec<ConceptSpec>,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(format!("{}: {msg}", self.domain_id)));
        if self.domain_id.is_empty() {
            return Err(Error::InvalidSpec("empty domain_id".into()));
        }
        if self.feature_dim == 0 {
            return fail("feature_dim must be >= 1".into());
        }
        if self.train_count == 0 || self.test_count == 0 {
            return fail("train_count and test_count must be >= 1".into());
        }
        if self.regions_per_sample == 0 || self.phrases_per_sample == 0 {
            return fail("regions_per_sample and phrases_per_sample must be >= 1".into());
        }
        if !(self.cluster_spread > 0.0) {
            return fail(format!("cluster_spread {} must be > 0", self.cluster_spread));
        }
        if !(0.0..=1.0).contains(&self.vocab_overlap) {
            return fail(format!("vocab_overlap {} outside [0, 1]", self.vocab_overlap));
        }
        if self.concepts.is_empty() {
            return fail("at least one concept required".into());
        }
        if self.concepts_per_sample == 0 || self.concepts_per_sample > self.phrases_per_sample {
            return fail(format!(
                "concepts_per_sample {} must be in 1..={}",
                self.concepts_per_sample, self.phrases_per_sample
            ));
        }
        if self.phrases_per_sample > self.concepts.len() {
            return fail(format!(
                "phrases_per_sample {} exceeds concept count {}",
                self.phrases_per_sample,
                self.concepts.len()
            ));
        }
        if self.positives_per_concept == 0 {
            return fail("positives_per_concept must be >= 1".into());
        }
        if self.concepts_per_sample * self.positives_per_concept > self.regions_per_sample {
            return fail(format!(
                "{} present concepts x {} positives exceed {} regions",
                self.concepts_per_sample, self.positives_per_concept, self.regions_per_sample
            ));
        }
        let mut names: Vec<&str> = self.concepts.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.concepts.len() {
            return fail("concept names must be distinct".into());
        }
        for concept in &self.concepts {
            if concept.cluster_mean.len() != self.feature_dim {
                return fail(format!(
                    "concept {} cluster_mean has length {}, expected {}",
                    concept.name,
                    concept.cluster_mean.len(),
                    self.feature_dim
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn concept(name: &str, template: &str, mean: Vec<f64>) -> ConceptSpec {
        ConceptSpec {
            name: name.into(),
            template: template.into(),
            cluster_mean: mean,
        }
    }

    fn base_spec() -> DomainSpec {
        DomainSpec {
            domain_id: "siteA".into(),
            feature_dim: 2,
            regions_per_sample: 4,
            phrases_per_sample: 2,
            concepts_per_sample: 1,
            positives_per_concept: 1,
            train_count: 10,
            test_count: 5,
            cluster_spread: 0.5,
            vocab_overlap: 0.0,
            concepts: vec![
                concept("ulcer", "crimson ulcer", vec![3.0, 0.0]),
                concept("cyst", "smooth cyst", vec![-3.0, 0.0]),
            ],
        }
    }

    #[test]
    fn valid_spec_passes() {
        base_spec().validate().unwrap();
    }

    #[test]
    fn zero_counts_rejected() {
        let mut s = base_spec();
        s.train_count = 0;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn non_positive_spread_rejected() {
        let mut s = base_spec();
        s.cluster_spread = 0.0;
        assert!(s.validate().is_err());
        s.cluster_spread = -1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn overlap_outside_unit_interval_rejected() {
        let mut s = base_spec();
        s.vocab_overlap = 1.5;
        assert!(s.validate().is_err());
    }

    #[test]
    fn mean_width_must_match_feature_dim() {
        let mut s = base_spec();
        s.concepts[0].cluster_mean = vec![1.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn too_many_positives_rejected() {
        let mut s = base_spec();
        s.positives_per_concept = 5;
        assert!(s.validate().is_err());
    }
}
