//! Synthetic domain generation.
//!
//! Each sample places a few "present" concepts into a window of N region
//! feature vectors: positive regions are drawn from the concept's cluster,
//! the rest from a zero-mean background cluster. Phrases are the present
//! concepts' prompts plus distractor prompts from absent concepts, whose
//! target columns are all zero. Shifting the cluster means between domains
//! realizes domain shift; the vocab_overlap fraction controls how much of
//! the wording is shared between domains.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::kb::{build_prompt, AttributeKb};
use crate::data::sample::{DomainDataset, Sample};
use crate::data::spec::DomainSpec;
use crate::data::vocab::{tokenize, Vocabulary};
use crate::error::Result;
use crate::seeding::{derived_rng, derived_seed};

/// Generic words shared between domains when `vocab_overlap > 0`.
const SHARED_POOL: [&str; 8] = [
    "lesion", "mass", "region", "tissue", "area", "spot", "zone", "patch",
];

/// Per-domain seed derived from a run-level seed and the domain id.
pub fn domain_seed(base_seed: u64, domain_id: &str) -> u64 {
    derived_seed(base_seed, &format!("domain/{domain_id}"))
}

/// The domain's phrase strings, one per concept, in concept order.
///
/// Slot templates are filled from the KB first; then a seeded fraction
/// `vocab_overlap` of the distinct words is remapped into [`SHARED_POOL`].
pub fn domain_phrases(spec: &DomainSpec, kb: &AttributeKb, seed: u64) -> Result<Vec<String>> {
    let mut phrases = Vec::with_capacity(spec.concepts.len());
    for concept in &spec.concepts {
        phrases.push(build_prompt(&concept.template, &concept.name, kb)?);
    }
    if spec.vocab_overlap > 0.0 {
        let mut rng = derived_rng(seed, "overlap");
        let mut remap: Vec<(String, String)> = Vec::new();
        for phrase in &phrases {
            for word in phrase.split_whitespace() {
                if remap.iter().any(|(w, _)| w == word) {
                    continue;
                }
                let replacement = if rng.random::<f64>() < spec.vocab_overlap {
                    SHARED_POOL[rng.random_range(0..SHARED_POOL.len())].to_string()
                } else {
                    word.to_string()
                };
                remap.push((word.to_string(), replacement));
            }
        }
        phrases = phrases
            .iter()
            .map(|phrase| {
                phrase
                    .split_whitespace()
                    .map(|w| {
                        remap
                            .iter()
                            .find(|(orig, _)| orig == w)
                            .map(|(_, repl)| repl.as_str())
                            .unwrap_or(w)
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
    }
    Ok(phrases)
}

/// Build the shared vocabulary over every domain's phrase words, in spec
/// order, with reserved tokens first.
pub fn build_vocab(specs: &[DomainSpec], kb: &AttributeKb, base_seed: u64) -> Result<Vocabulary> {
    let mut words: Vec<String> = Vec::new();
    for spec in specs {
        let phrases = domain_phrases(spec, kb, domain_seed(base_seed, &spec.domain_id))?;
        for phrase in &phrases {
            for word in phrase.split_whitespace() {
                words.push(word.to_string());
            }
        }
    }
    Ok(Vocabulary::build(words))
}

/// Generate one domain's train and test splits. Deterministic in
/// `(spec, seed)`; the two splits use independent derived streams.
pub fn synth_domain(
    spec: &DomainSpec,
    kb: &AttributeKb,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<DomainDataset> {
    spec.validate()?;
    let phrases = domain_phrases(spec, kb, seed)?;
    let phrase_ids: Vec<Vec<usize>> = phrases
        .iter()
        .map(|p| tokenize(p, vocab))
        .collect::<Result<_>>()?;

    let mut train_rng = derived_rng(seed, "train");
    let mut test_rng = derived_rng(seed, "test");
    let train = (0..spec.train_count)
        .map(|_| gen_sample(spec, &phrase_ids, &mut train_rng))
        .collect();
    let test = (0..spec.test_count)
        .map(|_| gen_sample(spec, &phrase_ids, &mut test_rng))
        .collect();

    let ds = DomainDataset {
        domain_id: spec.domain_id.clone(),
        feature_dim: spec.feature_dim,
        vocab: vocab.clone(),
        train,
        test,
    };
    ds.validate()?;
    Ok(ds)
}

fn gen_sample(spec: &DomainSpec, phrase_ids: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Sample {
    let n = spec.regions_per_sample;
    let m = spec.phrases_per_sample;
    let n_concepts = spec.concepts.len();

    // Present concepts, then distractors from the remainder.
    let mut concept_order: Vec<usize> = (0..n_concepts).collect();
    concept_order.shuffle(rng);
    let present = &concept_order[..spec.concepts_per_sample];
    let distractors = &concept_order[spec.concepts_per_sample..m];

    // Phrase slots carry (concept index, is_present); shuffled so that the
    // positive column is not always first.
    let mut slots: Vec<(usize, bool)> = present
        .iter()
        .map(|&c| (c, true))
        .chain(distractors.iter().map(|&c| (c, false)))
        .collect();
    slots.shuffle(rng);

    // Region assignment: the first positives_per_concept shuffled region
    // indices belong to the first present concept, and so on.
    let mut region_order: Vec<usize> = (0..n).collect();
    region_order.shuffle(rng);
    let mut region_concept: Vec<Option<usize>> = vec![None; n];
    for (k, &concept_idx) in present.iter().enumerate() {
        let start = k * spec.positives_per_concept;
        for &region_idx in &region_order[start..start + spec.positives_per_concept] {
            region_concept[region_idx] = Some(concept_idx);
        }
    }

    let regions: Vec<Vec<f64>> = region_concept
        .iter()
        .map(|assigned| {
            (0..spec.feature_dim)
                .map(|dim| {
                    let noise: f64 = rng.sample(StandardNormal);
                    let mean = assigned.map_or(0.0, |c| spec.concepts[c].cluster_mean[dim]);
                    mean + spec.cluster_spread * noise
                })
                .collect()
        })
        .collect();

    let phrases: Vec<Vec<usize>> = slots.iter().map(|&(c, _)| phrase_ids[c].clone()).collect();
    let targets: Vec<Vec<u8>> = region_concept
        .iter()
        .map(|assigned| {
            slots
                .iter()
                .map(|&(c, is_present)| u8::from(is_present && *assigned == Some(c)))
                .collect()
        })
        .collect();

    Sample {
        regions,
        phrases,
        targets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::spec::ConceptSpec;
    use std::collections::BTreeSet;

    fn concept(name: &str, template: &str, mean: Vec<f64>) -> ConceptSpec {
        ConceptSpec {
            name: name.into(),
            template: template.into(),
            cluster_mean: mean,
        }
    }

    fn spec_a() -> DomainSpec {
        DomainSpec {
            domain_id: "siteA".into(),
            feature_dim: 4,
            regions_per_sample: 8,
            phrases_per_sample: 2,
            concepts_per_sample: 1,
            positives_per_concept: 2,
            train_count: 200,
            test_count: 100,
            cluster_spread: 0.5,
            vocab_overlap: 0.0,
            concepts: vec![
                concept("ulcer", "crimson ulcer", vec![4.0, 0.0, 0.0, 0.0]),
                concept("cyst", "smooth cyst", vec![-4.0, 0.0, 0.0, 0.0]),
            ],
        }
    }

    fn spec_b() -> DomainSpec {
        let mut s = spec_a();
        s.domain_id = "siteB".into();
        s.concepts = vec![
            concept("nodule", "dense nodule", vec![0.0, 4.0, 0.0, 0.0]),
            concept("plaque", "scaly plaque", vec![0.0, -4.0, 0.0, 0.0]),
        ];
        s
    }

    fn synth(spec: &DomainSpec, seed: u64) -> DomainDataset {
        let kb = AttributeKb::new();
        let vocab = build_vocab(&[spec_a(), spec_b()], &kb, seed).unwrap();
        synth_domain(spec, &kb, &vocab, domain_seed(seed, &spec.domain_id)).unwrap()
    }

    #[test]
    fn counts_and_shapes_match_spec() {
        let ds = synth(&spec_a(), 7);
        assert_eq!(ds.train.len(), 200);
        assert_eq!(ds.test.len(), 100);
        for s in ds.train.iter().chain(&ds.test) {
            assert_eq!(s.n_regions(), 8);
            assert_eq!(s.n_phrases(), 2);
            assert_eq!(s.targets.len(), 8);
            assert!(s.targets.iter().all(|row| row.len() == 2));
        }
    }

    #[test]
    fn same_spec_and_seed_is_bit_identical() {
        assert_eq!(synth(&spec_a(), 7), synth(&spec_a(), 7));
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(synth(&spec_a(), 7), synth(&spec_a(), 8));
    }

    #[test]
    fn zero_overlap_gives_disjoint_token_sets() {
        let a = synth(&spec_a(), 7);
        let b = synth(&spec_b(), 7);
        let ids = |ds: &DomainDataset| -> BTreeSet<usize> {
            ds.train
                .iter()
                .chain(&ds.test)
                .flat_map(|s| s.phrases.iter().flatten().copied())
                .collect()
        };
        let ids_a = ids(&a);
        let ids_b = ids(&b);
        assert!(ids_a.is_disjoint(&ids_b), "token sets overlap: {ids_a:?} vs {ids_b:?}");
    }

    #[test]
    fn full_overlap_shares_the_pool() {
        let mut sa = spec_a();
        let mut sb = spec_b();
        sa.vocab_overlap = 1.0;
        sb.vocab_overlap = 1.0;
        let kb = AttributeKb::new();
        let vocab = build_vocab(&[sa.clone(), sb.clone()], &kb, 7).unwrap();
        for spec in [&sa, &sb] {
            let phrases =
                domain_phrases(spec, &kb, domain_seed(7, &spec.domain_id)).unwrap();
            for word in phrases.iter().flat_map(|p| p.split_whitespace()) {
                assert!(SHARED_POOL.contains(&word), "word {word:?} not from shared pool");
            }
        }
        drop(vocab);
    }

    #[test]
    fn generated_samples_satisfy_invariants() {
        let ds = synth(&spec_a(), 11);
        ds.validate().unwrap();
        // each sample has exactly concepts_per_sample x positives_per_concept
        // positive cells and at least one all-zero distractor column
        for s in &ds.train {
            let total: u32 = s.targets.iter().flatten().map(|&t| u32::from(t)).sum();
            assert_eq!(total, 2);
            let zero_cols = (0..s.n_phrases())
                .filter(|&j| s.targets.iter().all(|row| row[j] == 0))
                .count();
            assert_eq!(zero_cols, 1);
        }
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut bad = spec_a();
        bad.train_count = 0;
        let kb = AttributeKb::new();
        let vocab = build_vocab(&[spec_a()], &kb, 1).unwrap();
        assert!(synth_domain(&bad, &kb, &vocab, 1).is_err());
    }

    #[test]
    fn masked_token_never_appears_in_phrases() {
        let ds = synth(&spec_a(), 3);
        let masked = ds.vocab.lookup(crate::data::vocab::MASKED_TOKEN).unwrap();
        for s in ds.train.iter().chain(&ds.test) {
            assert!(s.phrases.iter().flatten().all(|&id| id != masked));
        }
    }
}
