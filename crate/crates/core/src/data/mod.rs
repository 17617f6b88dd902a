//! Synthetic shifted domains: vocabulary, prompts, generation, and dataset IO.

mod io;
mod kb;
mod sample;
mod spec;
mod synth;
mod vocab;

pub use io::{load_dataset, save_dataset};
pub use kb::{build_prompt, AttributeKb};
pub use sample::{k_shot_subsample, DomainDataset, Sample};
pub use spec::{ConceptSpec, DomainSpec};
pub use synth::{build_vocab, domain_phrases, domain_seed, synth_domain};
pub use vocab::{tokenize, Vocabulary, MASKED_TOKEN, UNK_ID, UNK_TOKEN};
